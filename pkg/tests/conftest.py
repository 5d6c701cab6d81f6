"""
Configuration pytest et fixtures communes pour les tests massDpo
"""
import importlib.util
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

# Ajouter la racine du dépôt au path pour les imports lib.*
ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT))

from lib.config import Config
from lib.selector import PreparedPool, RawPool, prepare_pool


def make_design_pool(v, alpha0=1.0, pool_id="design", s=None):
    """PreparedPool construit directement à partir des vecteurs v_i⁰ (φ = v, q uniforme)."""
    v = np.asarray(v, dtype=np.float64)
    n, d = v.shape
    s = np.zeros(n) if s is None else np.asarray(s, dtype=np.float64)
    return PreparedPool(
        pool_id=pool_id, dim=d, n_candidates=n, phi=v.copy(), b=np.zeros(n), s=s,
        q0=np.full(n, 1.0 / n), phi_bar0=np.zeros(d), v0=v, z_c0=-np.log(n),
        alpha0=alpha0, beta=1.0,
    )


def make_raw_pool(rng, dim, n_candidates, pool_id="000", ref_scale=1.0):
    """RawPool gaussien aléatoire."""
    return RawPool(
        pool_id=pool_id,
        preferred_features=rng.normal(size=dim),
        candidate_features=rng.normal(size=(n_candidates, dim)),
        logp_ref_preferred=float(rng.normal() * ref_scale - 3.0),
        logp_ref_candidates=rng.normal(size=n_candidates) * ref_scale - 3.0,
    )


def make_prepared_pool(rng, dim, n_candidates, beta=0.1, pool_id="000"):
    raw = make_raw_pool(rng, dim, n_candidates, pool_id)
    return prepare_pool(raw, rng.normal(size=dim) * 0.5, beta)


@pytest.fixture
def temp_dir():
    """Répertoire temporaire pour les tests"""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)


@pytest.fixture
def config_instance(temp_dir):
    """Instance Config pour les tests avec fichier temporaire"""
    return Config(str(temp_dir / "test_config.json"))


@pytest.fixture
def three_candidate_pool():
    """v-set {(2,0), (1.9,0), (0,1)} avec α₀ = 1"""
    return make_design_pool([[2.0, 0.0], [1.9, 0.0], [0.0, 1.0]], alpha0=1.0)


@pytest.fixture
def random_prepared_pool():
    """Fabrique de pools préparés aléatoires"""
    def factory(seed, dim=4, n_candidates=10, beta=0.1):
        return make_prepared_pool(np.random.default_rng(seed), dim, n_candidates, beta)
    return factory


@pytest.fixture
def cli_module():
    """Module bin/massDpo.py chargé en mémoire"""
    spec = importlib.util.spec_from_file_location("massDpo", ROOT / "bin" / "massDpo.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


@pytest.fixture
def cli(temp_dir, cli_module):
    """main() de bin/massDpo.py; la configuration pointe vers temp_dir."""
    config_file = str(temp_dir / "cli_config.json")

    def run(*args):
        return cli_module.main([*args, "--config-file", config_file])
    return run
