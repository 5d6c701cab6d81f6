"""
Tests du générateur pseudo-aléatoire et des pools synthétiques
"""
import math

import numpy as np
import pytest

from lib.errors import InvalidArgumentError
from lib.formats import dump_json_line, pool_to_record
from lib.rng import MASK64, Xoshiro256, derive_seed, splitmix64, stream_seed
from lib.selector import prepare_pool
from lib.synth import CLIP_FACTOR, SynthConfig, gen_dataset, gen_pool, resolve_theta_true


def pool_bytes(pool):
    return dump_json_line(pool_to_record(pool))


class TestRng:
    """Tests de splitmix64 et xoshiro256**"""

    def test_splitmix64_valeur_connue(self):
        """Première sortie depuis l'état 0"""
        assert splitmix64(0) == 0xE220A8397B1DCDAF

    def test_derive_seed(self):
        """derive_seed = splitmix64(master XOR index)"""
        assert derive_seed(7, 3) == splitmix64(7 ^ 3)
        assert derive_seed(5, 5) == splitmix64(0)
        assert 0 <= derive_seed(MASK64, 1) <= MASK64

    def test_stream_seed(self):
        """stream_seed = splitmix64(splitmix64(master) XOR index), sans collision entre graines voisines"""
        assert stream_seed(7, 3) == splitmix64(splitmix64(7) ^ 3)
        assert stream_seed(0, 1) != stream_seed(1, 0)
        seeds = {stream_seed(master, index) for master in range(16) for index in range(16)}
        assert len(seeds) == 256

    def test_flux_deterministe(self):
        """Même graine: même flux; graines différentes: flux différents"""
        a, b, c = Xoshiro256(42), Xoshiro256(42), Xoshiro256(43)
        first = [a.next_u64() for _ in range(10)]
        assert first == [b.next_u64() for _ in range(10)]
        assert first != [c.next_u64() for _ in range(10)]
        assert all(0 <= x <= MASK64 for x in first)

    def test_uniformes_dans_intervalle(self):
        """random() dans [0, 1), below(k) dans [0, k)"""
        rng = Xoshiro256(1)
        values = [rng.random() for _ in range(1000)]
        assert all(0.0 <= u < 1.0 for u in values)
        assert all(0 <= rng.below(7) < 7 for _ in range(1000))

    def test_gaussiennes_moments(self):
        """10⁴ gaussiennes: moyenne ≈ 0 et variance ≈ 1"""
        samples = Xoshiro256(2).normals(10_000)
        assert np.all(np.isfinite(samples))
        assert abs(samples.mean()) <= 4 / math.sqrt(10_000)
        assert abs(samples.var() - 1.0) <= 0.06

    def test_gaussiennes_par_paires(self):
        """normals(2k) reproduit k appels appariés de normal()"""
        a, b = Xoshiro256(3), Xoshiro256(3)
        np.testing.assert_array_equal(a.normals(6), [b.normal() for _ in range(6)])

    def test_categorique_frequence(self):
        """Poids (2, 1): index 0 tiré avec fréquence ≈ 2/3 (4 écarts-types)"""
        rng = Xoshiro256(4)
        draws = 10_000
        hits = sum(rng.categorical([2.0, 1.0]) == 0 for _ in range(draws))
        stderr = math.sqrt((2 / 3) * (1 / 3) / draws)
        assert abs(hits / draws - 2 / 3) <= 4 * stderr

    def test_categorique_poids_nuls_ignores(self):
        """Les index de poids nul ne sont jamais tirés"""
        rng = Xoshiro256(5)
        assert all(rng.categorical([0.0, 1.0, 0.0, 2.0]) in (1, 3) for _ in range(500))


class TestGenPool:
    """Tests de gen_pool"""

    def test_groupe_degenere(self):
        """σ = 0, c = 1: caractéristiques identiques, φ = 0 et v⁰ = 0"""
        cfg = SynthConfig(dim=3, pools=1, candidates_per_pool=6, clusters=1, cluster_noise=0.0, seed=9)
        raw = gen_pool(cfg, 0)
        np.testing.assert_array_equal(raw.candidate_features, np.tile(raw.preferred_features, (5, 1)))
        pool = prepare_pool(raw, np.zeros(3), 0.1)
        np.testing.assert_array_equal(pool.phi, np.zeros((5, 3)))
        np.testing.assert_array_equal(pool.v0, np.zeros((5, 3)))

    def test_reference_nulle_offsets_nuls(self):
        """θ_ref = 0: log-probabilités égales à −log N et b = 0"""
        cfg = SynthConfig(dim=4, candidates_per_pool=10, seed=1)
        raw = gen_pool(cfg, 2)
        assert raw.logp_ref_preferred == pytest.approx(-math.log(10), abs=1e-14)
        np.testing.assert_allclose(raw.logp_ref_candidates, -math.log(10), atol=1e-14)
        pool = prepare_pool(raw, np.zeros(4), 0.1)
        np.testing.assert_array_equal(pool.b, np.zeros(9))

    def test_reference_non_nulle(self):
        """θ_ref ≠ 0: log-probabilités normalisées"""
        cfg = SynthConfig(dim=4, candidates_per_pool=10, theta_ref=np.ones(4), seed=1)
        raw = gen_pool(cfg, 0)
        total = math.exp(raw.logp_ref_preferred) + np.exp(raw.logp_ref_candidates).sum()
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_deterministe(self):
        """Même configuration et index: octets identiques"""
        cfg = SynthConfig(dim=5, candidates_per_pool=12, clusters=3, seed=7)
        assert pool_bytes(gen_pool(cfg, 4)) == pool_bytes(gen_pool(cfg, 4))

    def test_dimensions_et_bornes(self):
        """N−1 candidats, d colonnes, caractéristiques bornées par 10·échelle"""
        cfg = SynthConfig(dim=3, candidates_per_pool=8, clusters=2, cluster_noise=50.0, feature_scale=0.5, seed=3)
        raw = gen_pool(cfg, 0)
        assert raw.candidate_features.shape == (7, 3)
        assert raw.logp_ref_candidates.shape == (7,)
        bound = CLIP_FACTOR * cfg.feature_scale
        assert np.all(np.abs(raw.candidate_features) <= bound)
        assert np.all(np.abs(raw.preferred_features) <= bound)

    def test_regle_argmax(self):
        """argmax: la réponse préférée maximise la récompense vraie"""
        cfg = SynthConfig(dim=4, candidates_per_pool=15, preferred_rule="argmax", seed=11)
        raw = gen_pool(cfg, 0)
        theta = resolve_theta_true(cfg)
        assert raw.preferred_features @ theta >= np.max(raw.candidate_features @ theta)

    def test_theta_true_unitaire(self):
        """theta_true tiré: norme 1, identique pour tous les pools"""
        cfg = SynthConfig(dim=6, seed=5)
        theta = resolve_theta_true(cfg)
        assert np.linalg.norm(theta) == pytest.approx(1.0, abs=1e-14)
        np.testing.assert_array_equal(gen_pool(cfg, 0).theta_true, gen_pool(cfg, 1).theta_true)

    @pytest.mark.parametrize("kwargs", [
        dict(dim=0), dict(candidates_per_pool=1), dict(clusters=0), dict(clusters=100),
        dict(cluster_noise=-0.1), dict(preferred_rule="max"), dict(theta_true=np.ones(3)),
    ])
    def test_configuration_invalide(self, kwargs):
        """Paramètres hors domaine refusés"""
        with pytest.raises(InvalidArgumentError):
            SynthConfig(**{"dim": 4, "candidates_per_pool": 10, **kwargs}).validate()


class TestGenDataset:
    """Tests de gen_dataset"""

    def test_zero_pool(self):
        """k = 0: liste vide"""
        assert gen_dataset(SynthConfig(pools=0)) == []

    def test_identifiants(self):
        """k = 3: "000", "001", "002" """
        pools = gen_dataset(SynthConfig(dim=2, pools=3, candidates_per_pool=4, clusters=2))
        assert [p.pool_id for p in pools] == ["000", "001", "002"]

    def test_pools_distincts(self):
        """Graines dérivées distinctes: aucun couple de pools identiques"""
        pools = gen_dataset(SynthConfig(dim=3, pools=20, candidates_per_pool=6, clusters=2, seed=1))
        payloads = {pool_bytes(p).replace(f'"{p.pool_id}"', "") for p in pools}
        assert len(payloads) == 20

    def test_graines_voisines_sans_pool_commun(self):
        """Graines 0 et 1: aucun pool du premier jeu ne réapparaît dans le second"""
        cfg = dict(dim=3, pools=6, candidates_per_pool=6, clusters=2, theta_true=np.array([1.0, 0.0, 0.0]))
        first = {pool_bytes(p).replace(f'"{p.pool_id}"', "") for p in gen_dataset(SynthConfig(seed=0, **cfg))}
        second = {pool_bytes(p).replace(f'"{p.pool_id}"', "") for p in gen_dataset(SynthConfig(seed=1, **cfg))}
        assert first.isdisjoint(second)

    def test_serie_et_parallele_identiques(self):
        """workers=1 et workers=2: pools identiques octet pour octet"""
        cfg = SynthConfig(dim=4, pools=5, candidates_per_pool=8, clusters=3, seed=7)
        serial = [pool_bytes(p) for p in gen_dataset(cfg, workers=1)]
        parallel = [pool_bytes(p) for p in gen_dataset(cfg, workers=2)]
        assert serial == parallel
