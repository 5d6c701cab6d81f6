#!/bin/env python3
"""
Générateur déterministe de pools synthétiques.

Chaque pool tire c centres gaussiens, répartit N items en tourniquet sur les
centres avec un bruit σ_dup (quasi-doublons), choisit la réponse préférée
selon une politique vraie log-linéaire (tirage de Plackett–Luce ou argmax),
et calcule les log-probabilités d'une politique de référence log-linéaire.
"""
import functools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, softmax

from lib.errors import InvalidArgumentError
from lib.rng import MASK64, Xoshiro256, stream_seed
from lib.selector import RawPool
from lib.workers import ordered_map

PREFERRED_RULES = ("pl-sample", "argmax")
CLIP_FACTOR = 10.0
# flux réservé au tirage de theta_true
THETA_STREAM = MASK64


@dataclass
class SynthConfig:
    """Paramètres du générateur."""
    dim: int = 16
    pools: int = 10
    candidates_per_pool: int = 64
    clusters: int = 8
    cluster_noise: float = 0.05
    feature_scale: float = 1.0
    theta_true: np.ndarray | None = None
    theta_ref: np.ndarray | None = None
    preferred_rule: str = "pl-sample"
    seed: int = 0

    def validate(self) -> None:
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidArgumentError(f"dim doit être ≥ 1 (reçu {self.dim})")
        if int(self.pools) != self.pools or self.pools < 0:
            raise InvalidArgumentError(f"pools doit être ≥ 0 (reçu {self.pools})")
        if int(self.candidates_per_pool) != self.candidates_per_pool or self.candidates_per_pool < 2:
            raise InvalidArgumentError(f"candidates_per_pool doit être ≥ 2 (reçu {self.candidates_per_pool})")
        if int(self.clusters) != self.clusters or not 1 <= self.clusters <= self.candidates_per_pool:
            raise InvalidArgumentError(
                f"clusters doit être dans [1, {self.candidates_per_pool}] (reçu {self.clusters})")
        if not self.cluster_noise >= 0:
            raise InvalidArgumentError(f"cluster_noise doit être ≥ 0 (reçu {self.cluster_noise})")
        if not self.feature_scale > 0:
            raise InvalidArgumentError(f"feature_scale doit être > 0 (reçu {self.feature_scale})")
        if self.preferred_rule not in PREFERRED_RULES:
            raise InvalidArgumentError(f"preferred_rule inconnu: {self.preferred_rule}")
        for name in ("theta_true", "theta_ref"):
            vector = getattr(self, name)
            if vector is not None and np.asarray(vector).shape != (self.dim,):
                raise InvalidArgumentError(f"{name} doit être de longueur {self.dim}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= MASK64:
            raise InvalidArgumentError(f"seed doit être un entier 64 bits (reçu {self.seed})")


def resolve_theta_true(cfg: SynthConfig) -> np.ndarray:
    """theta_true fourni, sinon vecteur gaussien normalisé tiré sur un flux dédié."""
    if cfg.theta_true is not None:
        return np.asarray(cfg.theta_true, dtype=np.float64)
    rng = Xoshiro256(stream_seed(cfg.seed, THETA_STREAM))
    theta = rng.normals(cfg.dim)
    norm = float(np.linalg.norm(theta))
    return theta / norm if norm > 0 else theta


def gen_pool(cfg: SynthConfig, pool_index: int) -> RawPool:
    """
    Génère le pool d'index `pool_index` à partir d'un flux dérivé de (seed, index).

    Ordre des tirages: centres, bruit de chaque item, puis éventuellement
    l'uniforme du tirage de Plackett–Luce.
    """
    cfg.validate()
    rng = Xoshiro256(stream_seed(cfg.seed, pool_index))
    dim, total = int(cfg.dim), int(cfg.candidates_per_pool)
    scale = float(cfg.feature_scale)

    centers = np.array([rng.normals(dim) * scale for _ in range(int(cfg.clusters))])
    features = np.empty((total, dim))
    for item in range(total):
        features[item] = centers[item % len(centers)] + cfg.cluster_noise * rng.normals(dim)
    features = np.clip(features, -CLIP_FACTOR * scale, CLIP_FACTOR * scale)

    theta_true = resolve_theta_true(cfg)
    rewards = features @ theta_true
    if cfg.preferred_rule == "pl-sample":
        preferred = rng.categorical(softmax(rewards))
    else:
        preferred = int(np.argmax(rewards))

    if cfg.theta_ref is None:
        ref_scores = np.zeros(total)
    else:
        ref_scores = features @ np.asarray(cfg.theta_ref, dtype=np.float64)
    logp_ref = log_softmax(ref_scores)

    return RawPool(
        pool_id=f"{pool_index:03d}",
        preferred_features=features[preferred],
        candidate_features=np.delete(features, preferred, axis=0),
        logp_ref_preferred=float(logp_ref[preferred]),
        logp_ref_candidates=np.delete(logp_ref, preferred),
        theta_true=theta_true,
    )


def gen_dataset(cfg: SynthConfig, workers: int = 1) -> list[RawPool]:
    """Génère les pools 0..k−1; le résultat ne dépend pas de `workers`."""
    cfg.validate()
    logging.info(f"Génération de {cfg.pools} pools (d={cfg.dim}, N={cfg.candidates_per_pool}, "
                 f"c={cfg.clusters}, seed={cfg.seed})")
    return ordered_map(functools.partial(gen_pool, cfg), range(int(cfg.pools)), workers)
