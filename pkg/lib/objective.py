#!/bin/env python3
"""
Perte DPO multi-négatifs de Plackett–Luce sous une politique log-linéaire.

Pour un sous-ensemble S de négatifs d'un pool préparé:
    s_j = β(φ_jᵀθ + b_j),  Z = −LSE(s),  L = −log σ(Z)
avec gradient β(1−σ(Z)) φ̄ et hessienne
    β²(1−σ(Z)) [σ(Z) φ̄φ̄ᵀ + Σ q_j (φ_j−φ̄)(φ_j−φ̄)ᵀ].

Les fonctions sont pures: le pool n'est jamais modifié et β est un paramètre
d'appel.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit, logsumexp, softmax

from lib.errors import InvalidArgumentError


@dataclass
class PolicyParams:
    """Vecteur θ d'une politique log-linéaire, avec les métadonnées d'ajustement éventuelles."""
    theta: np.ndarray
    meta: dict | None = None

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.ndim != 1:
            raise InvalidArgumentError("theta doit être un vecteur")
        if not np.all(np.isfinite(self.theta)):
            raise InvalidArgumentError("theta contient des valeurs non finies")


@dataclass
class LossEvaluation:
    """Résultat d'une évaluation de la perte sur un sous-ensemble."""
    loss: float
    z: float
    weights: np.ndarray
    mean_feature: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray | None = None
    hessian_lower_bound: np.ndarray | None = None
    subset: list[int] = field(default_factory=list)


def as_theta(theta, dim: int | None = None) -> np.ndarray:
    """Accepte un PolicyParams ou un tableau et retourne le vecteur θ."""
    if isinstance(theta, PolicyParams):
        vector = theta.theta
    else:
        vector = np.asarray(theta, dtype=np.float64)
    if vector.ndim != 1:
        raise InvalidArgumentError("theta doit être un vecteur")
    if dim is not None and vector.shape[0] != dim:
        raise InvalidArgumentError(f"theta de longueur {vector.shape[0]}, attendu {dim}")
    return vector


def check_subset(subset, n_candidates: int) -> np.ndarray:
    """Valide une liste d'indices: non vide, entiers dans [0, N), sans doublon."""
    indices = np.asarray(list(subset))
    if indices.size == 0:
        raise InvalidArgumentError("Sous-ensemble vide")
    if indices.ndim != 1 or not np.issubdtype(indices.dtype, np.integer):
        raise InvalidArgumentError("Le sous-ensemble doit être une liste d'entiers")
    if indices.min() < 0 or indices.max() >= n_candidates:
        raise InvalidArgumentError(f"Index hors de [0, {n_candidates})")
    if np.unique(indices).size != indices.size:
        raise InvalidArgumentError("Index en double dans le sous-ensemble")
    return indices.astype(np.intp)


def _check_beta(beta: float) -> None:
    if not beta > 0:
        raise InvalidArgumentError(f"beta doit être > 0 (reçu {beta})")


def subset_scores(pool, theta, subset, beta: float) -> np.ndarray:
    """Scores β(φ_jᵀθ + b_j) dans l'ordre du sous-ensemble."""
    _check_beta(beta)
    indices = check_subset(subset, pool.n_candidates)
    vector = as_theta(theta, pool.dim)
    return beta * (pool.phi[indices] @ vector + pool.b[indices])


def evaluate(pool, theta, subset, beta: float, with_hessian: bool = False) -> LossEvaluation:
    """
    Évalue perte, poids, gradient et, sur demande, hessienne et borne de Loewner.

    Z est calculé par log-sum-exp décalé et −log σ(Z) sous forme softplus.
    """
    indices = check_subset(subset, pool.n_candidates)
    scores = subset_scores(pool, theta, indices, beta)
    z = -float(logsumexp(scores))
    weights = softmax(scores)
    phi_s = pool.phi[indices]
    mean_feature = weights @ phi_s
    sig = float(expit(z))
    one_minus = float(expit(-z))
    evaluation = LossEvaluation(
        loss=-float(log_expit(z)),
        z=z,
        weights=weights,
        mean_feature=mean_feature,
        gradient=beta * one_minus * mean_feature,
        subset=[int(i) for i in indices],
    )
    if with_hessian:
        centered = phi_s - mean_feature
        dispersion = centered.T @ (weights[:, None] * centered)
        scale = beta * beta * one_minus
        lower = scale * dispersion
        evaluation.hessian_lower_bound = 0.5 * (lower + lower.T)
        full = scale * (sig * np.outer(mean_feature, mean_feature) + dispersion)
        evaluation.hessian = 0.5 * (full + full.T)
    return evaluation


def loss(pool, theta, subset, beta: float) -> LossEvaluation:
    """Perte L = −log σ(Z) avec z, poids et caractéristique moyenne renseignés."""
    return evaluate(pool, theta, subset, beta)


def gradient(pool, theta, subset, beta: float) -> np.ndarray:
    return evaluate(pool, theta, subset, beta).gradient


def hessian(pool, theta, subset, beta: float) -> np.ndarray:
    return evaluate(pool, theta, subset, beta, with_hessian=True).hessian


def hessian_lower_bound(pool, theta, subset, beta: float) -> np.ndarray:
    """β²(1−σ(Z)) Σ q_j (φ_j−φ̄)(φ_j−φ̄)ᵀ, minorant de Loewner de la hessienne."""
    return evaluate(pool, theta, subset, beta, with_hessian=True).hessian_lower_bound


def loss_change(pool, theta, step, subset, beta: float) -> float:
    """
    L(θ + p; S) − L(θ; S) sous forme de différence.

    Avec Δs = βΦ_S p et q = softmax(s):
        LSE(s + Δs) − LSE(s) = log(1 + Σ q_j (e^{Δs_j} − 1))
        softplus(x + h) − softplus(x) = log(1 + σ(x)(e^h − 1)),  x = −Z
    L'écart reste exact à l'arrondi relatif près quand les deux pertes
    coïncident à l'arrondi absolu près (voisinage du minimiseur).
    """
    indices = check_subset(subset, pool.n_candidates)
    scores = subset_scores(pool, theta, indices, beta)
    shift = beta * (pool.phi[indices] @ as_theta(step, pool.dim))
    z = -float(logsumexp(scores))
    if float(np.max(np.abs(shift))) <= 1.0:
        lse_change = float(np.log1p(softmax(scores) @ np.expm1(shift)))
    else:
        lse_change = float(logsumexp(scores + shift)) + z
    if abs(lse_change) <= 1.0:
        return float(np.log1p(float(expit(-z)) * np.expm1(lse_change)))
    return float(log_expit(z) - log_expit(z - lse_change))
