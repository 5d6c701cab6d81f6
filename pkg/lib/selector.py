#!/bin/env python3
"""
Sélection active D-optimale des négatifs.

Préparation d'un pool (différences de caractéristiques, offsets de référence,
poids softmax, échelle de Fisher α₀), construction gloutonne du sous-ensemble
maximisant log det(γI + α₀ Σ v vᵀ), oracle exhaustif et stratégies de
référence (aléatoire, softmax, top-k, pool complet).
"""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp, softmax

from lib.errors import CapacityExceededError, InvalidArgumentError
from lib.linalg import REFRESH_INTERVAL, init_information, spd_logdet
from lib.objective import as_theta
from lib.rng import Xoshiro256

Q_FLOOR = 1e-300
BRUTE_FORCE_LIMIT = 2_000_000

GREEDY_STRATEGIES = ("mass", "mass-reselect")
BASELINE_STRATEGIES = ("random", "softmax", "topk", "full")
STRATEGIES = GREEDY_STRATEGIES + BASELINE_STRATEGIES + ("brute",)
STOCHASTIC_STRATEGIES = ("random", "softmax")


@dataclass
class RawPool:
    """Un prompt: réponse préférée, négatifs candidats et log-probabilités de référence."""
    pool_id: str
    preferred_features: np.ndarray
    candidate_features: np.ndarray
    logp_ref_preferred: float
    logp_ref_candidates: np.ndarray
    theta_true: np.ndarray | None = None

    def __post_init__(self):
        self.preferred_features = np.asarray(self.preferred_features, dtype=np.float64)
        self.candidate_features = np.asarray(self.candidate_features, dtype=np.float64)
        self.logp_ref_candidates = np.asarray(self.logp_ref_candidates, dtype=np.float64)
        self.logp_ref_preferred = float(self.logp_ref_preferred)
        if self.theta_true is not None:
            self.theta_true = np.asarray(self.theta_true, dtype=np.float64)
        self.validate()

    @property
    def dim(self) -> int:
        return self.preferred_features.shape[0]

    @property
    def n_candidates(self) -> int:
        return self.candidate_features.shape[0]

    def validate(self) -> None:
        if self.preferred_features.ndim != 1 or self.preferred_features.shape[0] < 1:
            raise InvalidArgumentError(f"Pool {self.pool_id}: vecteur préféré invalide")
        if self.candidate_features.ndim != 2 or self.candidate_features.shape[0] < 1:
            raise InvalidArgumentError(f"Pool {self.pool_id}: il faut au moins un candidat")
        if self.candidate_features.shape[1] != self.dim:
            raise InvalidArgumentError(
                f"Pool {self.pool_id}: candidats de dimension {self.candidate_features.shape[1]}, attendu {self.dim}")
        if self.logp_ref_candidates.shape != (self.n_candidates,):
            raise InvalidArgumentError(
                f"Pool {self.pool_id}: {self.logp_ref_candidates.size} log-probabilités pour {self.n_candidates} candidats")
        if self.theta_true is not None and self.theta_true.shape != (self.dim,):
            raise InvalidArgumentError(f"Pool {self.pool_id}: theta_true de mauvaise dimension")
        values = [self.preferred_features, self.candidate_features, self.logp_ref_candidates,
                  np.array([self.logp_ref_preferred])]
        if not all(np.all(np.isfinite(v)) for v in values):
            raise InvalidArgumentError(f"Pool {self.pool_id}: valeurs non finies")


@dataclass
class PreparedPool:
    """Quantités prétraitées d'un pool pour θ₀ et β fixés."""
    pool_id: str
    dim: int
    n_candidates: int
    phi: np.ndarray
    b: np.ndarray
    s: np.ndarray
    q0: np.ndarray
    phi_bar0: np.ndarray
    v0: np.ndarray
    z_c0: float
    alpha0: float
    beta: float


@dataclass
class SelectionResult:
    """Sous-ensemble sélectionné et trajectoire du log-déterminant."""
    pool_id: str
    strategy: str
    selected: list[int]
    gains: list[float]
    quads: list[float]
    logdet_trajectory: list[float]
    seed: int | None = None
    n: int = 0
    truncated: bool = False
    beta: float | None = None
    gamma: float | None = None
    logdet_initial: float = 0.0

    @property
    def logdet_final(self) -> float:
        return self.logdet_trajectory[-1] if self.logdet_trajectory else self.logdet_initial


def prepare_pool(raw: RawPool, theta0, beta: float) -> PreparedPool:
    """
    Calcule φ_i, b_i, s_i, q_i⁰, φ̄₀, v_i⁰, Z_C⁰ et α₀ pour un pool brut.

    Args:
        raw: pool brut
        theta0: politique de référence pour le prétraitement (PolicyParams ou vecteur)
        beta: échelle DPO β > 0

    Returns:
        PreparedPool
    """
    if not beta > 0 or not math.isfinite(beta):
        raise InvalidArgumentError(f"beta doit être > 0 (reçu {beta})")
    theta = as_theta(theta0, raw.dim)
    if not np.all(np.isfinite(theta)):
        raise InvalidArgumentError("theta0 contient des valeurs non finies")

    phi = raw.candidate_features - raw.preferred_features
    b = raw.logp_ref_preferred - raw.logp_ref_candidates
    s = beta * (phi @ theta + b)
    q0 = np.maximum(softmax(s), Q_FLOOR)
    phi_bar0 = q0 @ phi
    v0 = np.sqrt(q0)[:, None] * (phi - phi_bar0)
    z_c0 = -float(logsumexp(s))
    alpha0 = beta * beta * float(expit(-z_c0))
    return PreparedPool(
        pool_id=raw.pool_id,
        dim=raw.dim,
        n_candidates=raw.n_candidates,
        phi=phi,
        b=b,
        s=s,
        q0=q0,
        phi_bar0=phi_bar0,
        v0=v0,
        z_c0=z_c0,
        alpha0=alpha0,
        beta=float(beta),
    )


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidArgumentError(f"n doit être un entier ≥ 1 (reçu {n})")
    return int(n)


def _check_gamma(gamma: float) -> float:
    if not gamma > 0 or not math.isfinite(gamma):
        raise InvalidArgumentError(f"gamma doit être > 0 (reçu {gamma})")
    return float(gamma)


def replay_design(pool: PreparedPool, indices, gamma: float,
                  refresh_interval: int = REFRESH_INTERVAL):
    """
    Rejoue une séquence d'index sur H_0 = γI avec l'échelle α₀ du pool.

    Returns:
        tuple: (gains, quads, trajectoire de log det, état final)
    """
    state = init_information(gamma, pool.alpha0, pool.dim, refresh_interval)
    gains, quads, trajectory = [], [], []
    for index in indices:
        v = pool.v0[index]
        quad = state.quad_form(v)
        gains.append(float(np.log1p(pool.alpha0 * quad)))
        quads.append(quad)
        state.apply_update(v)
        trajectory.append(state.logdet)
    return gains, quads, trajectory, state


def greedy_select(pool: PreparedPool, n: int, gamma: float, reselection: bool = False,
                  criterion: str = "quad", refresh_interval: int = REFRESH_INTERVAL) -> SelectionResult:
    """
    Construction gloutonne du sous-ensemble D-optimal.

    À chaque étape l'index éligible de plus grande forme quadratique
    v_iᵀH_{k−1}⁻¹v_i est retenu (égalités: plus petit index), puis H est mis
    à jour avec α₀. Avec criterion="logdet", le critère est log det(H + α₀vvᵀ)
    recalculé par Cholesky pour chaque candidat.

    Args:
        pool: pool préparé
        n: taille du sous-ensemble
        gamma: ridge γ de H_0 = γI
        reselection: autorise la resélection d'un index déjà retenu
        criterion: "quad" ou "logdet"
        refresh_interval: période de refactorisation de H

    Returns:
        SelectionResult
    """
    n = _check_n(n)
    gamma = _check_gamma(gamma)
    if criterion not in ("quad", "logdet"):
        raise InvalidArgumentError(f"Critère inconnu: {criterion}")

    steps = n
    truncated = False
    if not reselection and n > pool.n_candidates:
        steps = pool.n_candidates
        truncated = True
        logging.warning(f"Pool {pool.pool_id}: n={n} > N={pool.n_candidates}, sélection de tous les candidats")

    state = init_information(gamma, pool.alpha0, pool.dim, refresh_interval)
    logdet_initial = state.logdet
    eligible = np.ones(pool.n_candidates, dtype=bool)
    selected, gains, quads, trajectory = [], [], [], []

    for step in range(steps):
        if criterion == "quad":
            scores = state.quad_forms(pool.v0)
        else:
            scores = np.array([spd_logdet(state.h + pool.alpha0 * np.outer(v, v)) for v in pool.v0])
        masked = np.where(eligible, scores, -np.inf)
        index = int(np.argmax(masked))
        v = pool.v0[index]
        quad = state.quad_form(v)
        gain = state.logdet_gain(v)
        state.apply_update(v)
        selected.append(index)
        gains.append(gain)
        quads.append(quad)
        trajectory.append(state.logdet)
        if not reselection:
            eligible[index] = False
        logging.debug(f"Pool {pool.pool_id}: étape {step + 1}, index {index}, x={quad:.6g}, gain={gain:.6g}")

    return SelectionResult(
        pool_id=pool.pool_id,
        strategy="mass-reselect" if reselection else "mass",
        selected=selected,
        gains=gains,
        quads=quads,
        logdet_trajectory=trajectory,
        seed=None,
        n=n,
        truncated=truncated,
        beta=pool.beta,
        gamma=gamma,
        logdet_initial=logdet_initial,
    )


def brute_force_select(pool: PreparedPool, n: int, gamma: float,
                       limit: int = BRUTE_FORCE_LIMIT) -> SelectionResult:
    """
    Énumère tous les sous-ensembles de taille n et retourne celui de log-det maximal.

    Les égalités sont départagées par l'ordre lexicographique des index.

    Raises:
        CapacityExceededError: si C(N, n) dépasse `limit`.
    """
    n = _check_n(n)
    gamma = _check_gamma(gamma)
    if n > pool.n_candidates:
        raise InvalidArgumentError(f"n={n} > N={pool.n_candidates} pour l'énumération exhaustive")
    count = math.comb(pool.n_candidates, n)
    if count > limit:
        raise CapacityExceededError(
            f"Pool {pool.pool_id}: C({pool.n_candidates}, {n}) = {count} sous-ensembles > limite {limit}")

    base = gamma * np.eye(pool.dim)
    outer = pool.alpha0 * np.einsum("ij,ik->ijk", pool.v0, pool.v0)
    best_value = -np.inf
    best_subset = None
    for subset in itertools.combinations(range(pool.n_candidates), n):
        value = spd_logdet(base + outer[list(subset)].sum(axis=0))
        if value > best_value:
            best_value = value
            best_subset = subset
    logging.debug(f"Pool {pool.pool_id}: {count} sous-ensembles énumérés, optimum {best_subset}")

    gains, quads, trajectory, state = replay_design(pool, best_subset, gamma)
    return SelectionResult(
        pool_id=pool.pool_id,
        strategy="brute",
        selected=list(best_subset),
        gains=gains,
        quads=quads,
        logdet_trajectory=trajectory,
        n=n,
        beta=pool.beta,
        gamma=gamma,
        logdet_initial=pool.dim * math.log(gamma),
    )


def baseline_select(pool: PreparedPool, n: int, strategy: str, gamma: float,
                    seed: int | None = None) -> SelectionResult:
    """
    Stratégies de référence.

    - random: tirage uniforme sans remise (Fisher–Yates partiel)
    - softmax: tirages séquentiels sans remise proportionnels à q_i⁰
    - topk: les n plus grands scores s_i (égalités: plus petit index)
    - full: tous les candidats dans l'ordre (n ignoré)

    Les gains sont enregistrés contre γI pour comparaison avec la sélection gloutonne.
    """
    if strategy not in BASELINE_STRATEGIES:
        raise InvalidArgumentError(f"Stratégie de référence inconnue: {strategy}")
    gamma = _check_gamma(gamma)
    total = pool.n_candidates
    if strategy == "full":
        n = total
        selected = list(range(total))
    else:
        n = _check_n(n)
        if n > total:
            raise InvalidArgumentError(f"n={n} > N={total} pour la stratégie {strategy}")

    if strategy in STOCHASTIC_STRATEGIES:
        if seed is None:
            seed = 0
        rng = Xoshiro256(seed)
        if strategy == "random":
            order = list(range(total))
            for k in range(n):
                j = k + rng.below(total - k)
                order[k], order[j] = order[j], order[k]
            selected = order[:n]
        else:
            weights = pool.q0.copy()
            selected = []
            for _ in range(n):
                index = rng.categorical(weights)
                selected.append(index)
                weights[index] = 0.0
    elif strategy == "topk":
        selected = [int(i) for i in np.argsort(-pool.s, kind="stable")[:n]]
        seed = None
    else:
        seed = None

    gains, quads, trajectory, _ = replay_design(pool, selected, gamma)
    return SelectionResult(
        pool_id=pool.pool_id,
        strategy=strategy,
        selected=[int(i) for i in selected],
        gains=gains,
        quads=quads,
        logdet_trajectory=trajectory,
        seed=seed,
        n=n,
        beta=pool.beta,
        gamma=gamma,
        logdet_initial=pool.dim * math.log(gamma),
    )


def select_negatives(pool: PreparedPool, strategy: str, n: int, gamma: float,
                     seed: int | None = None, criterion: str = "quad",
                     brute_force_limit: int = BRUTE_FORCE_LIMIT) -> SelectionResult:
    """
    Point d'entrée commun à toutes les stratégies.

    Pour les stratégies sans remise, n > N est tronqué à N avec un avertissement.
    """
    if strategy not in STRATEGIES:
        raise InvalidArgumentError(f"Stratégie inconnue: {strategy} (choix: {', '.join(STRATEGIES)})")
    if strategy in GREEDY_STRATEGIES:
        return greedy_select(pool, n, gamma, reselection=(strategy == "mass-reselect"), criterion=criterion)

    requested = _check_n(n)
    effective = requested
    if strategy != "full" and requested > pool.n_candidates:
        logging.warning(f"Pool {pool.pool_id}: n={requested} > N={pool.n_candidates}, troncature à N")
        effective = pool.n_candidates
    if strategy == "brute":
        result = brute_force_select(pool, effective, gamma, limit=brute_force_limit)
    else:
        result = baseline_select(pool, effective, strategy, gamma, seed)
    if strategy != "full":
        result.n = requested
        result.truncated = effective < requested
    return result
