#!/bin/env python3
"""
Métriques de vérification et de benchmark.

- erreur relative de logit entre θ̂ (sous-ensemble) et θ* (pool complet)
- inégalité de stabilité de l'estimateur (pool unique et lot)
- diagnostics de leverage, bornes B_n et borne de lot
- métriques de classement (Recall@k, NDCG@k, MRR, marge)
- stabilité d'une sélection entre deux points de contrôle
- expérience de décroissance de l'erreur en fonction de n
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh
from scipy.special import expit, logsumexp

from lib.errors import InvalidArgumentError, MassDpoError
from lib.linalg import init_information, spd_logdet
from lib.objective import as_theta, gradient, hessian
from lib.rng import derive_seed
from lib.selector import (STOCHASTIC_STRATEGIES, STRATEGIES, greedy_select, prepare_pool,
                          replay_design, select_negatives)
from lib.trainer import TrainConfig, fit, fit_full
from lib.workers import ordered_map

STABILITY_TOLERANCE = 1e-9
CURVATURE_SAMPLES = 11
# tendances attendues de mass sur le benchmark de décroissance
DECAY_MAX_SLOPE = -0.3
DECAY_MIN_WIN = 0.6
DECAY_WIN_N = 8


@dataclass
class ErrorReport:
    """Erreur de θ̂ par rapport à θ* et contrôle de stabilité."""
    pool_id: str
    n: int
    strategy: str
    rel_logit_error: float
    theta_norm_gap: float
    stability_lhs: float = math.nan
    stability_rhs: float = math.nan
    stability_holds: bool | None = None


@dataclass
class StabilityCheck:
    lhs: float
    rhs: float
    holds: bool


@dataclass
class DiagnosticsReport:
    """Constantes mesurées sur un pool et une sélection."""
    pool_id: str
    q_min0: float
    L_v0: float
    L_phi: float
    L_b: float
    kappa_empirical: float
    x_series: list[float]
    leverages: np.ndarray
    max_leverage: float
    telescoping_residual: float
    quad_cap_holds: bool
    logdet_cap_slack: float
    R_theta: float = math.nan
    rho_empirical: float = math.nan
    c_min: float = math.nan
    c_max: float = math.nan
    max_centered_leverage: float = math.nan
    bound_Bn_value: float = math.nan
    bound_holds: bool | None = None


def _delta(theta_hat, theta_star, dim: int) -> np.ndarray:
    return as_theta(theta_hat, dim) - as_theta(theta_star, dim)


def relative_logit_error(theta_hat, theta_star, pool) -> float:
    """max_{i,j} |(φ_i−φ_j)ᵀΔθ|, calculé comme l'étendue des projections φ_iᵀΔθ."""
    projections = pool.phi @ _delta(theta_hat, theta_star, pool.dim)
    return float(np.max(projections) - np.min(projections))


def stability_check(theta_hat, theta_star, pool, subset, gamma: float, beta: float) -> StabilityCheck:
    """
    ‖θ̂−θ*‖_{γI} ≤ ‖∇L(θ*;S) − ∇L(θ*;C)‖_{(γI)⁻¹}.

    Returns:
        StabilityCheck: lhs, rhs et holds = lhs ≤ rhs + 1e-9
    """
    if not gamma > 0:
        raise InvalidArgumentError(f"gamma doit être > 0 (reçu {gamma})")
    delta = _delta(theta_hat, theta_star, pool.dim)
    theta_star = as_theta(theta_star, pool.dim)
    diff = gradient(pool, theta_star, subset, beta) - gradient(pool, theta_star, range(pool.n_candidates), beta)
    lhs = math.sqrt(gamma) * float(np.linalg.norm(delta))
    rhs = float(np.linalg.norm(diff)) / math.sqrt(gamma)
    return StabilityCheck(lhs=lhs, rhs=rhs, holds=lhs <= rhs + STABILITY_TOLERANCE)


def batch_stability_check(theta_hat, theta_star, pools, subsets, gamma: float, beta: float) -> StabilityCheck:
    """Version lot: le gradient est la moyenne des gradients des k pools."""
    if not pools or len(pools) != len(subsets):
        raise InvalidArgumentError("Lot vide ou sous-ensembles incohérents")
    dim = pools[0].dim
    theta_star = as_theta(theta_star, dim)
    delta = _delta(theta_hat, theta_star, dim)
    diff = np.zeros(dim)
    for pool, subset in zip(pools, subsets):
        diff = diff + (gradient(pool, theta_star, subset, beta)
                       - gradient(pool, theta_star, range(pool.n_candidates), beta))
    diff = diff / len(pools)
    lhs = math.sqrt(gamma) * float(np.linalg.norm(delta))
    rhs = float(np.linalg.norm(diff)) / math.sqrt(gamma)
    return StabilityCheck(lhs=lhs, rhs=rhs, holds=lhs <= rhs + STABILITY_TOLERANCE)


def _check_selection(pool, selection) -> list[int]:
    if selection.pool_id != pool.pool_id:
        raise InvalidArgumentError(f"Sélection {selection.pool_id} appliquée au pool {pool.pool_id}")
    indices = [int(i) for i in selection.selected]
    if any(i < 0 or i >= pool.n_candidates for i in indices):
        raise InvalidArgumentError(f"Pool {pool.pool_id}: index de sélection hors limites")
    return indices


def leverage_diagnostics(pool, selection, gamma: float) -> DiagnosticsReport:
    """
    Rejoue la sélection et mesure leverages finaux, plafonds et κ empirique.

    κ_k = max_i quad_i(H_{k−1}) / max_{j éligible} quad_j(H_{k−1}); un rapport
    0/0 vaut 1.
    """
    indices = _check_selection(pool, selection)
    reselect = selection.strategy == "mass-reselect"
    state = init_information(gamma, pool.alpha0, pool.dim)
    logdet_initial = state.logdet
    eligible = np.ones(pool.n_candidates, dtype=bool)
    kappa = 1.0
    x_series = []
    for index in indices:
        quads = state.quad_forms(pool.v0)
        best_all = float(np.max(quads))
        best_eligible = float(np.max(quads[eligible])) if eligible.any() else 0.0
        if best_eligible > 0.0:
            kappa = max(kappa, best_all / best_eligible)
        elif best_all > 0.0:
            kappa = math.inf
        x_series.append(float(quads[index]))
        state.apply_update(pool.v0[index])
        if not reselect:
            eligible[index] = False

    L_v0 = float(np.max(np.sum(pool.v0 ** 2, axis=1)))
    leverages = state.quad_forms(pool.v0)
    gain_total = spd_logdet(state.h) - logdet_initial
    telescoping = abs(gain_total - float(np.sum(np.log1p(pool.alpha0 * np.array(x_series)))))
    cap = L_v0 / gamma
    quad_cap_holds = all(x <= cap * (1.0 + 1e-12) + 1e-15 for x in x_series)
    n = len(indices)
    logdet_cap = pool.dim * math.log1p(pool.alpha0 * n * L_v0 / (gamma * pool.dim)) if n else 0.0
    return DiagnosticsReport(
        pool_id=pool.pool_id,
        q_min0=float(np.min(pool.q0)),
        L_v0=L_v0,
        L_phi=float(np.max(np.linalg.norm(pool.phi, axis=1))),
        L_b=float(np.max(np.abs(pool.b))),
        kappa_empirical=kappa,
        x_series=x_series,
        leverages=leverages,
        max_leverage=float(np.max(leverages)),
        telescoping_residual=telescoping,
        quad_cap_holds=quad_cap_holds,
        logdet_cap_slack=logdet_cap - gain_total,
    )


def bound_Bn(d: int, n: int, alpha0: float, gamma: float, L_v0: float,
             kappa: float, rho: float, q_min0: float) -> float:
    """
    B_n = (κ/(ρ q_min⁰)) · ((1+α₀L_v⁰/γ)/α₀) · (d/n) · log(1 + α₀ n L_v⁰/(γ d)).
    """
    for name, value in (("d", d), ("n", n), ("alpha0", alpha0), ("gamma", gamma),
                        ("L_v0", L_v0), ("kappa", kappa), ("rho", rho), ("q_min0", q_min0)):
        if not value > 0:
            raise InvalidArgumentError(f"{name} doit être > 0 (reçu {value})")
    if rho > 1:
        raise InvalidArgumentError(f"rho doit être dans (0, 1] (reçu {rho})")
    if q_min0 > 1:
        raise InvalidArgumentError(f"q_min0 doit être dans (0, 1] (reçu {q_min0})")
    return ((kappa / (rho * q_min0)) * ((1.0 + alpha0 * L_v0 / gamma) / alpha0)
            * (d / n) * math.log1p(alpha0 * n * L_v0 / (gamma * d)))


def batch_bound(d: int, delta: float, k: int, c_min: float, gamma: float) -> float | None:
    """
    Borne d'erreur de l'estimateur par lot.

    Returns:
        float, ou None si 1 − c_min·k/γ ≤ 0 (borne non définie)
    """
    if not 0 < delta < 1:
        raise InvalidArgumentError(f"delta doit être dans (0, 1) (reçu {delta})")
    for name, value in (("d", d), ("k", k), ("c_min", c_min), ("gamma", gamma)):
        if not value > 0:
            raise InvalidArgumentError(f"{name} doit être > 0 (reçu {value})")
    base = 1.0 - c_min * k / gamma
    if base <= 0:
        logging.warning(f"Borne de lot non définie: 1 − c_min·k/γ = {base:.6g} ≤ 0")
        return None
    inner = (1.0 / delta + k * c_min / gamma) / (base ** (1.0 / d) * delta)
    return math.sqrt((d / 4.0) * math.log(inner)) + 2.0 * math.sqrt(gamma)


def curvature_at(pool, theta, beta: float) -> float:
    """β²(1−σ(Z_C(θ))) sur le pool complet."""
    scores = beta * (pool.phi @ as_theta(theta, pool.dim) + pool.b)
    return beta * beta * float(expit(logsumexp(scores)))


def curvature_range(pool, points, beta: float, samples: int = CURVATURE_SAMPLES) -> tuple[float, float]:
    """(c_min, c_max) de β²(1−σ(Z_C)) sur les segments reliant les points de contrôle."""
    points = [as_theta(p, pool.dim) for p in points]
    values = []
    segments = list(zip(points, points[1:]))
    if len(points) > 2:
        segments.append((points[0], points[-1]))
    if not segments:
        segments = [(points[0], points[0])]
    for start, end in segments:
        for t in np.linspace(0.0, 1.0, samples):
            values.append(curvature_at(pool, (1.0 - t) * start + t * end, beta))
    return float(min(values)), float(max(values))


def _unique_subset(indices) -> list[int]:
    return sorted(set(int(i) for i in indices))


def fisher_compatibility(pool, selection, theta_star, gamma: float, beta: float) -> float:
    """ρ = plus petite valeur propre généralisée de Σ_n = γI + ∇²L(θ*;S_n) par rapport à H_n⁰."""
    indices = _check_selection(pool, selection)
    _, _, _, state = replay_design(pool, indices, gamma)
    sigma = gamma * np.eye(pool.dim) + hessian(pool, theta_star, _unique_subset(indices), beta)
    return float(eigh(sigma, state.h, eigvals_only=True)[0])


def max_centered_leverage(pool, selection, theta_star, gamma: float, beta: float) -> float:
    """max_i (φ_i−φ̄₀)ᵀ Σ_n⁻¹ (φ_i−φ̄₀)."""
    indices = _check_selection(pool, selection)
    sigma = gamma * np.eye(pool.dim) + hessian(pool, theta_star, _unique_subset(indices), beta)
    centered = pool.phi - pool.phi_bar0
    solved = cho_solve(cho_factor(sigma, lower=True), centered.T)
    return float(np.max(np.einsum("ij,ji->i", centered, solved)))


def full_diagnostics(pool, selection, theta_star, theta_hat, gamma: float, beta: float,
                     theta0=None) -> DiagnosticsReport:
    """
    DiagnosticsReport complet: leverage, R_θ, ρ, (c_min, c_max) et B_n.

    ρ est ramené à 1 pour l'évaluation de B_n (Σ_n ⪰ ρH ⪰ H si ρ ≥ 1).
    """
    report = leverage_diagnostics(pool, selection, gamma)
    theta_star = as_theta(theta_star, pool.dim)
    theta_hat = as_theta(theta_hat, pool.dim)
    theta0 = np.zeros(pool.dim) if theta0 is None else as_theta(theta0, pool.dim)
    report.R_theta = float(max(np.linalg.norm(theta_star), np.linalg.norm(theta_hat)))
    report.rho_empirical = fisher_compatibility(pool, selection, theta_star, gamma, beta)
    report.c_min, report.c_max = curvature_range(pool, [theta0, theta_star, theta_hat], beta)
    report.max_centered_leverage = max_centered_leverage(pool, selection, theta_star, gamma, beta)
    n = len(selection.selected)
    if report.L_v0 == 0.0:
        report.bound_Bn_value = 0.0
    elif n == 0 or math.isinf(report.kappa_empirical):
        report.bound_Bn_value = math.inf
    else:
        report.bound_Bn_value = bound_Bn(pool.dim, n, pool.alpha0, gamma, report.L_v0,
                                         report.kappa_empirical, min(report.rho_empirical, 1.0),
                                         report.q_min0)
    report.bound_holds = report.max_centered_leverage <= report.bound_Bn_value * (1.0 + 1e-9) + 1e-12
    return report


def _check_ks(ks, n_items: int) -> list[int]:
    ks = [int(k) for k in ks]
    if not ks:
        raise InvalidArgumentError("La liste ks est vide")
    for k in ks:
        if not 1 <= k <= n_items:
            raise InvalidArgumentError(f"k={k} hors de [1, {n_items}]")
    return ks


def ranking_metrics(theta, pool, ks, beta: float) -> dict:
    """
    Rang de la réponse préférée parmi les N+1 items par score décroissant φ(x,y)ᵀθ.

    Les égalités sont comptées contre la réponse préférée. Retourne rank, mrr,
    recall_at_k, ndcg_at_k pour chaque k et margin, l'écart moyen de
    récompense implicite −β(φ_iᵀθ + b_i).
    """
    ks = _check_ks(ks, pool.n_candidates + 1)
    relative = pool.phi @ as_theta(theta, pool.dim)
    rank = 1 + int(np.sum(relative >= 0.0))
    record = {"rank": rank, "mrr": 1.0 / rank}
    for k in ks:
        hit = rank <= k
        record[f"recall_at_{k}"] = 1.0 if hit else 0.0
        record[f"ndcg_at_{k}"] = 1.0 / math.log2(rank + 1) if hit else 0.0
    record["margin"] = float(np.mean(-beta * (relative + pool.b)))
    return record


def jaccard(a, b) -> float:
    """|a∩b| / |a∪b|, avec 1 pour deux ensembles vides."""
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def selection_stability(raw, theta_a, theta_b, n: int, beta: float, gamma: float) -> dict:
    """
    Compare les sélections gloutonnes obtenues depuis deux politiques de prétraitement.

    objective_retention = gain (sur γI) du sous-ensemble A évalué dans la
    géométrie B, divisé par le gain du sous-ensemble B.
    """
    pool_a = prepare_pool(raw, theta_a, beta)
    pool_b = prepare_pool(raw, theta_b, beta)
    sel_a = greedy_select(pool_a, n, gamma)
    sel_b = greedy_select(pool_b, n, gamma)
    _, _, trajectory, _ = replay_design(pool_b, sel_a.selected, gamma)
    gain_a_in_b = (trajectory[-1] if trajectory else sel_b.logdet_initial) - sel_b.logdet_initial
    gain_b = sel_b.logdet_final - sel_b.logdet_initial
    return {
        "exact_match": 1.0 if set(sel_a.selected) == set(sel_b.selected) else 0.0,
        "jaccard": jaccard(sel_a.selected, sel_b.selected),
        "top1_match": 1.0 if sel_a.selected[:1] == sel_b.selected[:1] else 0.0,
        "top3_match": 1.0 if set(sel_a.selected[:3]) == set(sel_b.selected[:3]) else 0.0,
        "objective_retention": gain_a_in_b / gain_b if gain_b > 0 else 1.0,
    }


def _check_grid(strategies, n_grid) -> None:
    if not strategies:
        raise InvalidArgumentError("Aucune stratégie")
    for strategy in strategies:
        if strategy not in STRATEGIES:
            raise InvalidArgumentError(f"Stratégie inconnue: {strategy}")
    if not n_grid:
        raise InvalidArgumentError("n_grid est vide")
    for n in n_grid:
        if int(n) != n or n < 1:
            raise InvalidArgumentError(f"n_grid contient une valeur invalide: {n}")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise InvalidArgumentError("n_grid doit être strictement croissant")


def _decay_rows_for_pool(task) -> list[dict]:
    """Lignes de l'expérience pour un pool: θ* est ajusté une seule fois."""
    pool_index, raw, strategies, n_grid, seeds, config, theta0 = task
    rows = []
    failure = ""
    try:
        pool = prepare_pool(raw, theta0, config.beta)
        theta_star = fit_full(pool, config).theta.theta
    except (MassDpoError, ArithmeticError, np.linalg.LinAlgError) as e:
        logging.warning(f"Pool {raw.pool_id}: préparation impossible ({e})")
        pool, theta_star, failure = None, None, str(e)

    cache = {}
    for seed in seeds:
        for strategy in strategies:
            for n in n_grid:
                row = {"seed": int(seed), "pool_id": raw.pool_id, "strategy": strategy, "n": int(n),
                       "n_selected": 0, "rel_logit_error": math.nan, "theta_norm_gap": math.nan,
                       "stability_holds": None, "converged": False, "error": ""}
                if pool is None:
                    row["error"] = failure
                    rows.append(row)
                    continue
                stochastic = strategy in STOCHASTIC_STRATEGIES
                key = (strategy, int(n), int(seed) if stochastic else None)
                if key not in cache:
                    try:
                        selection = select_negatives(pool, strategy, int(n), config.gamma,
                                                     seed=derive_seed(seed, pool_index) if stochastic else None)
                        report = fit(pool, _unique_subset(selection.selected), config)
                        errors = error_report(pool, report.theta, theta_star, config.gamma, config.beta, selection)
                        cache[key] = {
                            "n_selected": len(selection.selected),
                            "rel_logit_error": errors.rel_logit_error,
                            "theta_norm_gap": errors.theta_norm_gap,
                            "stability_holds": errors.stability_holds,
                            "converged": report.converged,
                            "error": "",
                        }
                    except (MassDpoError, ArithmeticError, np.linalg.LinAlgError) as e:
                        logging.warning(f"Pool {raw.pool_id}, {strategy}, n={n}: {e}")
                        cache[key] = {"error": str(e)}
                row.update(cache[key])
                rows.append(row)
    return rows


def decay_experiment(dataset, strategies, n_grid, seeds, config: TrainConfig,
                     theta0=None, workers: int = 1) -> tuple[list[dict], list[dict]]:
    """
    Erreur relative de logit en fonction de n pour chaque stratégie.

    Pour chaque pool, θ* est ajusté sur le pool complet; pour chaque
    (graine, stratégie, n) la sélection est ajustée et comparée à θ*. Les
    stratégies stochastiques utilisent la graine splitmix64(graine XOR index
    du pool). Les erreurs de ligne sont reportées dans la colonne `error`.

    Returns:
        tuple: (lignes du tableau, lignes du résumé)
    """
    _check_grid(strategies, list(n_grid))
    config.validate()
    tasks = []
    for index, raw in enumerate(dataset):
        theta = np.zeros(raw.dim) if theta0 is None else as_theta(theta0, raw.dim)
        tasks.append((index, raw, list(strategies), list(n_grid), list(seeds), config, theta))
    rows = [row for chunk in ordered_map(_decay_rows_for_pool, tasks, workers) for row in chunk]
    return rows, summarize_decay(rows)


def loglog_slope(ns, medians) -> float:
    """Pente des moindres carrés de log(médiane) contre log(n) sur les points positifs."""
    points = [(math.log(n), math.log(m)) for n, m in zip(ns, medians) if m > 0 and math.isfinite(m)]
    if len(points) < 2:
        return math.nan
    x, y = np.array(points).T
    return float(np.polyfit(x, y, 1)[0])


def summarize_decay(rows: list[dict]) -> list[dict]:
    """
    Résumé au format long (kind, strategy, n, value, count):
    médiane et erreur standard par (stratégie, n), pente log–log et
    décroissance stricte par stratégie, fraction de victoires de mass contre
    chaque autre stratégie sur les paires (graine, pool).
    """
    groups: dict[tuple[str, int], list[float]] = {}
    paired: dict[tuple[str, int], dict[tuple[int, str], float]] = {}
    for row in rows:
        key = (row["strategy"], int(row["n"]))
        value = row["rel_logit_error"]
        groups.setdefault(key, [])
        paired.setdefault(key, {})
        if not row.get("error") and math.isfinite(value):
            groups[key].append(value)
            paired[key][(row["seed"], row["pool_id"])] = value

    summary = []
    strategies = list(dict.fromkeys(s for s, _ in groups))
    for strategy in strategies:
        ns, medians = [], []
        for (s, n), values in groups.items():
            if s != strategy:
                continue
            median = float(np.median(values)) if values else math.nan
            stderr = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else math.nan
            summary.append({"kind": "median", "strategy": s, "n": n, "value": median, "count": len(values)})
            summary.append({"kind": "stderr", "strategy": s, "n": n, "value": stderr, "count": len(values)})
            ns.append(n)
            medians.append(median)
        summary.append({"kind": "slope", "strategy": strategy, "n": "all",
                        "value": loglog_slope(ns, medians), "count": len(ns)})
        decreasing = all(b < a for a, b in zip(medians, medians[1:]))
        summary.append({"kind": "strictly_decreasing", "strategy": strategy, "n": "all",
                        "value": 1.0 if decreasing else 0.0, "count": len(ns)})

    if "mass" in strategies:
        for other in strategies:
            if other == "mass":
                continue
            for (s, n), mass_values in paired.items():
                if s != "mass" or (other, n) not in paired:
                    continue
                other_values = paired[(other, n)]
                keys = [k for k in mass_values if k in other_values]
                wins = sum(1 for k in keys if mass_values[k] <= other_values[k])
                summary.append({"kind": "win_fraction", "strategy": f"mass_vs_{other}", "n": n,
                                "value": wins / len(keys) if keys else math.nan, "count": len(keys)})
    return summary


def error_report(pool, theta_hat, theta_star, gamma: float, beta: float, selection=None) -> ErrorReport:
    """
    Erreur de θ̂ par rapport à θ* sur un pool.

    Le contrôle de stabilité n'est calculé que si une sélection est fournie;
    sinon les champs stability_* restent à nan / None.
    """
    report = ErrorReport(
        pool_id=pool.pool_id,
        n=0,
        strategy="",
        rel_logit_error=relative_logit_error(theta_hat, theta_star, pool),
        theta_norm_gap=float(np.linalg.norm(_delta(theta_hat, theta_star, pool.dim))),
    )
    if selection is not None:
        check = stability_check(theta_hat, theta_star, pool, _unique_subset(selection.selected), gamma, beta)
        report.n = selection.n or len(selection.selected)
        report.strategy = selection.strategy
        report.stability_lhs, report.stability_rhs, report.stability_holds = check.lhs, check.rhs, check.holds
    return report



def decay_shortfalls(summary: list[dict], baseline: str = "random", max_slope: float = DECAY_MAX_SLOPE,
                     min_win: float = DECAY_MIN_WIN, win_n: int = DECAY_WIN_N) -> list[str]:
    """
    Écarts d'un résumé de benchmark aux tendances attendues pour mass:
    médiane strictement décroissante, pente log–log ≤ max_slope, médiane
    ≤ celle de `baseline` à chaque n et fraction de victoires ≥ min_win à
    n = win_n. Une liste vide signifie qu'aucun écart n'est constaté.
    """
    medians = {(s["strategy"], s["n"]): s["value"] for s in summary if s["kind"] == "median"}
    if not any(strategy == "mass" for strategy, _ in medians):
        return []
    shortfalls = []
    for entry in summary:
        if entry["strategy"] != "mass":
            continue
        if entry["kind"] == "strictly_decreasing" and entry["value"] != 1.0:
            shortfalls.append("mass: médiane de l'erreur non strictement décroissante en n")
        elif entry["kind"] == "slope" and not entry["value"] <= max_slope:
            shortfalls.append(f"mass: pente log–log {entry['value']:.3g} > {max_slope:g}")

    for (strategy, n), value in medians.items():
        other = medians.get((baseline, n))
        if strategy == "mass" and other is not None and value > other:
            shortfalls.append(f"n={n}: médiane mass {value:.4g} > médiane {baseline} {other:.4g}")

    for entry in summary:
        if (entry["kind"] == "win_fraction" and entry["strategy"] == f"mass_vs_{baseline}"
                and entry["n"] == win_n and not entry["value"] >= min_win):
            shortfalls.append(f"n={win_n}: mass meilleure que {baseline} sur {entry['value']:.0%} des paires "
                              f"(attendu ≥ {min_win:.0%})")
    return shortfalls
