#!/bin/env python3
"""
Orchestration des sous-commandes synth, select, train, eval et bench sur des
fichiers de pools.

Le travail par pool est distribué par lib.workers.ordered_map; l'écriture se
fait en un seul passage dans l'ordre des entrées.
"""
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lib.errors import InvalidArgumentError, SchemaError
from lib.evaluation import (batch_bound, batch_stability_check, curvature_range, decay_experiment,
                            decay_shortfalls, error_report, full_diagnostics, leverage_diagnostics,
                            ranking_metrics, selection_stability, summarize_decay)
from lib.formats import (read_pools, read_selections, read_thetas, write_csv, write_pools,
                         write_selections, write_thetas)
from lib.rng import MASK64, derive_seed
from lib.selector import STOCHASTIC_STRATEGIES, STRATEGIES, prepare_pool, select_negatives
from lib.synth import PREFERRED_RULES, SynthConfig, gen_dataset
from lib.trainer import TrainConfig, fit, fit_batch, fit_full
from lib.workers import ordered_map

METRIC_GROUPS = ("rel", "stability", "leverage", "rank", "diag", "selstab")

DECAY_COLUMNS = ["seed", "pool_id", "strategy", "n", "n_selected", "rel_logit_error",
                 "theta_norm_gap", "stability_holds", "converged", "error"]
SUMMARY_COLUMNS = ["kind", "strategy", "n", "value", "count"]


def eval_columns(ks) -> list[str]:
    """Colonnes du rapport d'évaluation, dans un ordre stable."""
    columns = ["pool_id", "metric", "strategy", "n", "converged",
               "rel_logit_error", "theta_norm_gap",
               "stability_lhs", "stability_rhs", "stability_holds",
               "max_leverage", "telescoping_residual", "quad_cap_holds", "logdet_cap_slack",
               "kappa_empirical", "q_min0", "L_v0", "L_phi", "L_b"]
    for k in ks:
        columns.append(f"recall_at_{k}")
    for k in ks:
        columns.append(f"ndcg_at_{k}")
    columns += ["mrr", "rank", "margin",
                "R_theta", "rho_empirical", "c_min", "c_max", "max_centered_leverage",
                "bound_Bn", "bound_holds", "batch_bound",
                "exact_match", "jaccard", "top1_match", "top3_match", "objective_retention"]
    return columns


def parse_ks(text) -> list[int]:
    """'1,3' -> [1, 3]"""
    if isinstance(text, (list, tuple)):
        return [int(k) for k in text]
    try:
        return [int(k) for k in str(text).split(",") if k.strip()]
    except ValueError as e:
        raise InvalidArgumentError(f"Liste ks invalide: {text}") from e


def _theta_for(thetas: dict | None, pool_id: str, dim: int, label: str) -> np.ndarray:
    """θ d'un pool depuis un fichier theta (entrée propre ou entrée de lot "*")."""
    if thetas is None:
        return np.zeros(dim)
    entry = thetas.get(pool_id, thetas.get("*"))
    if entry is None:
        raise InvalidArgumentError(f"{label}: aucun theta pour le pool {pool_id}")
    theta = entry["theta"]
    if theta.shape != (dim,):
        raise InvalidArgumentError(f"{label}: theta de longueur {theta.shape[0]} pour le pool {pool_id} (d={dim})")
    return theta


def _fit_converged(pool_id: str, *theta_maps) -> bool | None:
    """Drapeaux `converged` des entrées theta d'un pool (None sans fichier theta)."""
    flags = []
    for thetas in theta_maps:
        if thetas is None:
            continue
        entry = thetas.get(pool_id, thetas.get("*"))
        if entry is not None and entry.get("converged") is not None:
            flags.append(bool(entry["converged"]))
    return all(flags) if flags else None


def _select_task(task):
    index, raw, theta0, strategy, n, beta, gamma, seed, criterion, brute_force_limit = task
    pool = prepare_pool(raw, theta0, beta)
    pool_seed = derive_seed(seed, index) if strategy in STOCHASTIC_STRATEGIES else None
    return select_negatives(pool, strategy, n, gamma, seed=pool_seed, criterion=criterion,
                            brute_force_limit=brute_force_limit)


def _train_task(task):
    raw, subset, train_config = task
    pool = prepare_pool(raw, np.zeros(raw.dim), train_config.beta)
    if subset is None:
        return fit_full(pool, train_config)
    return fit(pool, subset, train_config)


def _eval_task(task) -> list[dict]:
    raw, selection, theta, theta_ref, theta0, converged, metrics, ks, beta, gamma = task
    pool = prepare_pool(raw, theta0, beta)
    base = {"pool_id": raw.pool_id, "converged": converged}
    if selection is not None:
        base.update({"strategy": selection.strategy, "n": selection.n})
    errors = None
    if {"rel", "stability"} & set(metrics):
        errors = error_report(pool, theta, theta_ref, gamma, beta,
                              selection if "stability" in metrics else None)
    rows = []
    for metric in metrics:
        row = dict(base, metric=metric)
        if metric == "rel":
            row["rel_logit_error"] = errors.rel_logit_error
            row["theta_norm_gap"] = errors.theta_norm_gap
        elif metric == "stability":
            row.update({"stability_lhs": errors.stability_lhs, "stability_rhs": errors.stability_rhs,
                        "stability_holds": errors.stability_holds})
        elif metric in ("leverage", "diag"):
            if metric == "leverage":
                report = leverage_diagnostics(pool, selection, gamma)
            else:
                report = full_diagnostics(pool, selection, theta_ref, theta, gamma, beta, theta0=theta0)
                row.update({"R_theta": report.R_theta, "rho_empirical": report.rho_empirical,
                            "c_min": report.c_min, "c_max": report.c_max,
                            "max_centered_leverage": report.max_centered_leverage,
                            "bound_Bn": report.bound_Bn_value, "bound_holds": report.bound_holds})
            row.update({"max_leverage": report.max_leverage,
                        "telescoping_residual": report.telescoping_residual,
                        "quad_cap_holds": report.quad_cap_holds,
                        "logdet_cap_slack": report.logdet_cap_slack,
                        "kappa_empirical": report.kappa_empirical,
                        "q_min0": report.q_min0, "L_v0": report.L_v0,
                        "L_phi": report.L_phi, "L_b": report.L_b})
        elif metric == "rank":
            row.update(ranking_metrics(theta, pool, ks, beta))
        elif metric == "selstab":
            row.update(selection_stability(raw, theta0, theta, selection.n or len(selection.selected), beta, gamma))
        rows.append(row)
    return rows


def _bench_seed_task(task) -> list[dict]:
    seed, synth_fields, strategies, n_grid, train_config, theta0 = task
    dataset = gen_dataset(SynthConfig(seed=seed, **synth_fields))
    rows, _ = decay_experiment(dataset, strategies, n_grid, [seed], train_config, theta0=theta0)
    return rows


@dataclass
class BenchConfig:
    """Configuration validée d'un benchmark de décroissance."""
    synth: dict
    strategies: list[str]
    n_grid: list[int]
    seeds: list[int]
    beta: float
    gamma: float
    tol: float = 1e-10
    max_iter: int = 200
    theta0: list[float] | None = None


SYNTH_KEYS = {
    "dim": "dim",
    "pools": "pools",
    "candidates": "candidates_per_pool",
    "candidates_per_pool": "candidates_per_pool",
    "clusters": "clusters",
    "cluster_noise": "cluster_noise",
    "feature_scale": "feature_scale",
    "preferred_rule": "preferred_rule",
    "theta_true": "theta_true",
    "theta_ref": "theta_ref",
}


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def parse_bench_config(data) -> BenchConfig:
    """
    Valide un objet de configuration de benchmark.

    Raises:
        SchemaError: avec le chemin JSON de la clé fautive (ex. "synth.clusters", "n_grid[2]")
    """
    if not isinstance(data, dict):
        raise SchemaError("$", "un objet JSON est attendu")
    allowed = {"synth", "strategies", "n_grid", "seeds", "beta", "gamma", "tol", "max_iter", "theta0"}
    for key in data:
        if key not in allowed:
            raise SchemaError(key, "clé inconnue")
    for key in ("synth", "strategies", "n_grid", "seeds", "beta", "gamma"):
        if key not in data:
            raise SchemaError(key, "clé obligatoire manquante")

    synth = data["synth"]
    if not isinstance(synth, dict):
        raise SchemaError("synth", "un objet est attendu")
    fields = {}
    for key, value in synth.items():
        path = f"synth.{key}"
        if key not in SYNTH_KEYS:
            raise SchemaError(path, "clé inconnue")
        if key in ("dim", "pools", "candidates", "candidates_per_pool", "clusters"):
            if not _is_int(value):
                raise SchemaError(path, "un entier est attendu")
        elif key in ("cluster_noise", "feature_scale"):
            if not _is_number(value):
                raise SchemaError(path, "un nombre est attendu")
        elif key == "preferred_rule":
            if value not in PREFERRED_RULES:
                raise SchemaError(path, f"valeur attendue parmi {', '.join(PREFERRED_RULES)}")
        elif key in ("theta_true", "theta_ref"):
            if not isinstance(value, list) or not all(_is_number(v) for v in value):
                raise SchemaError(path, "une liste de nombres est attendue")
            value = np.asarray(value, dtype=np.float64)
        fields[SYNTH_KEYS[key]] = value
    try:
        SynthConfig(seed=0, **fields).validate()
    except InvalidArgumentError as e:
        raise SchemaError("synth", str(e)) from e

    strategies = data["strategies"]
    if not isinstance(strategies, list) or not strategies:
        raise SchemaError("strategies", "une liste non vide est attendue")
    for i, strategy in enumerate(strategies):
        if strategy not in STRATEGIES:
            raise SchemaError(f"strategies[{i}]", f"stratégie inconnue: {strategy}")

    n_grid = data["n_grid"]
    if not isinstance(n_grid, list) or not n_grid:
        raise SchemaError("n_grid", "une liste non vide est attendue")
    for i, n in enumerate(n_grid):
        if not _is_int(n) or n < 1:
            raise SchemaError(f"n_grid[{i}]", "un entier ≥ 1 est attendu")
        if i > 0 and n <= n_grid[i - 1]:
            raise SchemaError(f"n_grid[{i}]", "n_grid doit être strictement croissant")

    seeds = data["seeds"]
    if not isinstance(seeds, list) or not seeds:
        raise SchemaError("seeds", "une liste non vide est attendue")
    for i, seed in enumerate(seeds):
        if not _is_int(seed) or not 0 <= seed <= MASK64:
            raise SchemaError(f"seeds[{i}]", "un entier 64 bits est attendu")

    for key in ("beta", "gamma", "tol"):
        if key in data and (not _is_number(data[key]) or data[key] <= 0):
            raise SchemaError(key, "un nombre > 0 est attendu")
    if "max_iter" in data and (not _is_int(data["max_iter"]) or data["max_iter"] < 1):
        raise SchemaError("max_iter", "un entier ≥ 1 est attendu")
    theta0 = data.get("theta0")
    if theta0 is not None:
        dim = fields.get("dim", SynthConfig.dim)
        if not isinstance(theta0, list) or len(theta0) != dim or not all(_is_number(v) for v in theta0):
            raise SchemaError("theta0", f"une liste de {dim} nombres est attendue")

    return BenchConfig(
        synth=fields,
        strategies=list(strategies),
        n_grid=list(n_grid),
        seeds=list(seeds),
        beta=float(data["beta"]),
        gamma=float(data["gamma"]),
        tol=float(data.get("tol", 1e-10)),
        max_iter=int(data.get("max_iter", 200)),
        theta0=theta0,
    )


def load_bench_config(path) -> BenchConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError("$", f"JSON invalide ({e.msg}, ligne {e.lineno})") from e
    return parse_bench_config(data)


class MassPipeline:
    """
    Enchaîne lecture, traitement par pool et écriture pour chaque sous-commande.
    Les compteurs de traitement sont collectés dans processing_data.
    """
    def __init__(self, config, workers: int | None = None):
        """
        Args:
            config: objet Config
            workers: nombre de processus (défaut: valeur de configuration)
        """
        self.workers = int(workers if workers is not None else config.get("workers", 1))
        self.brute_force_limit = int(config.get("brute_force_limit", 2_000_000))
        self.processing_data = {
            "pools": 0,
            "truncated": [],    # pools dont n a été tronqué
            "unconverged": [],  # pools dont l'ajustement n'a pas convergé
        }

    def run_synth(self, synth_config: SynthConfig, out_path) -> int:
        pools = gen_dataset(synth_config, workers=self.workers)
        self.processing_data["pools"] = len(pools)
        return write_pools(out_path, pools)

    def resolve_theta0(self, source) -> dict | None:
        """'zero' (ou None) -> θ₀ = 0, sinon chemin d'un fichier theta."""
        if source is None or str(source) == "zero":
            return None
        return read_thetas(source)

    def run_select(self, in_path, out_path, strategy: str, n: int, beta: float, gamma: float,
                   theta0="zero", seed: int = 0, criterion: str = "quad") -> list:
        if strategy not in STRATEGIES:
            raise InvalidArgumentError(f"Stratégie inconnue: {strategy}")
        pools = read_pools(in_path)
        theta0_map = self.resolve_theta0(theta0)
        tasks = [(index, raw, _theta_for(theta0_map, raw.pool_id, raw.dim, "theta0"), strategy, n,
                  beta, gamma, seed, criterion, self.brute_force_limit)
                 for index, raw in enumerate(pools)]
        selections = ordered_map(_select_task, tasks, self.workers)
        self.processing_data["pools"] = len(selections)
        self.processing_data["truncated"] = [s.pool_id for s in selections if s.truncated]
        if self.processing_data["truncated"]:
            logging.warning(f"n tronqué pour {len(self.processing_data['truncated'])} pool(s)")
        write_selections(out_path, selections)
        return selections

    def run_train(self, pools_path, out_path, train_config: TrainConfig, selection_path=None,
                  full_pool: bool = False, batch: bool = False) -> list[dict]:
        train_config.validate()
        pools = read_pools(pools_path)
        by_id = {p.pool_id: p for p in pools}
        if full_pool or selection_path is None:
            if not full_pool:
                raise InvalidArgumentError("--selection ou --full-pool est requis")
            targets = [(p, None) for p in pools]
            mode = "full"
        else:
            selections = read_selections(selection_path)
            missing = [s.pool_id for s in selections if s.pool_id not in by_id]
            if missing:
                raise InvalidArgumentError(f"pool_id absents du fichier de pools: {', '.join(missing)}")
            targets = [(by_id[s.pool_id], sorted(set(s.selected))) for s in selections]
            mode = "subset"

        records = []
        if batch:
            if not targets:
                raise InvalidArgumentError("Aucun pool à ajuster en lot")
            prepared = [prepare_pool(raw, np.zeros(raw.dim), train_config.beta) for raw, _ in targets]
            subsets = [subset if subset is not None else list(range(p.n_candidates))
                       for p, (_, subset) in zip(prepared, targets)]
            reports = [("*", fit_batch(prepared, subsets, train_config))]
            mode = "batch"
        else:
            fits = ordered_map(_train_task, [(raw, subset, train_config) for raw, subset in targets], self.workers)
            reports = [(raw.pool_id, report) for (raw, _), report in zip(targets, fits)]

        for pool_id, report in reports:
            records.append({
                "pool_id": pool_id,
                "mode": mode,
                "beta": train_config.beta,
                "gamma": train_config.gamma,
                "theta": report.theta.theta,
                "residual": report.residual,
                "iterations": report.iterations,
                "converged": report.converged,
                "objective": report.objective,
            })
        self.processing_data["pools"] = len(targets)
        self.processing_data["unconverged"] = [r["pool_id"] for r in records if not r["converged"]]
        if self.processing_data["unconverged"]:
            logging.warning(f"{len(self.processing_data['unconverged'])} ajustement(s) non convergé(s): "
                            f"{', '.join(self.processing_data['unconverged'])}")
        write_thetas(out_path, records)
        return records

    def run_eval(self, pools_path, out_path, metrics, ks, beta: float, gamma: float,
                 selection_path=None, theta_path=None, theta_ref_path=None, theta0="zero",
                 delta: float = 0.05) -> list[dict]:
        metrics = list(dict.fromkeys(metrics))
        for metric in metrics:
            if metric not in METRIC_GROUPS:
                raise InvalidArgumentError(f"Groupe de métriques inconnu: {metric} (choix: {', '.join(METRIC_GROUPS)})")
        ks = parse_ks(ks)
        if not 0 < delta < 1:
            raise InvalidArgumentError(f"delta doit être dans (0, 1) (reçu {delta})")
        needs_selection = {"stability", "leverage", "diag", "selstab"} & set(metrics)
        needs_theta = {"rel", "stability", "rank", "diag", "selstab"} & set(metrics)
        needs_ref = {"rel", "stability", "diag"} & set(metrics)
        if needs_selection and selection_path is None:
            raise InvalidArgumentError(f"--selection requis pour {', '.join(sorted(needs_selection))}")
        if needs_theta and theta_path is None:
            raise InvalidArgumentError(f"--theta requis pour {', '.join(sorted(needs_theta))}")
        if needs_ref and theta_ref_path is None:
            raise InvalidArgumentError(f"--theta-ref requis pour {', '.join(sorted(needs_ref))}")

        pools = read_pools(pools_path)
        by_id = {p.pool_id: p for p in pools}
        thetas = read_thetas(theta_path) if theta_path else None
        thetas_ref = read_thetas(theta_ref_path) if theta_ref_path else None
        theta0_map = self.resolve_theta0(theta0)

        if selection_path is not None:
            selections = read_selections(selection_path)
            missing = [s.pool_id for s in selections if s.pool_id not in by_id]
            if missing:
                raise InvalidArgumentError(f"pool_id de sélection inconnus: {', '.join(missing)}")
            for s in selections:
                if (s.beta is not None and s.beta != beta) or (s.gamma is not None and s.gamma != gamma):
                    logging.warning(f"Pool {s.pool_id}: sélection faite avec beta={s.beta}, gamma={s.gamma}, "
                                    f"évaluation avec beta={beta}, gamma={gamma}")
                    break
            targets = [(by_id[s.pool_id], s) for s in selections]
        else:
            targets = [(p, None) for p in pools]

        batch_mode = (thetas is not None and set(thetas) == {"*"}
                      and thetas_ref is not None and set(thetas_ref) == {"*"})
        per_pool_metrics = [m for m in metrics if not (batch_mode and m == "stability")]
        tasks = []
        for raw, selection in targets:
            tasks.append((raw, selection,
                          _theta_for(thetas, raw.pool_id, raw.dim, "--theta") if thetas else None,
                          _theta_for(thetas_ref, raw.pool_id, raw.dim, "--theta-ref") if thetas_ref else None,
                          _theta_for(theta0_map, raw.pool_id, raw.dim, "--theta0"),
                          _fit_converged(raw.pool_id, thetas, thetas_ref),
                          per_pool_metrics, ks, beta, gamma))
        rows = [row for chunk in ordered_map(_eval_task, tasks, self.workers) for row in chunk]

        if batch_mode and targets and {"stability", "diag"} & set(metrics):
            rows += self._batch_rows(targets, thetas, thetas_ref, theta0_map, metrics, beta, gamma, delta)

        unconverged = list(dict.fromkeys(r["pool_id"] for r in rows if r.get("converged") is False))
        self.processing_data["pools"] = len(targets)
        self.processing_data["unconverged"] = unconverged
        if unconverged:
            logging.warning(f"Métriques calculées sur {len(unconverged)} ajustement(s) non convergé(s): "
                            f"{', '.join(unconverged)}")
        write_csv(out_path, rows, eval_columns(ks))
        return rows

    def _batch_rows(self, targets, thetas, thetas_ref, theta0_map, metrics, beta: float, gamma: float,
                    delta: float) -> list[dict]:
        """Lignes "*" d'un ajustement par lot: stabilité moyennée et borne de lot."""
        prepared = [prepare_pool(raw, np.zeros(raw.dim), beta) for raw, _ in targets]
        theta_hat, theta_star = thetas["*"]["theta"], thetas_ref["*"]["theta"]
        base = {"pool_id": "*", "converged": _fit_converged("*", thetas, thetas_ref)}
        rows = []
        if "stability" in metrics:
            subsets = [sorted(set(s.selected)) for _, s in targets]
            check = batch_stability_check(theta_hat, theta_star, prepared, subsets, gamma, beta)
            rows.append(dict(base, metric="stability", stability_lhs=check.lhs,
                             stability_rhs=check.rhs, stability_holds=check.holds))
        if "diag" in metrics:
            ranges = [curvature_range(pool, [_theta_for(theta0_map, pool.pool_id, pool.dim, "--theta0"),
                                             theta_star, theta_hat], beta)
                      for pool in prepared]
            c_min, c_max = min(r[0] for r in ranges), max(r[1] for r in ranges)
            bound = None
            if c_min > 0:
                bound = batch_bound(prepared[0].dim, delta, len(prepared), c_min, gamma)
            else:
                logging.warning("Borne de lot non calculable: c_min = 0")
            rows.append(dict(base, metric="diag", c_min=c_min, c_max=c_max, batch_bound=bound))
        return rows

    def run_bench(self, config_path, out_path, summary_path=None) -> tuple[list[dict], list[dict]]:
        bench = load_bench_config(config_path)
        train_config = TrainConfig(beta=bench.beta, gamma=bench.gamma, tol=bench.tol, max_iter=bench.max_iter)
        theta0 = None if bench.theta0 is None else np.asarray(bench.theta0, dtype=np.float64)
        logging.info(f"Benchmark: {len(bench.seeds)} graines, stratégies {bench.strategies}, n={bench.n_grid}")
        tasks = [(seed, bench.synth, bench.strategies, bench.n_grid, train_config, theta0) for seed in bench.seeds]
        rows = [row for chunk in ordered_map(_bench_seed_task, tasks, self.workers) for row in chunk]
        summary = summarize_decay(rows)
        if summary_path is None:
            out = Path(out_path)
            summary_path = out.with_name(f"{out.stem}_summary{out.suffix or '.csv'}")
        write_csv(out_path, rows, DECAY_COLUMNS)
        write_csv(summary_path, summary, SUMMARY_COLUMNS)
        failed = sum(1 for r in rows if r["error"])
        if failed:
            logging.warning(f"{failed} ligne(s) du benchmark en erreur")
        for shortfall in decay_shortfalls(summary):
            logging.warning(f"Benchmark: {shortfall}")
        return rows, summary
