#!/bin/env python3
"""
Estimation de θ par minimisation exacte de l'objectif régularisé

    F(θ) = L(θ; S) + (γ/2)‖θ‖²

par Newton amorti (recherche linéaire d'Armijo par dichotomie), pour un pool
(sous-ensemble ou pool complet) ou un lot de k pools (pertes moyennées).
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, solve

from lib.errors import InvalidArgumentError
from lib.objective import PolicyParams, as_theta, evaluate, loss_change

ARMIJO = 1e-4
MAX_HALVINGS = 60


@dataclass
class TrainConfig:
    """Paramètres d'ajustement."""
    beta: float = 0.1
    gamma: float = 0.1
    tol: float = 1e-10
    max_iter: int = 200
    theta_init: np.ndarray | None = None

    def validate(self) -> None:
        if not self.beta > 0:
            raise InvalidArgumentError(f"beta doit être > 0 (reçu {self.beta})")
        if not self.gamma > 0:
            raise InvalidArgumentError(f"gamma doit être > 0 (reçu {self.gamma})")
        if not self.tol > 0:
            raise InvalidArgumentError(f"tol doit être > 0 (reçu {self.tol})")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidArgumentError(f"max_iter doit être ≥ 1 (reçu {self.max_iter})")


@dataclass
class FitReport:
    """Résultat d'un ajustement."""
    theta: PolicyParams
    residual: float
    iterations: int
    converged: bool
    objective: float
    history: list[float] = field(default_factory=list)


def subset_objective(pool, subset, theta, beta: float, gamma: float, with_hessian: bool = True):
    """
    Objectif régularisé d'un pool.

    Returns:
        tuple: (F, ∇F, ∇²F ou None)
    """
    evaluation = evaluate(pool, theta, subset, beta, with_hessian=with_hessian)
    value = evaluation.loss + 0.5 * gamma * float(theta @ theta)
    grad = evaluation.gradient + gamma * theta
    hess = None
    if with_hessian:
        hess = evaluation.hessian + gamma * np.eye(theta.shape[0])
    return value, grad, hess


def batch_objective(pools, subsets, theta, beta: float, gamma: float, with_hessian: bool = True):
    """
    Objectif moyenné sur k pools: (1/k) Σ L_i + (γ/2)‖θ‖².

    La réduction suit l'ordre des pools.

    Returns:
        tuple: (F, ∇F, ∇²F ou None)
    """
    k = len(pools)
    dim = theta.shape[0]
    total_loss = 0.0
    total_grad = np.zeros(dim)
    total_hess = np.zeros((dim, dim)) if with_hessian else None
    for pool, subset in zip(pools, subsets):
        evaluation = evaluate(pool, theta, subset, beta, with_hessian=with_hessian)
        total_loss += evaluation.loss
        total_grad = total_grad + evaluation.gradient
        if with_hessian:
            total_hess = total_hess + evaluation.hessian
    value = total_loss / k + 0.5 * gamma * float(theta @ theta)
    grad = total_grad / k + gamma * theta
    hess = None
    if with_hessian:
        hess = total_hess / k + gamma * np.eye(dim)
    return value, grad, hess


def subset_change(pool, subset, theta, step, beta: float, gamma: float) -> float:
    """F(θ + p) − F(θ) d'un pool, calculé comme une différence."""
    penalty = gamma * float(theta @ step) + 0.5 * gamma * float(step @ step)
    return loss_change(pool, theta, step, subset, beta) + penalty


def batch_change(pools, subsets, theta, step, beta: float, gamma: float) -> float:
    """F(θ + p) − F(θ) de l'objectif moyenné sur k pools."""
    total = 0.0
    for pool, subset in zip(pools, subsets):
        total += loss_change(pool, theta, step, subset, beta)
    penalty = gamma * float(theta @ step) + 0.5 * gamma * float(step @ step)
    return total / len(pools) + penalty


def _newton(objective, change, theta0: np.ndarray, config: TrainConfig, label: str) -> FitReport:
    """
    Newton amorti.

    Direction: (∇²L + γI)p = −∇F, repli sur −∇F si la résolution échoue ou
    si p n'est pas une direction de descente. Un pas t est accepté si
    F(θ + tp) − F(θ) ≤ c·t·∇Fᵀp, l'écart étant évalué par `change` et non
    par soustraction de deux valeurs de F. F ne croît jamais d'une
    itération à l'autre.
    """
    theta = theta0.copy()
    value, grad, hess = objective(theta, True)
    history = [value]
    iterations = 0
    best_theta, best_residual, best_value = theta.copy(), float(np.linalg.norm(grad)), value

    while iterations < config.max_iter:
        residual = float(np.linalg.norm(grad))
        if residual <= config.tol:
            break
        try:
            direction = solve(hess, -grad, assume_a="pos")
            if not np.all(np.isfinite(direction)) or float(grad @ direction) >= 0.0:
                raise LinAlgError("direction de Newton non descendante")
        except (LinAlgError, ValueError) as e:
            logging.debug(f"{label}: repli sur le gradient ({e})")
            direction = -grad
        slope = float(grad @ direction)

        step = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS):
            delta = change(theta, step * direction)
            if delta <= ARMIJO * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            logging.debug(f"{label}: recherche linéaire bloquée à l'itération {iterations + 1}")
            break

        iterations += 1
        theta = theta + step * direction
        _, grad, hess = objective(theta, True)
        value += delta
        history.append(value)
        residual = float(np.linalg.norm(grad))
        if residual < best_residual:
            best_theta, best_residual, best_value = theta.copy(), residual, value
        logging.debug(f"{label}: itération {iterations}, F={value:.17g}, ‖∇F‖={residual:.3e}, pas={step:g}")

    residual = float(np.linalg.norm(grad))
    if residual > best_residual:
        theta, residual, value = best_theta, best_residual, best_value
    converged = residual <= config.tol
    if not converged:
        logging.info(f"{label}: non convergé après {iterations} itérations (‖∇F‖={residual:.3e})")
    report = FitReport(
        theta=PolicyParams(theta, meta={"residual": residual, "iterations": iterations, "converged": converged}),
        residual=residual,
        iterations=iterations,
        converged=converged,
        objective=value,
        history=history,
    )
    return report


def _initial_theta(config: TrainConfig, dim: int) -> np.ndarray:
    if config.theta_init is None:
        return np.zeros(dim)
    return as_theta(config.theta_init, dim).astype(np.float64).copy()


def fit(pool, subset, config: TrainConfig) -> FitReport:
    """
    Minimise F_S(θ) = L(θ; S) + (γ/2)‖θ‖² sur un sous-ensemble du pool.

    Args:
        pool: pool préparé
        subset: liste d'index non vide
        config: paramètres d'ajustement

    Returns:
        FitReport (converged=False si max_iter est atteint, sans exception)
    """
    config.validate()
    subset = [int(i) for i in subset]
    if not subset:
        raise InvalidArgumentError("Sous-ensemble vide")
    theta0 = _initial_theta(config, pool.dim)

    def objective(theta, with_hessian):
        return subset_objective(pool, subset, theta, config.beta, config.gamma, with_hessian)

    def change(theta, step):
        return subset_change(pool, subset, theta, step, config.beta, config.gamma)

    return _newton(objective, change, theta0, config, f"Pool {pool.pool_id}")


def fit_full(pool, config: TrainConfig) -> FitReport:
    """Minimiseur θ* de l'objectif sur le pool complet."""
    return fit(pool, range(pool.n_candidates), config)


def fit_batch(pools, subsets, config: TrainConfig) -> FitReport:
    """Minimise l'objectif moyenné sur k pools partageant la même dimension."""
    config.validate()
    if len(pools) == 0:
        raise InvalidArgumentError("Lot vide")
    if len(subsets) != len(pools):
        raise InvalidArgumentError(f"{len(subsets)} sous-ensembles pour {len(pools)} pools")
    dim = pools[0].dim
    for pool in pools:
        if pool.dim != dim:
            raise InvalidArgumentError(f"Pool {pool.pool_id}: dimension {pool.dim}, attendu {dim}")
    subsets = [[int(i) for i in subset] for subset in subsets]
    theta0 = _initial_theta(config, dim)

    def objective(theta, with_hessian):
        return batch_objective(pools, subsets, theta, config.beta, config.gamma, with_hessian)

    def change(theta, step):
        return batch_change(pools, subsets, theta, step, config.beta, config.gamma)

    return _newton(objective, change, theta0, config, f"Lot de {len(pools)} pools")
