#!/bin/env python3
"""
Moteur matriciel SPD pour la matrice d'information H = γI + α Σ v vᵀ.

Maintient explicitement l'inverse (mise à jour de Sherman–Morrison) et le
log-déterminant (lemme du déterminant matriciel), avec une refactorisation de
Cholesky périodique pour borner la dérive numérique.
"""
import logging

import numpy as np
from scipy.linalg import cho_solve
from scipy.linalg.lapack import dpotrf

from lib.errors import InvalidArgumentError, NumericFailureError

REFRESH_INTERVAL = 64


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Retourne (M + Mᵀ)/2."""
    return 0.5 * (matrix + matrix.T)


def cholesky_factor(matrix: np.ndarray) -> np.ndarray:
    """
    Facteur de Cholesky inférieur d'une matrice SPD.

    Raises:
        NumericFailureError: si la matrice n'est pas définie positive; l'index
            (base 1) du mineur principal fautif est joint à l'exception.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(matrix)):
        raise NumericFailureError("Matrice non finie")
    factor, info = dpotrf(matrix, lower=1, clean=1)
    if info > 0:
        raise NumericFailureError("Échec de la factorisation de Cholesky", minor_index=int(info))
    if info < 0:
        raise NumericFailureError(f"Argument LAPACK invalide (info={info})")
    return factor


def spd_logdet(matrix: np.ndarray) -> float:
    """log det d'une matrice SPD via Cholesky."""
    factor = cholesky_factor(matrix)
    return float(2.0 * np.sum(np.log(np.diag(factor))))


def spd_inverse(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Inverse et log-déterminant d'une matrice SPD à partir d'une seule factorisation."""
    factor = cholesky_factor(matrix)
    inverse = cho_solve((factor, True), np.eye(matrix.shape[0]))
    logdet = float(2.0 * np.sum(np.log(np.diag(factor))))
    return symmetrize(inverse), logdet


class InformationState:
    """
    État courant H_k de la matrice d'information.

    Attributes:
        h: matrice H_k (d×d)
        h_inv: inverse maintenue de H_k
        logdet: log det H_k
        updates_since_refresh: nombre de mises à jour depuis la dernière factorisation
        gamma: ridge γ > 0
        alpha: échelle de Fisher α₀ ≥ 0
        refresh_interval: nombre de mises à jour déclenchant une refactorisation
    """
    h: np.ndarray
    h_inv: np.ndarray
    logdet: float
    updates_since_refresh: int
    gamma: float
    alpha: float
    refresh_interval: int

    def __init__(self, h, h_inv, logdet, gamma, alpha, refresh_interval=REFRESH_INTERVAL):
        self.h = h
        self.h_inv = h_inv
        self.logdet = float(logdet)
        self.gamma = float(gamma)
        self.alpha = float(alpha)
        self.refresh_interval = int(refresh_interval)
        self.updates_since_refresh = 0

    @property
    def dim(self) -> int:
        return self.h.shape[0]

    def copy(self) -> "InformationState":
        clone = InformationState(self.h.copy(), self.h_inv.copy(), self.logdet,
                                 self.gamma, self.alpha, self.refresh_interval)
        clone.updates_since_refresh = self.updates_since_refresh
        return clone

    def _check_vector(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] != self.dim:
            raise InvalidArgumentError(
                f"Vecteur de dimension {v.shape} incompatible avec d={self.dim}")
        return v

    def quad_form(self, v) -> float:
        """vᵀ H⁻¹ v, ramené à 0 si l'arrondi le rend négatif."""
        v = self._check_vector(v)
        quad = float(v @ (self.h_inv @ v))
        return quad if quad > 0.0 else 0.0

    def quad_forms(self, vectors: np.ndarray) -> np.ndarray:
        """Formes quadratiques de toutes les lignes de `vectors` (N×d)."""
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[1] != self.dim:
            raise InvalidArgumentError(
                f"Matrice de vecteurs {vectors.shape} incompatible avec d={self.dim}")
        quads = np.einsum("ij,jk,ik->i", vectors, self.h_inv, vectors)
        return np.maximum(quads, 0.0)

    def logdet_gain(self, v) -> float:
        """Gain marginal log(1 + α vᵀH⁻¹v) = log det(H + αvvᵀ) − log det H."""
        return float(np.log1p(self.alpha * self.quad_form(v)))

    def apply_update(self, v) -> "InformationState":
        """
        H ← H + α v vᵀ, inverse mise à jour par Sherman–Morrison.

        Une refactorisation complète a lieu dès que le compteur atteint
        refresh_interval.
        """
        v = self._check_vector(v)
        u = self.h_inv @ v
        quad = max(float(v @ u), 0.0)
        denom = 1.0 + self.alpha * quad
        self.h = symmetrize(self.h + self.alpha * np.outer(v, v))
        self.h_inv = symmetrize(self.h_inv - (self.alpha / denom) * np.outer(u, u))
        self.logdet += float(np.log1p(self.alpha * quad))
        self.updates_since_refresh += 1
        if self.updates_since_refresh >= self.refresh_interval:
            logging.debug(f"Refactorisation après {self.updates_since_refresh} mises à jour")
            self.refresh()
        return self

    def refresh(self) -> "InformationState":
        """Recalcule h_inv et logdet depuis une factorisation de Cholesky fraîche de h."""
        self.h_inv, self.logdet = spd_inverse(self.h)
        self.updates_since_refresh = 0
        return self


def init_information(gamma: float, alpha: float, dim: int,
                     refresh_interval: int = REFRESH_INTERVAL) -> InformationState:
    """
    Crée H_0 = γI.

    Args:
        gamma: ridge γ > 0
        alpha: échelle de Fisher α₀ ≥ 0
        dim: dimension d ≥ 1
        refresh_interval: période de refactorisation

    Returns:
        InformationState: état initial avec h_inv = I/γ et logdet = d·log γ
    """
    if not gamma > 0:
        raise InvalidArgumentError(f"gamma doit être > 0 (reçu {gamma})")
    if not alpha >= 0:
        raise InvalidArgumentError(f"alpha doit être ≥ 0 (reçu {alpha})")
    if int(dim) != dim or dim < 1:
        raise InvalidArgumentError(f"dim doit être un entier ≥ 1 (reçu {dim})")
    if refresh_interval < 1:
        raise InvalidArgumentError(f"refresh_interval doit être ≥ 1 (reçu {refresh_interval})")
    dim = int(dim)
    return InformationState(
        h=gamma * np.eye(dim),
        h_inv=np.eye(dim) / gamma,
        logdet=dim * float(np.log(gamma)),
        gamma=gamma,
        alpha=alpha,
        refresh_interval=refresh_interval,
    )


def quad_form(state: InformationState, v) -> float:
    return state.quad_form(v)


def logdet_gain(state: InformationState, v) -> float:
    return state.logdet_gain(v)


def apply_update(state: InformationState, v) -> InformationState:
    return state.apply_update(v)


def refresh(state: InformationState) -> InformationState:
    return state.refresh()
