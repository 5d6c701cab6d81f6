#!/bin/env python3
"""
Générateur pseudo-aléatoire entièrement spécifié.

Graine étendue par splitmix64, génération xoshiro256**, gaussiennes par
Box–Muller (les deux sorties sont consommées dans l'ordre). Le flux est
identique d'une plateforme à l'autre, ce que numpy.random ne garantit pas
pour ses générateurs.
"""
import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
TWO_POW_MINUS_53 = 2.0 ** -53


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(x: int) -> int:
    """Première sortie de splitmix64 initialisé à l'état x."""
    return _mix64((x + GOLDEN_GAMMA) & MASK64)


def derive_seed(master_seed: int, index: int) -> int:
    """Graine d'un flux dérivé: splitmix64(master XOR index)."""
    return splitmix64((int(master_seed) ^ int(index)) & MASK64)


def stream_seed(master_seed: int, index: int) -> int:
    """
    Graine du flux `index` d'un générateur de données: splitmix64(splitmix64(master) XOR index).

    La graine maîtresse est mélangée avant le XOR, si bien que (master, index)
    et (master XOR 1, index XOR 1) ne partagent pas de flux.
    """
    return splitmix64((splitmix64(int(master_seed) & MASK64) ^ int(index)) & MASK64)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** initialisé par quatre sorties consécutives de splitmix64."""

    def __init__(self, seed: int):
        state = int(seed) & MASK64
        words = []
        for _ in range(4):
            state = (state + GOLDEN_GAMMA) & MASK64
            words.append(_mix64(state))
        self._s = words
        self._spare_normal = None

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniforme dans [0, 1) avec 53 bits de mantisse."""
        return (self.next_u64() >> 11) * TWO_POW_MINUS_53

    def below(self, bound: int) -> int:
        """Entier uniforme dans [0, bound)."""
        return min(int(self.random() * bound), bound - 1)

    def normal(self) -> float:
        """Gaussienne standard; chaque tirage Box–Muller fournit deux valeurs utilisées dans l'ordre."""
        if self._spare_normal is not None:
            value, self._spare_normal = self._spare_normal, None
            return value
        u1 = 1.0 - self.random()
        u2 = self.random()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._spare_normal = radius * math.sin(angle)
        return radius * math.cos(angle)

    def normals(self, count: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(count)], dtype=np.float64)

    def categorical(self, probabilities) -> int:
        """
        Tire un index selon des probabilités (pas nécessairement normalisées).

        Parcours cumulatif dans l'ordre des index; l'arrondi final retombe sur
        le dernier index de poids non nul.
        """
        weights = np.asarray(probabilities, dtype=np.float64)
        total = float(np.sum(weights))
        threshold = self.random() * total
        cumulative = 0.0
        last_positive = 0
        for index, weight in enumerate(weights):
            if weight <= 0.0:
                continue
            last_positive = index
            cumulative += float(weight)
            if threshold < cumulative:
                return index
        return last_positive
