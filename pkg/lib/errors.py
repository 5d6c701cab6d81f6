#!/bin/env python3
"""
Exceptions de la bibliothèque.

Toutes dérivent de MassDpoError afin que le script CLI puisse les attraper
en un seul bloc et retourner un code de sortie non nul.
"""


class MassDpoError(Exception):
    """Erreur de base de la bibliothèque."""


class InvalidArgumentError(MassDpoError, ValueError):
    """Argument invalide (dimension, précondition, valeur non finie...)."""


class PoolFormatError(InvalidArgumentError):
    """Ligne JSONL mal formée dans un fichier de pools, sélections ou theta."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"ligne {line_number}: {message}"
        super().__init__(message)


class SchemaError(InvalidArgumentError):
    """Configuration de benchmark invalide; key_path désigne la clé fautive."""

    def __init__(self, key_path: str, message: str):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}")


class NumericFailureError(MassDpoError, ArithmeticError):
    """Échec de factorisation de Cholesky."""

    def __init__(self, message: str, minor_index: int | None = None):
        self.minor_index = minor_index
        if minor_index is not None:
            message = f"{message} (mineur principal {minor_index} non défini positif)"
        super().__init__(message)


class CapacityExceededError(MassDpoError, RuntimeError):
    """Énumération exhaustive refusée car trop de sous-ensembles."""
