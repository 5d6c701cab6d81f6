"""Bibliothèque partagée pour la sélection D-optimale de négatifs (MASS-DPO)."""
