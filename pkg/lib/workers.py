#!/bin/env python3
"""Exécution parallèle par pool, résultats rendus dans l'ordre d'entrée."""
import concurrent.futures
import logging


def ordered_map(func, items, workers: int = 1) -> list:
    """
    Applique `func` à chaque élément, en série si workers ≤ 1, sinon dans un
    ProcessPoolExecutor. L'ordre des résultats est celui des entrées.

    `func` et les éléments doivent être sérialisables (fonction de module).
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    logging.info(f"Traitement parallèle de {len(items)} éléments sur {workers} processus")
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))
