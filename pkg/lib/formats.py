#!/bin/env python3
"""
Formats de fichiers.

- PoolFile, SelectionFile et fichier theta: JSONL, un objet par ligne,
  flottants écrits avec 17 chiffres significatifs (aller-retour exact en 64 bits)
- rapports: CSV écrits par astropy.table, toutes les cellules préformatées
"""
import itertools
import json
import logging
import math
from pathlib import Path

import numpy as np
from astropy.table import Table

from lib.errors import PoolFormatError
from lib.selector import RawPool, SelectionResult


def format_float(value: float) -> str:
    """Représentation décimale à 17 chiffres significatifs."""
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"Valeur non finie non sérialisable en JSON: {value}")
    return f"{value:.17g}"


def _encode(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, np.ndarray):
        return _encode(value.tolist())
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_encode(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_encode(v)}" for k, v in value.items()) + "}"
    raise TypeError(f"Type non sérialisable: {type(value).__name__}")


def dump_json_line(record: dict) -> str:
    """Une ligne JSON compacte, clés dans l'ordre d'insertion."""
    return _encode(record)


def write_jsonl(path, records) -> int:
    """Écrit un enregistrement par ligne; retourne le nombre de lignes."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(dump_json_line(record) + "\n")
            count += 1
    logging.info(f"{count} lignes écrites dans {path}")
    return count


def iter_jsonl(path):
    """Itère sur (numéro de ligne, objet) en ignorant les lignes vides."""
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise PoolFormatError(f"JSON invalide ({e.msg})", line_number) from e
            if not isinstance(record, dict):
                raise PoolFormatError("un objet JSON est attendu", line_number)
            yield line_number, record


def _require(record: dict, key: str, line_number: int):
    if key not in record:
        raise PoolFormatError(f"clé manquante '{key}'", line_number)
    return record[key]


def _float_vector(value, key: str, line_number: int, length: int | None = None) -> np.ndarray:
    try:
        vector = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise PoolFormatError(f"'{key}' doit être un tableau de nombres", line_number) from e
    if vector.ndim != 1 or (length is not None and vector.shape[0] != length):
        raise PoolFormatError(f"'{key}' doit être un vecteur de longueur {length}", line_number)
    return vector


def pool_to_record(pool: RawPool) -> dict:
    record = {
        "pool_id": pool.pool_id,
        "dim": pool.dim,
        "preferred": pool.preferred_features,
        "candidates": pool.candidate_features,
        "logp_ref_preferred": pool.logp_ref_preferred,
        "logp_ref_candidates": pool.logp_ref_candidates,
    }
    if pool.theta_true is not None:
        record["theta_true"] = pool.theta_true
    return record


def write_pools(path, pools) -> int:
    return write_jsonl(path, (pool_to_record(p) for p in pools))


def read_pools(path) -> list[RawPool]:
    """
    Lit un PoolFile.

    Raises:
        PoolFormatError: ligne mal formée ou dimension incohérente (numéro de ligne joint)
    """
    pools = []
    dim = None
    seen = set()
    for line_number, record in iter_jsonl(path):
        pool_id = _require(record, "pool_id", line_number)
        if not isinstance(pool_id, str):
            raise PoolFormatError("'pool_id' doit être une chaîne", line_number)
        if pool_id in seen:
            raise PoolFormatError(f"pool_id en double: {pool_id}", line_number)
        line_dim = _require(record, "dim", line_number)
        if not isinstance(line_dim, int) or isinstance(line_dim, bool) or line_dim < 1:
            raise PoolFormatError("'dim' doit être un entier ≥ 1", line_number)
        if dim is None:
            dim = line_dim
        elif line_dim != dim:
            raise PoolFormatError(f"dimension {line_dim} différente de la première ligne ({dim})", line_number)
        preferred = _float_vector(_require(record, "preferred", line_number), "preferred", line_number, dim)
        try:
            candidates = np.asarray(_require(record, "candidates", line_number), dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise PoolFormatError("'candidates' doit être une matrice de nombres", line_number) from e
        if candidates.ndim != 2 or candidates.shape[1] != dim or candidates.shape[0] < 1:
            raise PoolFormatError(f"'candidates' doit être une liste non vide de vecteurs de longueur {dim}",
                                  line_number)
        logp_candidates = _float_vector(_require(record, "logp_ref_candidates", line_number),
                                        "logp_ref_candidates", line_number, candidates.shape[0])
        logp_preferred = _require(record, "logp_ref_preferred", line_number)
        if not isinstance(logp_preferred, (int, float)) or isinstance(logp_preferred, bool):
            raise PoolFormatError("'logp_ref_preferred' doit être un nombre", line_number)
        theta_true = record.get("theta_true")
        if theta_true is not None:
            theta_true = _float_vector(theta_true, "theta_true", line_number, dim)
        try:
            pools.append(RawPool(pool_id, preferred, candidates, float(logp_preferred),
                                 logp_candidates, theta_true))
        except ValueError as e:
            raise PoolFormatError(str(e), line_number) from e
        seen.add(pool_id)
    logging.info(f"{len(pools)} pools lus depuis {path}")
    return pools


def selection_to_record(selection: SelectionResult) -> dict:
    record = {
        "pool_id": selection.pool_id,
        "strategy": selection.strategy,
        "n": int(selection.n or len(selection.selected)),
        "beta": selection.beta,
        "gamma": selection.gamma,
        "selected": [int(i) for i in selection.selected],
        "gains": [float(g) for g in selection.gains],
        "quads": [float(q) for q in selection.quads],
        "logdet_final": selection.logdet_final,
    }
    if selection.seed is not None:
        record["seed"] = int(selection.seed)
    return record


def write_selections(path, selections) -> int:
    return write_jsonl(path, (selection_to_record(s) for s in selections))


def _trajectory_from_gains(gains: list[float], logdet_final) -> tuple[float, list[float]]:
    """
    Reconstruit (logdet initial, trajectoire) à partir des gains et du
    logdet final stocké. Sans logdet_final, la trajectoire part de 0.
    """
    if logdet_final is None:
        initial = 0.0
    else:
        initial = float(logdet_final) - math.fsum(gains)
    trajectory = [initial + total for total in itertools.accumulate(gains)]
    if trajectory and logdet_final is not None:
        trajectory[-1] = float(logdet_final)
    return initial, trajectory


def read_selections(path) -> list[SelectionResult]:
    """Lit un SelectionFile; la trajectoire est reconstruite depuis les gains et logdet_final."""
    selections = []
    for line_number, record in iter_jsonl(path):
        try:
            selected = [int(i) for i in _require(record, "selected", line_number)]
            gains = [float(g) for g in record.get("gains", [])]
            quads = [float(q) for q in record.get("quads", [])]
            if len(gains) != len(selected) or len(quads) != len(selected):
                raise PoolFormatError("'selected', 'gains' et 'quads' doivent avoir la même longueur",
                                      line_number)
            initial, trajectory = _trajectory_from_gains(gains, record.get("logdet_final"))
            selection = SelectionResult(
                pool_id=str(_require(record, "pool_id", line_number)),
                strategy=str(_require(record, "strategy", line_number)),
                selected=selected,
                gains=gains,
                quads=quads,
                logdet_trajectory=trajectory,
                seed=record.get("seed"),
                n=int(_require(record, "n", line_number)),
                beta=record.get("beta"),
                gamma=record.get("gamma"),
                logdet_initial=initial,
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, PoolFormatError):
                raise
            raise PoolFormatError(f"sélection invalide ({e})", line_number) from e
        selections.append(selection)
    return selections


def write_thetas(path, records) -> int:
    return write_jsonl(path, records)


def read_thetas(path) -> dict[str, dict]:
    """
    Lit un fichier theta. La clé "*" désigne un ajustement par lot valable
    pour tous les pools.
    """
    thetas = {}
    for line_number, record in iter_jsonl(path):
        pool_id = str(_require(record, "pool_id", line_number))
        entry = dict(record)
        entry["theta"] = _float_vector(_require(record, "theta", line_number), "theta", line_number)
        thetas[pool_id] = entry
    return thetas


def format_cell(value) -> str:
    """Cellule CSV: flottants à 17 chiffres, nan pour l'absence, true/false pour les booléens."""
    if value is None:
        return "nan"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    text = str(value)
    return text if text else "-"


def write_csv(path, rows: list[dict], columns: list[str]) -> int:
    """
    Écrit un CSV avec en-tête dans l'ordre de `columns`; les colonnes absentes
    d'une ligne valent nan.
    """
    if rows:
        data = [np.array([format_cell(row.get(col)) for row in rows], dtype=str) for col in columns]
        table = Table(data, names=columns)
    else:
        table = Table(names=columns, dtype=[str] * len(columns))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    table.write(path, format="ascii.csv", overwrite=True)
    logging.info(f"{len(rows)} lignes écrites dans {path}")
    return len(rows)
