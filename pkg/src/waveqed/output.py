"""Deterministic CSV/JSON serialisation of tables and phase maps."""
from __future__ import annotations

import io
import json
import math
from typing import Any, Sequence

import numpy as np

FLOAT_FORMAT = ".17g"


def fmt(value: Any) -> str:
    """Locale-independent cell text; floats keep 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), FLOAT_FORMAT)
    return str(value)


def jsonable(value: Any) -> Any:
    """Convert numpy/complex/tuple values to plain JSON; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return {"re": jsonable(value.real), "im": jsonable(value.imag)}
    return value


def dumps(obj: Any, indent: int | None = None) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=indent, allow_nan=False)


def table_csv(metadata: dict, columns: Sequence[str], rows) -> str:
    """Metadata as a ``# {json}`` comment line, then a header and the rows."""
    buf = io.StringIO()
    buf.write("# " + dumps(metadata) + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def table_json(metadata: dict, columns: Sequence[str], rows) -> str:
    return dumps({"metadata": metadata, "columns": list(columns), "rows": [list(r) for r in rows]}, indent=1) + "\n"


def phase_map_json(metadata: dict, pm) -> str:
    cells = [
        [{"ctp": int(pm.ctp[i, j]), "crp": int(pm.crp[i, j])} for j in range(pm.delta.size)]
        for i in range(pm.Omega.size)
    ]
    payload = {
        "metadata": metadata,
        "axes": {"Omega": pm.Omega, "delta": pm.delta},
        "cells": cells,
        "predicted_crp": pm.predicted_crp,
    }
    return dumps(payload, indent=1) + "\n"


def phase_map_rows(pm):
    for i, Om in enumerate(pm.Omega):
        for j, d in enumerate(pm.delta):
            yield (float(Om), float(d), int(pm.ctp[i, j]), int(pm.crp[i, j]), int(pm.predicted_crp[i, j]))


PHASE_MAP_COLUMNS = ("Omega", "delta", "ctp", "crp", "predicted_crp")
