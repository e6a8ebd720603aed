"""Reader for the solver's CSV contract.

Files look like::

    # key=value
    col_a,col_b
    1.0000000000000001e-01,...

Metadata keys of interest here: ``nx``/``ny`` (grid shape for 2D profiles)
and ``epsilon_run`` (the Knudsen number of an asymptotic-sweep series).
"""

import numpy as np

__all__ = ["read_csv", "SchemaError"]


class SchemaError(ValueError):
    """An input file does not match the schema a plot kind requires."""


def read_csv(path):
    """Return (metadata dict, column list, (n_rows, n_cols) array)."""
    metadata = {}
    columns = None
    rows = []
    with open(path) as handle:
        for raw in handle:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    metadata[key.strip()] = value.strip()
                continue
            if columns is None:
                columns = [c.strip() for c in line.split(",")]
                continue
            rows.append([float(v) for v in line.split(",")])
    if columns is None:
        raise SchemaError(f"{path} has no column line")
    data = np.array(rows) if rows else np.empty((0, len(columns)))
    return metadata, columns, data


def require_columns(path, columns, needed):
    for name in needed:
        if name not in columns:
            raise SchemaError(
                f"column {name!r} missing in {path}; found {columns}"
            )
