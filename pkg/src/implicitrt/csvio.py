"""Deterministic CSV persistence.

File layout, byte-exact given identical inputs:

    # key=value          (metadata lines: config echo, version)
    col_a,col_b          (column-name line)
    1.0000000000000000e-01,...   (17-significant-digit rows, newline-terminated)

Floats are written with 17 significant digits so they round-trip exactly.
"""

import numpy as np

from .errors import TransportError

__all__ = ["write_csv", "read_csv"]


def _format_value(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".16e")


def write_csv(path, columns, rows, metadata=()):
    """Write rows of numbers under a column-name line and `# key=value` metadata.

    ``metadata`` is a sequence of (key, value) pairs written in the given
    order; values are stringified as-is.  ``rows`` is an iterable of
    sequences matching ``columns``.
    """
    lines = []
    for key, value in metadata:
        lines.append(f"# {key}={value}")
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise TransportError(
                f"row width {len(row)} does not match {len(columns)} columns"
            )
        lines.append(",".join(_format_value(v) for v in row))
    text = "\n".join(lines) + "\n"
    try:
        with open(path, "w") as handle:
            handle.write(text)
    except OSError as exc:
        raise TransportError(f"cannot write {path}: {exc}") from exc


def read_csv(path):
    """Read a file written by ``write_csv``.

    Returns (metadata dict, column list, data array of shape (n_rows, n_cols));
    the array is empty with the right width when there are no rows.
    """
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
        raise TransportError(f"{path} has no column line")
    data = np.array(rows) if rows else np.empty((0, len(columns)))
    return metadata, columns, data
