"""Minimal Matrix Market reader/writer with line-numbered parse errors.

Supports the subset the toolkit emits and ingests: real/integer matrices
in array or coordinate format, general or symmetric.  The writer produces
a stable byte layout (fixed float format, sorted coordinates) so repeated
runs of the same job emit identical files.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ParseError


def _fail(path, lineno, msg):
    raise ParseError(f"{path}:{lineno}: {msg}")


def read_matrix(path):
    """Read one Matrix Market file as ndarray (array) or csr_array (coordinate)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        _fail(path, 1, "empty file")
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket" or header[1] != "matrix":
        _fail(path, 1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'")
    fmt, field, symmetry = header[2].lower(), header[3].lower(), header[4].lower()
    if fmt not in ("array", "coordinate"):
        _fail(path, 1, f"unsupported format {fmt!r}")
    if field not in ("real", "integer"):
        _fail(path, 1, f"unsupported field {field!r} (need real or integer)")
    if symmetry not in ("general", "symmetric"):
        _fail(path, 1, f"unsupported symmetry {symmetry!r}")

    k = 1
    while k < len(lines) and (lines[k].startswith("%") or not lines[k].strip()):
        k += 1
    if k >= len(lines):
        _fail(path, len(lines), "missing size line")
    size = lines[k].split()
    want = 2 if fmt == "array" else 3
    if len(size) != want:
        _fail(path, k + 1, f"size line needs {want} integers")
    try:
        dims = [int(x) for x in size]
    except ValueError:
        _fail(path, k + 1, "size line entries must be integers")
    if any(x < 0 for x in dims):
        _fail(path, k + 1, "negative dimension")

    if fmt == "array":
        rows, cols = dims
        if symmetry == "symmetric" and rows != cols:
            _fail(path, k + 1, "symmetric matrix must be square")
        data = []
        for j, line in enumerate(lines[k + 1 :], start=k + 2):
            txt = line.strip()
            if not txt or txt.startswith("%"):
                continue
            try:
                data.append(float(txt))
            except ValueError:
                _fail(path, j, f"bad numeric value {txt!r}")
        # symmetric array files carry only the lower triangle, column-major
        need = rows * (rows + 1) // 2 if symmetry == "symmetric" else rows * cols
        if len(data) != need:
            _fail(path, len(lines), f"expected {need} entries, found {len(data)}")
        if symmetry == "symmetric":
            M = np.zeros((rows, cols))
            pos = 0
            for col in range(cols):
                m = rows - col
                M[col:, col] = data[pos : pos + m]
                pos += m
            return M + np.tril(M, -1).T
        return np.array(data).reshape((cols, rows)).T  # column-major on disk

    rows, cols, nnz = dims
    ri, ci, vals = [], [], []
    count = 0
    for j, line in enumerate(lines[k + 1 :], start=k + 2):
        txt = line.strip()
        if not txt or txt.startswith("%"):
            continue
        parts = txt.split()
        if len(parts) != 3:
            _fail(path, j, "coordinate line needs 'row col value'")
        try:
            r, c = int(parts[0]), int(parts[1])
            v = float(parts[2])
        except ValueError:
            _fail(path, j, f"bad coordinate entry {txt!r}")
        if not (1 <= r <= rows and 1 <= c <= cols):
            _fail(path, j, f"index ({r}, {c}) outside {rows} x {cols}")
        ri.append(r - 1)
        ci.append(c - 1)
        vals.append(v)
        if symmetry == "symmetric" and r != c:
            ri.append(c - 1)
            ci.append(r - 1)
            vals.append(v)
        count += 1
    if count != nnz:
        _fail(path, len(lines), f"expected {nnz} coordinate entries, found {count}")
    return sp.coo_array((vals, (ri, ci)), shape=(rows, cols)).tocsr()


def write_matrix(path, M, comment=None):
    """Write dense arrays in array format, sparse in coordinate format."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        if sp.issparse(M):
            coo = M.tocoo()
            fh.write("%%MatrixMarket matrix coordinate real general\n")
            if comment:
                fh.write(f"% {comment}\n")
            order = np.lexsort((coo.coords[0], coo.coords[1]))
            fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for i in order:
                fh.write(
                    f"{coo.coords[0][i] + 1} {coo.coords[1][i] + 1} "
                    f"{coo.data[i]:.17g}\n"
                )
        else:
            A = np.atleast_2d(np.asarray(M, dtype=float))
            if A.ndim != 2:
                raise ValueError("only 2-d arrays can be written")
            if np.asarray(M).ndim == 1:
                A = A.T  # vectors go out as a single column
            fh.write("%%MatrixMarket matrix array real general\n")
            if comment:
                fh.write(f"% {comment}\n")
            fh.write(f"{A.shape[0]} {A.shape[1]}\n")
            for col in A.T:
                for v in col:
                    fh.write(f"{v:.17g}\n")
