"""Matrix Market reader/writer (``array`` and ``coordinate``, real general).

Values are written with 17 significant digits so a write/read cycle returns
bit-identical doubles. Duplicate coordinate entries are rejected rather than
summed.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .core import LinearOperator
from .errors import MatrixMarketError

_FIELDS = {"real", "integer", "double"}


def _data_lines(lines, start):
    for lineno, raw in enumerate(lines[start:], start=start + 1):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        yield lineno, text


def read_matrix_market(path):
    """Read a Matrix Market file into a :class:`LinearOperator`."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket" or header[1].lower() != "matrix":
        raise MatrixMarketError("expected '%%MatrixMarket matrix <format> <field> <symmetry>'", 1)
    fmt, field, symmetry = (h.lower() for h in header[2:])
    if fmt not in ("array", "coordinate"):
        raise MatrixMarketError(f"unsupported format {fmt!r}", 1)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field {field!r}", 1)
    if symmetry != "general":
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}", 1)

    body = _data_lines(lines, 1)
    try:
        lineno, size_line = next(body)
    except StopIteration:
        raise MatrixMarketError("missing size line", len(lines)) from None
    try:
        dims = [int(tok) for tok in size_line.split()]
    except ValueError:
        raise MatrixMarketError(f"bad size line {size_line!r}", lineno) from None

    if fmt == "array":
        if len(dims) != 2 or min(dims) < 1:
            raise MatrixMarketError("array size line must be 'rows cols'", lineno)
        m, n = dims
        vals = []
        for lineno, text in body:
            toks = text.split()
            if len(toks) != 1:
                raise MatrixMarketError("array entries must be one value per line", lineno)
            vals.append(_parse_value(toks[0], lineno))
        if len(vals) != m * n:
            raise MatrixMarketError(f"expected {m * n} values, found {len(vals)} before end of file", len(lines))
        # column-major on disk
        M = np.array(vals, dtype=np.float64).reshape((n, m)).T
        return LinearOperator.from_dense(M)

    if len(dims) != 3 or min(dims[:2]) < 1 or dims[2] < 0:
        raise MatrixMarketError("coordinate size line must be 'rows cols nnz'", lineno)
    m, n, nnz = dims
    rows, cols, vals = [], [], []
    seen = set()
    for lineno, text in body:
        toks = text.split()
        if len(toks) != 3:
            raise MatrixMarketError("coordinate entries must be 'row col value'", lineno)
        try:
            i, j = int(toks[0]), int(toks[1])
        except ValueError:
            raise MatrixMarketError("non-integer index", lineno) from None
        if not (1 <= i <= m and 1 <= j <= n):
            raise MatrixMarketError(f"index ({i}, {j}) out of range", lineno)
        if (i, j) in seen:
            raise MatrixMarketError(f"duplicate entry ({i}, {j})", lineno)
        seen.add((i, j))
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(_parse_value(toks[2], lineno))
    if len(vals) != nnz:
        raise MatrixMarketError(f"expected {nnz} entries, found {len(vals)} before end of file", len(lines))
    S = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
    return LinearOperator.from_sparse(S)


def _parse_value(tok, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise MatrixMarketError(f"bad value {tok!r}", lineno) from None
    if not np.isfinite(v):
        raise MatrixMarketError(f"non-finite value {tok!r}", lineno)
    return v


def write_matrix_market(path, A, comments=()):
    """Write a dense or CSR operator; composed operators are materialised."""
    A = A if isinstance(A, LinearOperator) else LinearOperator.from_dense(A)
    m, n = A.shape
    out = []
    if A.kind == "csr":
        out.append("%%MatrixMarket matrix coordinate real general")
        out.extend(f"% {c}" for c in comments)
        coo = A.data.tocoo()
        order = np.lexsort((coo.row, coo.col))
        out.append(f"{m} {n} {coo.nnz}")
        out.extend(
            f"{coo.row[k] + 1} {coo.col[k] + 1} {coo.data[k]:.17g}" for k in order
        )
    else:
        out.append("%%MatrixMarket matrix array real general")
        out.extend(f"% {c}" for c in comments)
        out.append(f"{m} {n}")
        M = A.todense()
        out.extend(f"{v:.17g}" for v in M.T.ravel())
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
