"""Matrix Market reader and writer for dense real matrices.

Supported headers: ``%%MatrixMarket matrix {array|coordinate} {real|integer}
{general|symmetric|skew-symmetric}``. Array data is column-major; coordinate
indices are 1-based, unspecified entries are zero and duplicates are summed.
"""

import numpy as np

from .errors import DimensionError, ParseError

_FORMATS = ("array", "coordinate")
_FIELDS = ("real", "integer", "double")
_SYMMETRIES = ("general", "symmetric", "skew-symmetric")


def _data_lines(lines, start):
    for lineno, raw in enumerate(lines[start:], start=start + 1):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        yield lineno, text


def _parse_float(tok, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"bad numeric entry {tok!r}", lineno) from None
    if not np.isfinite(v):
        raise ParseError(f"non-finite entry {tok!r}", lineno)
    return v


def _parse_int(tok, lineno, what):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"bad {what} {tok!r}", lineno) from None


def parse_matrix_market(text):
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0] != "%%MatrixMarket" or head[1].lower() != "matrix":
        raise ParseError("expected '%%MatrixMarket matrix <format> <field> <symmetry>'", 1)
    fmt, fld, sym = (h.lower() for h in head[2:])
    if fmt not in _FORMATS:
        raise ParseError(f"unsupported format {fmt!r}", 1)
    if fld not in _FIELDS:
        raise ParseError(f"unsupported field {fld!r}", 1)
    if sym not in _SYMMETRIES:
        raise ParseError(f"unsupported symmetry {sym!r}", 1)

    body = _data_lines(lines, 1)
    try:
        lineno, size_line = next(body)
    except StopIteration:
        raise ParseError("missing size line", len(lines)) from None
    size = size_line.split()
    want = 2 if fmt == "array" else 3
    if len(size) != want:
        raise ParseError(f"size line needs {want} integers", lineno)
    dims = [_parse_int(tok, lineno, "size") for tok in size]
    rows, cols = dims[0], dims[1]
    if rows < 1 or cols < 1:
        raise ParseError("matrix dimensions must be positive", lineno)
    if sym != "general" and rows != cols:
        raise ParseError(f"{sym} matrix must be square", lineno)

    out = np.zeros((rows, cols))
    if fmt == "array":
        if sym == "general":
            slots = [(i, j) for j in range(cols) for i in range(rows)]
        else:
            lo = 0 if sym == "symmetric" else 1
            slots = [(i, j) for j in range(cols) for i in range(j + lo, rows)]
        k = 0
        for lineno, text in body:
            for tok in text.split():
                if k >= len(slots):
                    raise ParseError("more entries than the size line declares", lineno)
                i, j = slots[k]
                out[i, j] = _parse_float(tok, lineno)
                k += 1
        if k != len(slots):
            raise ParseError(f"expected {len(slots)} entries, found {k}", len(lines))
    else:
        nnz = dims[2]
        if nnz < 0:
            raise ParseError("negative entry count", lineno)
        k = 0
        for lineno, text in body:
            toks = text.split()
            if len(toks) != 3:
                raise ParseError("coordinate entry needs 'row col value'", lineno)
            if k >= nnz:
                raise ParseError("more entries than the size line declares", lineno)
            i = _parse_int(toks[0], lineno, "row index")
            j = _parse_int(toks[1], lineno, "column index")
            if not (1 <= i <= rows and 1 <= j <= cols):
                raise DimensionError(f"line {lineno}: index ({i}, {j}) outside {rows}x{cols}")
            out[i - 1, j - 1] += _parse_float(toks[2], lineno)
            k += 1
        if k != nnz:
            raise ParseError(f"expected {nnz} entries, found {k}", len(lines))
    if sym == "symmetric":
        out = np.tril(out) + np.tril(out, -1).T
    elif sym == "skew-symmetric":
        low = np.tril(out, -1)
        out = low - low.T
    return out


def load_matrix_market(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_matrix_market(fh.read())


def load_vector(path):
    """Read a vector stored as an ``n x 1`` (or ``1 x n``) matrix."""
    m = load_matrix_market(path)
    if m.shape[1] != 1 and m.shape[0] != 1:
        raise DimensionError(f"{path}: expected a single column, got {m.shape}")
    return m.reshape(-1)


def save_matrix_market(path, m, comment=None):
    """Write ``m`` (2-D, or 1-D as a column) in ``array real general`` format."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    lines = ["%%MatrixMarket matrix array real general"]
    if comment:
        lines.extend(f"% {c}" for c in comment.splitlines())
    lines.append(f"{m.shape[0]} {m.shape[1]}")
    lines.extend(format(v, ".17g") for v in m.T.reshape(-1))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
