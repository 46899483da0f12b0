"""Matrix Market reader for dense (array) and sparse (coordinate) files.

Handles real, integer, and complex fields with general, symmetric, hermitian,
or skew-symmetric symmetry; coordinate entries are densified.  Parse failures
raise ParseError with the offending 1-based line number.
"""

import numpy as np

from .errors import ParseError


def _tokens(path):
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            yield lineno, raw.rstrip("\n")


def read_matrix_market(path):
    lines = _tokens(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    parts = header.split()
    if len(parts) != 5 or parts[0] != "%%MatrixMarket" or parts[1].lower() != "matrix":
        raise ParseError(
            "expected header '%%MatrixMarket matrix <format> <field> <symmetry>'",
            lineno,
        )
    fmt, field, sym = (p.lower() for p in parts[2:5])
    if fmt not in ("array", "coordinate"):
        raise ParseError(f"unsupported format {fmt!r}", lineno)
    if field not in ("real", "integer", "complex"):
        raise ParseError(f"unsupported field {field!r}", lineno)
    if sym not in ("general", "symmetric", "hermitian", "skew-symmetric"):
        raise ParseError(f"unsupported symmetry {sym!r}", lineno)

    size_line = None
    for lineno, line in lines:
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        size_line = (lineno, stripped)
        break
    if size_line is None:
        raise ParseError("missing size line", lineno)

    lineno, stripped = size_line
    dims = stripped.split()
    if fmt == "array":
        if len(dims) != 2:
            raise ParseError("array size line needs 'rows cols'", lineno)
    else:
        if len(dims) != 3:
            raise ParseError("coordinate size line needs 'rows cols nnz'", lineno)
    try:
        nums = [int(d) for d in dims]
    except ValueError:
        raise ParseError(f"non-integer size entry in {stripped!r}", lineno) from None
    rows, cols = nums[0], nums[1]
    if rows != cols:
        raise ParseError(f"matrix must be square, got {rows}x{cols}", lineno)
    if rows < 1:
        raise ParseError("matrix dimension must be >= 1", lineno)

    a = np.zeros((rows, cols), dtype=np.complex128)

    def parse_value(toks, lineno):
        try:
            if field == "complex":
                if len(toks) != 2:
                    raise ValueError
                return complex(float(toks[0]), float(toks[1]))
            if len(toks) != 1:
                raise ValueError
            return complex(float(toks[0]), 0.0)
        except ValueError:
            raise ParseError(f"bad {field} value {' '.join(toks)!r}", lineno) from None

    if fmt == "array":
        # column-major dense listing; symmetric variants store the lower triangle
        if sym == "general":
            entries = [(i, j) for j in range(cols) for i in range(rows)]
        else:
            entries = [(i, j) for j in range(cols) for i in range(j, rows)]
        idx = 0
        for lineno, line in lines:
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            if idx >= len(entries):
                raise ParseError("more entries than the size line promised", lineno)
            i, j = entries[idx]
            a[i, j] = parse_value(stripped.split(), lineno)
            idx += 1
        if idx != len(entries):
            raise ParseError(
                f"expected {len(entries)} entries, found {idx}", lineno
            )
    else:
        nnz = nums[2]
        count = 0
        for lineno, line in lines:
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            toks = stripped.split()
            if len(toks) < 3:
                raise ParseError("coordinate entry needs 'row col value'", lineno)
            try:
                i, j = int(toks[0]) - 1, int(toks[1]) - 1
            except ValueError:
                raise ParseError(f"bad coordinate indices {stripped!r}", lineno) from None
            if not (0 <= i < rows and 0 <= j < cols):
                raise ParseError(f"coordinate ({i + 1},{j + 1}) out of range", lineno)
            a[i, j] = parse_value(toks[2:], lineno)
            count += 1
        if count != nnz:
            raise ParseError(f"expected {nnz} entries, found {count}", lineno)

    if sym != "general":
        for i in range(rows):
            for j in range(i):
                if sym == "symmetric":
                    a[j, i] = a[i, j]
                elif sym == "hermitian":
                    a[j, i] = np.conj(a[i, j])
                else:  # skew-symmetric
                    a[j, i] = -a[i, j]
    if not np.isfinite(a).all():
        raise ParseError("matrix has non-finite entries", 1)
    return a
