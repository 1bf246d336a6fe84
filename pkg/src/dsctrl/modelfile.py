"""Plain-text model files (COMPleib-style matrix blocks).

Format::

    # comment
    name <identifier>          (optional)
    dims n m p [m1 p1]         (m1, p1 default to 1)
    A
    <n rows of n values>
    B
    <n rows of m values>
    C
    <p rows of n values>
    B1 / C1 / D11 / D12 / D21  (optional, zero when omitted)

Block headers are case-insensitive.  Values are whitespace separated.
"""

from pathlib import Path

import numpy as np

from .errors import ParseError
from .lti import StateSpaceModel

__all__ = ["parse_model_file", "serialize_model", "read_model", "write_model"]

BLOCKS = ("A", "B", "C", "B1", "C1", "D11", "D12", "D21")


def _block_shape(name, n, m, p, m1, p1):
    return {
        "A": (n, n), "B": (n, m), "C": (p, n), "B1": (n, m1), "C1": (p1, n),
        "D11": (p1, m1), "D12": (p1, m), "D21": (p, m1),
    }[name]


def parse_model_file(text: str, name: str = "model") -> StateSpaceModel:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            lines.append((lineno, body.split()))

    dims = None
    blocks = {}
    i = 0
    while i < len(lines):
        lineno, tok = lines[i]
        head = tok[0].lower()
        i += 1
        if head == "name":
            if len(tok) != 2:
                raise ParseError("name line needs exactly one identifier", lineno)
            name = tok[1]
            continue
        if head == "dims":
            if dims is not None:
                raise ParseError("duplicate dims line", lineno)
            if len(tok) not in (4, 6):
                raise ParseError("dims needs 'n m p' or 'n m p m1 p1'", lineno)
            try:
                vals = [int(t) for t in tok[1:]]
            except ValueError:
                raise ParseError("dims entries must be integers", lineno) from None
            if len(vals) == 3:
                vals += [1, 1]
            if min(vals) < 1:
                raise ParseError("all dimensions must be >= 1", lineno)
            dims = vals
            continue
        block = tok[0].upper()
        if block not in BLOCKS or len(tok) != 1:
            raise ParseError(f"unexpected line {' '.join(tok)!r}", lineno)
        if dims is None:
            raise ParseError("block before dims line", lineno)
        if block in blocks:
            raise ParseError(f"duplicate block {block}", lineno)
        rows, cols = _block_shape(block, *dims)
        mat = np.empty((rows, cols))
        for r in range(rows):
            if i >= len(lines):
                raise ParseError(f"block {block} ended after {r} of {rows} rows", lineno)
            row_no, row = lines[i]
            i += 1
            if len(row) != cols:
                raise ParseError(
                    f"block {block} row {r + 1} has {len(row)} values, expected {cols}", row_no)
            try:
                mat[r] = [float(v) for v in row]
            except ValueError:
                raise ParseError(f"non-numeric value in block {block}", row_no) from None
            if not np.all(np.isfinite(mat[r])):
                raise ParseError(f"non-finite value in block {block}", row_no)
        blocks[block] = mat

    if dims is None:
        raise ParseError("missing dims line")
    for req in ("A", "B", "C"):
        if req not in blocks:
            raise ParseError(f"missing required block {req}")
    for blk in BLOCKS:
        blocks.setdefault(blk, np.zeros(_block_shape(blk, *dims)))
    return StateSpaceModel(
        a=blocks["A"], b1=blocks["B1"], b=blocks["B"], c1=blocks["C1"], c=blocks["C"],
        d11=blocks["D11"], d12=blocks["D12"], d21=blocks["D21"], name=name,
    )


def serialize_model(model: StateSpaceModel, comments=()) -> str:
    if not model.name or any(ch.isspace() or ch == "#" for ch in model.name):
        raise ValueError(f"model name {model.name!r} cannot be written to a model file")
    out = [f"# {c}" for c in comments]
    out.append(f"name {model.name}")
    out.append(f"dims {model.n} {model.m} {model.p} {model.m1} {model.p1}")
    for blk in BLOCKS:
        out.append(blk)
        for row in getattr(model, blk.lower()):
            out.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(out) + "\n"


def read_model(path) -> StateSpaceModel:
    path = Path(path)
    return parse_model_file(path.read_text(), name=path.stem)


def write_model(model: StateSpaceModel, path, comments=()):
    Path(path).write_text(serialize_model(model, comments))
