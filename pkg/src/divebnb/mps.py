"""MPS reading, normalization to >= form, and a diagnostic writer.

Both fixed and free format are accepted.  The parser starts in fixed mode
(fields at the classic column windows 2-3, 5-12, 15-22, 25-36, 40-47,
50-61) and switches permanently to free (whitespace-delimited) mode on the
first data line whose non-blank characters stray outside those windows.

Normalization rules:

* ``G`` rows are kept, ``L`` rows are negated, ``E`` rows are split into a
  >= pair, ranged rows become two >= rows bracketing the row interval.
* Maximization is negated into minimization; the original sense and the
  objective constant (negated RHS entry of the objective row) are kept on
  the Problem for reporting.
* continuous variables default to [0, inf); integer variables default to
  [0, inf) as well unless declared through BV; fractional bounds of integer
  variables are tightened inward when the Problem is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import Problem

# 0-based [start, end) character windows of fixed-format fields
_FIXED_FIELDS = [(1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61)]

_SECTIONS = {"NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES",
             "BOUNDS", "ENDATA"}

_BOUND_TYPES = {"LO", "UP", "FX", "FR", "MI", "PL", "BV", "LI", "UI"}


class MpsFormatError(ValueError):
    def __init__(self, msg: str, lineno: int):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass
class RawProblem:
    """Parsed MPS content before normalization."""

    name: str = ""
    sense: str = "MIN"
    obj_row: str | None = None
    row_types: dict = field(default_factory=dict)     # name -> G/L/E
    row_order: list = field(default_factory=list)     # constraint rows only
    entries: dict = field(default_factory=dict)       # row -> [(col, val)]
    obj_entries: dict = field(default_factory=dict)   # col -> val
    rhs: dict = field(default_factory=dict)
    ranges: dict = field(default_factory=dict)
    columns: list = field(default_factory=list)       # in appearance order
    integer: set = field(default_factory=set)
    bounds: list = field(default_factory=list)        # (type, col, val|None)
    obj_constant: float = 0.0


def _fixed_compliant(line: str) -> bool:
    """True if the line obeys the fixed-format field windows.

    Requires every non-blank character to sit inside a window and every
    populated window to be filled from its first column (fields are
    left-justified in fixed format).  Tabs disqualify a line outright.
    """
    body = line.rstrip("\n")
    if "\t" in body:
        return False
    for pos, ch in enumerate(body):
        if ch == " ":
            continue
        if not any(lo <= pos < hi for lo, hi in _FIXED_FIELDS):
            return False
    for lo, hi in _FIXED_FIELDS:
        window = body[lo:hi]
        if window.strip() and window[0] == " ":
            return False
    return True


def _fixed_fields(line: str) -> list[str]:
    out = []
    for lo, hi in _FIXED_FIELDS:
        tok = line[lo:hi].strip()
        if tok:
            out.append(tok)
    return out


def _num(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise MpsFormatError(f"bad numeric field {tok!r}", lineno)


def parse_mps(source: str, from_string: bool = False) -> RawProblem:
    """Parse an MPS file (path, or literal text with from_string=True)."""
    if from_string:
        text = source
    else:
        with open(source, "r") as fh:
            text = fh.read()
    raw = RawProblem()
    seen_cols: set = set()
    section = None
    fixed_mode = True
    in_integer = False
    pending_objsense = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        if line[0] not in " \t":
            parts = line.split()
            keyword = parts[0].upper()
            if keyword not in _SECTIONS:
                raise MpsFormatError(f"unknown section {keyword!r}", lineno)
            section = keyword
            pending_objsense = False
            if keyword == "NAME":
                raw.name = line[4:].strip()
            elif keyword == "OBJSENSE":
                if len(parts) > 1:
                    raw.sense = _sense(parts[1], lineno)
                else:
                    pending_objsense = True
            elif keyword == "ENDATA":
                break
            continue
        # data line
        if fixed_mode and not _fixed_compliant(line):
            fixed_mode = False
        fields = _fixed_fields(line) if fixed_mode else line.split()
        if not fields:
            continue
        if pending_objsense:
            raw.sense = _sense(fields[0], lineno)
            pending_objsense = False
            continue
        if section == "ROWS":
            if len(fields) < 2:
                raise MpsFormatError("ROWS line needs a type and a name",
                                     lineno)
            rtype, rname = fields[0].upper(), fields[1]
            if rtype == "N":
                if raw.obj_row is None:
                    raw.obj_row = rname
                continue
            if rtype not in ("G", "L", "E"):
                raise MpsFormatError(f"unknown row type {rtype!r}", lineno)
            raw.row_types[rname] = rtype
            raw.row_order.append(rname)
            raw.entries[rname] = []
        elif section == "COLUMNS":
            upper = [f.upper().strip("'\"") for f in fields]
            if "MARKER" in upper:
                if "INTORG" in upper:
                    in_integer = True
                elif "INTEND" in upper:
                    in_integer = False
                else:
                    raise MpsFormatError("marker without INTORG/INTEND",
                                         lineno)
                continue
            if len(fields) < 3:
                raise MpsFormatError("COLUMNS line needs col/row/value",
                                     lineno)
            col = fields[0]
            if col not in seen_cols:
                seen_cols.add(col)
                raw.columns.append(col)
            if in_integer:
                raw.integer.add(col)
            for k in range(1, len(fields) - 1, 2):
                rname, val = fields[k], _num(fields[k + 1], lineno)
                if rname == raw.obj_row:
                    raw.obj_entries[col] = raw.obj_entries.get(col, 0.0) + val
                elif rname in raw.entries:
                    raw.entries[rname].append((col, val))
                else:
                    raise MpsFormatError(f"unknown row {rname!r}", lineno)
        elif section == "RHS":
            for k in range(1, len(fields) - 1, 2):
                rname, val = fields[k], _num(fields[k + 1], lineno)
                if rname == raw.obj_row:
                    raw.obj_constant = -val
                elif rname in raw.entries:
                    raw.rhs[rname] = val
                else:
                    raise MpsFormatError(f"unknown RHS row {rname!r}", lineno)
        elif section == "RANGES":
            for k in range(1, len(fields) - 1, 2):
                rname, val = fields[k], _num(fields[k + 1], lineno)
                if rname not in raw.entries:
                    raise MpsFormatError(f"unknown RANGES row {rname!r}",
                                         lineno)
                raw.ranges[rname] = val
        elif section == "BOUNDS":
            btype = fields[0].upper()
            if btype not in _BOUND_TYPES:
                raise MpsFormatError(f"unknown bound type {btype!r}", lineno)
            needs_value = btype in ("LO", "UP", "FX", "LI", "UI")
            if needs_value:
                if len(fields) < 4:
                    raise MpsFormatError(f"{btype} bound needs a value",
                                         lineno)
                col, val = fields[2], _num(fields[3], lineno)
            else:
                if len(fields) < 3:
                    raise MpsFormatError("bound line needs a column", lineno)
                col, val = fields[2], None
            if col not in seen_cols:
                raise MpsFormatError(f"bound on unknown column {col!r}",
                                     lineno)
            raw.bounds.append((btype, col, val))
        elif section in ("NAME", "OBJSENSE"):
            continue
        else:
            raise MpsFormatError("data line outside any section", lineno)
    return raw


def _sense(tok: str, lineno: int) -> str:
    t = tok.upper()
    if t in ("MIN", "MINIMIZE"):
        return "MIN"
    if t in ("MAX", "MAXIMIZE"):
        return "MAX"
    raise MpsFormatError(f"unknown objective sense {tok!r}", lineno)


def normalize(raw: RawProblem) -> Problem:
    """Expand the raw rows into >= form and build a Problem."""
    cols = list(raw.columns)
    if not cols:
        raise ValueError("instance has no columns")
    cindex = {c: j for j, c in enumerate(cols)}
    n = len(cols)
    c = np.zeros(n)
    for col, val in raw.obj_entries.items():
        if col in cindex:
            c[cindex[col]] = val
    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    integer = {cindex[c_] for c_ in raw.integer if c_ in cindex}
    for btype, col, val in raw.bounds:
        j = cindex[col]
        if btype == "LO":
            lb[j] = val
        elif btype == "UP":
            ub[j] = val
        elif btype == "FX":
            lb[j] = ub[j] = val
        elif btype == "FR":
            lb[j], ub[j] = -np.inf, np.inf
        elif btype == "MI":
            lb[j] = -np.inf
        elif btype == "PL":
            ub[j] = np.inf
        elif btype == "BV":
            lb[j], ub[j] = 0.0, 1.0
            integer.add(j)
        elif btype == "LI":
            lb[j] = val
            integer.add(j)
        elif btype == "UI":
            ub[j] = val
            integer.add(j)
    if np.any(lb > ub):
        j = int(np.argmax(lb > ub))
        raise ValueError(f"conflicting bounds on column {cols[j]!r}: "
                         f"[{lb[j]}, {ub[j]}]")
    rows = []
    rhs = []
    names = []

    def add_row(coefs, beta, name):
        rows.append(coefs)
        rhs.append(beta)
        names.append(name)

    for rname in raw.row_order:
        coefs = np.zeros(n)
        for col, val in raw.entries[rname]:
            coefs[cindex[col]] += val
        beta = raw.rhs.get(rname, 0.0)
        rtype = raw.row_types[rname]
        if rname in raw.ranges:
            lo, hi = _range_interval(rtype, beta, raw.ranges[rname])
            add_row(coefs, lo, rname)
            add_row(-coefs, -hi, rname + "__hi")
        elif rtype == "G":
            add_row(coefs, beta, rname)
        elif rtype == "L":
            add_row(-coefs, -beta, rname)
        else:   # E
            add_row(coefs, beta, rname)
            add_row(-coefs, -beta, rname + "__neg")
    A = np.array(rows) if rows else np.zeros((0, n))
    sense = 1 if raw.sense == "MIN" else -1
    cobj = c if sense == 1 else -c
    return Problem.build(cobj, A, rhs, lb, ub, sorted(integer),
                         var_names=cols, row_names=names, obj_sense=sense,
                         obj_offset=raw.obj_constant,
                         name=raw.name or "problem")


def _range_interval(rtype: str, beta: float, r: float):
    if rtype == "G":
        return beta, beta + abs(r)
    if rtype == "L":
        return beta - abs(r), beta
    if r >= 0:
        return beta, beta + r
    return beta + r, beta


def load_mps(source: str, from_string: bool = False) -> Problem:
    """Parse and normalize in one step."""
    return normalize(parse_mps(source, from_string=from_string))


def _fmt(v: float) -> str:
    if v == math.floor(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def write_mps(p: Problem, path: str | None = None) -> str:
    """Write the normalized model (all >= rows, MIN sense) in free format.

    Diagnostic writer: re-parsing the output yields an equivalent Problem.
    """
    lines = [f"NAME {p.name}", "OBJSENSE", "    MIN", "ROWS", " N  OBJ"]
    for rn in p.row_names:
        lines.append(f" G  {rn}")
    lines.append("COLUMNS")
    int_mask = p.int_mask
    in_int = False
    csc = p.A_csc
    for j in range(p.n):
        if int_mask[j] != in_int:
            mk = "INTORG" if int_mask[j] else "INTEND"
            lines.append(f"    MARK{len(lines):04d}  'MARKER'  '{mk}'")
            in_int = bool(int_mask[j])
        vn = p.var_names[j]
        pairs = []
        if p.c[j] != 0.0:
            pairs.append(("OBJ", p.c[j]))
        start, end = csc.indptr[j], csc.indptr[j + 1]
        for k in range(start, end):
            pairs.append((p.row_names[csc.indices[k]], csc.data[k]))
        if not pairs:
            pairs.append(("OBJ", 0.0))
        for k in range(0, len(pairs), 2):
            chunk = pairs[k:k + 2]
            body = "  ".join(f"{rn}  {_fmt(v)}" for rn, v in chunk)
            lines.append(f"    {vn}  {body}")
    if in_int:
        lines.append(f"    MARK{len(lines):04d}  'MARKER'  'INTEND'")
    lines.append("RHS")
    for i, rn in enumerate(p.row_names):
        lines.append(f"    RHS  {rn}  {_fmt(p.b[i])}")
    if p.obj_offset != 0.0:
        lines.append(f"    RHS  OBJ  {_fmt(-p.obj_offset)}")
    lines.append("BOUNDS")
    for j in range(p.n):
        vn = p.var_names[j]
        lo, up = p.lb[j], p.ub[j]
        if math.isinf(lo) and math.isinf(up):
            lines.append(f" FR  BND  {vn}")
            continue
        if math.isinf(lo):
            lines.append(f" MI  BND  {vn}")
        elif lo != 0.0:
            lines.append(f" LO  BND  {vn}  {_fmt(lo)}")
        if not math.isinf(up):
            lines.append(f" UP  BND  {vn}  {_fmt(up)}")
    lines.append("ENDATA")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
