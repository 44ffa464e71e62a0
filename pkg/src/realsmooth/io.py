"""Reading and writing semi-algebraic inputs.

Text format, one directive per line::

    # comment
    vars x y z
    eq: x^2 - y^2*z
    gt: z + 1

JSON format: ``{"vars": [...], "equations": [...], "inequalities": [...]}``.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .parsing import ParseError, parse_polynomial
from .reduce import SemiAlgebraicInput

_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*\Z")
_DIRECTIVE = re.compile(r"\s*(eq|gt)\s*:")


def _check_vars(names, line=None, column=None):
    seen = set()
    for v in names:
        if not _IDENT.match(v):
            raise ParseError(f"invalid variable name {v!r}", line, column)
        if v in seen:
            raise ParseError(f"duplicate variable {v!r}", line, column)
        seen.add(v)
    if not names:
        raise ParseError("no variables declared", line, column)
    return tuple(names)


def parse_text(text: str) -> SemiAlgebraicInput:
    variables = None
    eqs, gts = [], []
    pending = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        stripped = line.lstrip()
        indent = len(line) - len(stripped)
        head = stripped.split(None, 1)[0] if stripped else ""
        if head == "vars":
            if variables is not None:
                raise ParseError("second 'vars' line", lineno, indent + 1)
            variables = _check_vars(stripped[4:].replace(",", " ").split(), lineno, indent + 1)
            continue
        m = _DIRECTIVE.match(line)
        if m is None:
            raise ParseError("expected 'vars', 'eq:' or 'gt:'", lineno, indent + 1)
        if variables is None:
            raise ParseError("'vars' must come before equations", lineno, indent + 1)
        pending.append((m.group(1), line[m.end():], m.end(), lineno))
    if variables is None:
        raise ParseError("missing 'vars' line")
    for kind, expr, offset, lineno in pending:
        try:
            p = parse_polynomial(expr, variables)
        except ParseError as e:
            raise e.at(lineno, offset) from None
        (eqs if kind == "eq" else gts).append(p)
    return SemiAlgebraicInput(variables, eqs, gts)


def parse_json(text: str) -> SemiAlgebraicInput:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    if not isinstance(data, dict) or "vars" not in data:
        raise ParseError("JSON input needs a 'vars' field")
    names = data["vars"]
    if isinstance(names, str):
        names = names.replace(",", " ").split()
    variables = _check_vars(list(names))
    out = {}
    for key in ("equations", "inequalities"):
        polys = []
        for k, expr in enumerate(data.get(key, [])):
            try:
                polys.append(parse_polynomial(str(expr), variables))
            except ParseError as e:
                raise ParseError(f"{key}[{k}]: {e.message}", None, e.column) from None
        out[key] = polys
    return SemiAlgebraicInput(variables, out["equations"], out["inequalities"])


def parse_string(text: str) -> SemiAlgebraicInput:
    """Parse either format; JSON is recognized by a leading brace."""
    if text.lstrip().startswith("{"):
        return parse_json(text)
    return parse_text(text)


def parse_input(path) -> SemiAlgebraicInput:
    return parse_string(Path(path).read_text())


def serialize(S: SemiAlgebraicInput, fmt: str = "text") -> str:
    """Inverse of :func:`parse_string`."""
    if fmt == "json":
        return json.dumps({
            "vars": list(S.variables),
            "equations": [p.to_string() for p in S.equations],
            "inequalities": [p.to_string() for p in S.inequalities],
        }, indent=2)
    if fmt != "text":
        raise ValueError("fmt must be 'text' or 'json'")
    lines = ["vars " + " ".join(S.variables)]
    lines += [f"eq: {p.to_string()}" for p in S.equations]
    lines += [f"gt: {p.to_string()}" for p in S.inequalities]
    return "\n".join(lines) + "\n"
