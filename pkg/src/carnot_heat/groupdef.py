"""Line-oriented text format for group laws.

Grammar (one declaration per line, '#' starts a comment):

    group <name>
    strata <d_1> <d_2> ... <d_r>
    Q <j> : <coef> <var> ... <var> ; <coef> <var> ... <var> ; ...

A coefficient is a rational literal (``-1/2``, ``3``) or a decimal literal
(``0.5``), converted exactly to a rational with power-of-ten denominator.
Variables are ``x<i>``/``y<i>`` with 1-based global coordinate indices;
repeating a variable raises its power.  Dilation weights are implied by the
strata line and never written.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .groups import GroupLaw, StrataShape, validate_group_law
from .poly import Polynomial


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    severity: str  # "error" | "warning"
    message: str

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


@dataclass
class ParseResult:
    name: str | None
    law: GroupLaw | None
    diagnostics: list[ParseDiagnostic]

    @property
    def ok(self) -> bool:
        return self.law is not None and not any(
            d.severity == "error" for d in self.diagnostics
        )


def _parse_coefficient(token: str) -> Fraction | None:
    try:
        return Fraction(token)  # handles p/q, integers and decimal strings exactly
    except (ValueError, ZeroDivisionError):
        return None


def parse_group(text: str, provenance: str = "<string>") -> ParseResult:
    """Parse a group definition; every violation becomes a diagnostic.

    On success the returned law has already passed validate_group_law;
    validation failures are reported against the offending Q line.
    """
    diags: list[ParseDiagnostic] = []
    name: str | None = None
    shape: StrataShape | None = None
    q_polys: dict[int, Polynomial] = {}
    q_lines: dict[int, int] = {}

    def err(line, col, msg):
        diags.append(ParseDiagnostic(line, col, "error", msg))

    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        code = raw.split("#", 1)[0].rstrip()
        if not code.strip():
            continue
        indent = len(code) - len(code.lstrip())
        tokens = code.split()
        head = tokens[0]

        if head == "group":
            if len(tokens) != 2:
                err(lineno, indent + 1, "expected: group <name>")
            elif name is not None:
                err(lineno, indent + 1, "duplicate group line")
            else:
                name = tokens[1]
        elif head == "strata":
            if shape is not None:
                err(lineno, indent + 1, "duplicate strata line")
                continue
            try:
                dims = tuple(int(t) for t in tokens[1:])
                if not dims or any(v < 1 for v in dims):
                    raise ValueError
                shape = StrataShape(dims)
            except ValueError:
                err(lineno, indent + 1, "strata needs one or more positive integers")
        elif head == "Q":
            if shape is None:
                err(lineno, indent + 1, "Q line before strata line")
                continue
            body = code.lstrip()[1:].lstrip()
            if ":" not in body:
                err(lineno, indent + 1, "expected: Q <j> : <terms>")
                continue
            idx_text, terms_text = body.split(":", 1)
            try:
                j = int(idx_text.strip())
            except ValueError:
                err(lineno, indent + 1, f"bad coordinate index {idx_text.strip()!r}")
                continue
            if not 1 <= j <= shape.dim:
                err(lineno, indent + 1, f"coordinate {j} out of range 1..{shape.dim}")
                continue
            if shape.weight(j - 1) < 2:
                err(lineno, indent + 1, f"target coordinate {j} has weight 1")
                continue
            if j - 1 in q_polys:
                err(lineno, indent + 1, f"duplicate Q {j} line")
                continue
            poly = Polynomial.zero()
            bad = False
            col_base = code.index(":") + 2
            for chunk in terms_text.split(";"):
                parts = chunk.split()
                if not parts:
                    err(lineno, col_base, "empty term")
                    bad = True
                    continue
                coeff = _parse_coefficient(parts[0])
                if coeff is None:
                    err(lineno, col_base, f"coefficient {parts[0]!r} is not a rational literal")
                    bad = True
                    continue
                powers: dict[int, int] = {}
                for var in parts[1:]:
                    if len(var) < 2 or var[0] not in "xy" or not var[1:].isdigit():
                        err(lineno, col_base, f"unknown variable {var!r}")
                        bad = True
                        break
                    i = int(var[1:])
                    if not 1 <= i <= shape.dim:
                        err(lineno, col_base, f"variable {var!r} out of range 1..{shape.dim}")
                        bad = True
                        break
                    index = (i - 1) if var[0] == "x" else (shape.dim + i - 1)
                    powers[index] = powers.get(index, 0) + 1
                if bad:
                    break
                poly = poly + Polynomial.monomial(powers, coeff)
            if not bad:
                q_polys[j - 1] = poly
                q_lines[j - 1] = lineno
        else:
            err(lineno, indent + 1, f"unknown declaration {head!r}")

    if shape is None:
        err(len(lines) or 1, 1, "missing strata line")
        return ParseResult(name, None, diags)
    if any(d.severity == "error" for d in diags):
        return ParseResult(name, None, diags)

    law = GroupLaw(shape, q_polys)
    report = validate_group_law(law)
    if not report.ok:
        for check in report.failures():
            # map law-level failures onto the most relevant source line
            line = 1
            for j, ln in q_lines.items():
                if f"Q_{j + 1}" in check.detail or check.name in (
                    "associativity",
                    "inverse",
                ):
                    line = max(line, ln)
            diags.append(
                ParseDiagnostic(line, 1, "error", f"{check.name}: {check.detail or 'failed'}")
            )
        return ParseResult(name, None, diags)
    return ParseResult(name, law, diags)


def _format_coeff(c: Fraction) -> str:
    return str(c)


def emit_group(law: GroupLaw, name: str) -> str:
    """Canonical text form; parse(emit(law)).law == law exactly.

    Q terms are ordered lexicographically by exponent multi-index over
    (x_1..x_d, y_1..y_d).
    """
    d = law.shape.dim
    lines = [f"group {name}", "strata " + " ".join(str(v) for v in law.shape.dims)]
    for j in sorted(law.q):
        poly = law.q[j]
        if poly.is_zero:
            continue
        chunks = []
        for mono, coeff in poly.sorted_terms():
            vars_text = []
            for i, p in mono:
                tag = f"x{i + 1}" if i < d else f"y{i - d + 1}"
                vars_text.extend([tag] * p)
            chunks.append(f"{_format_coeff(coeff)} " + " ".join(vars_text))
        lines.append(f"Q {j + 1} : " + " ; ".join(chunks))
    return "\n".join(lines) + "\n"
