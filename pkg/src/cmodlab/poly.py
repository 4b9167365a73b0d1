"""Sparse multivariate polynomials with rational coefficients.

A :class:`Poly` carries its ordered variable names; terms are keyed by
exponent tuples.  Polynomials in the Lambda-variables alone double as the
truncated power series used for structure constants.
"""
from __future__ import annotations

import ast
import re
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import ParseError


_ZERO = Fraction(0)


class Poly:
    __slots__ = ("vars", "terms")

    def __init__(self, vars: Iterable[str], terms: Mapping[tuple, Fraction] | None = None):
        self.vars = tuple(vars)
        clean = {}
        for mono, c in (terms or {}).items():
            if len(mono) != len(self.vars):
                raise ValueError("monomial length does not match variables")
            if type(c) is not Fraction:
                c = Fraction(c)
            if c:
                clean[tuple(mono)] = c
        self.terms = clean

    @classmethod
    def const(cls, vars, c) -> "Poly":
        vars = tuple(vars)
        return cls(vars, {(0,) * len(vars): Fraction(c)})

    @classmethod
    def var(cls, vars, name: str) -> "Poly":
        vars = tuple(vars)
        return cls(vars, {tuple(int(v == name) for v in vars): Fraction(1)})

    def _lift(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.vars != self.vars:
                raise ValueError(f"variable mismatch {self.vars} vs {other.vars}")
            return other
        return Poly.const(self.vars, other)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(self.vars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.vars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(self.vars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        out = Poly.const(self.vars, 1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Poly):
            if isinstance(other, (int, Fraction)):
                return self == Poly.const(self.vars, other)
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    def min_degree(self) -> int:
        return min((sum(m) for m in self.terms), default=-1)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * len(self.vars), _ZERO)

    def coefficient(self, mono: tuple) -> Fraction:
        return self.terms.get(tuple(mono), _ZERO)

    def linear_part(self) -> dict[str, Fraction]:
        out = {}
        for i, v in enumerate(self.vars):
            mono = tuple(int(j == i) for j in range(len(self.vars)))
            out[v] = self.terms.get(mono, _ZERO)
        return out

    def higher_part(self) -> "Poly":
        return Poly(self.vars, {m: c for m, c in self.terms.items() if sum(m) >= 2})

    def used_vars(self) -> set[str]:
        return {v for i, v in enumerate(self.vars) if any(m[i] for m in self.terms)}

    def truncate(self, degree: int) -> "Poly":
        """Drop terms of total degree above ``degree``."""
        return Poly(self.vars, {m: c for m, c in self.terms.items() if sum(m) <= degree})

    def with_vars(self, new_vars: Iterable[str]) -> "Poly":
        new_vars = tuple(new_vars)
        missing = self.used_vars() - set(new_vars)
        if missing:
            raise ValueError(f"variables {sorted(missing)} not in {new_vars}")
        idx = [self.vars.index(v) if v in self.vars else None for v in new_vars]
        out = {}
        for m, c in self.terms.items():
            out[tuple(m[i] if i is not None else 0 for i in idx)] = c
        return Poly(new_vars, out)

    def evaluate(self, values: Mapping[str, object], one, add: Callable = None, mul: Callable = None):
        """Evaluate in an arbitrary commutative ring given by ``one``/``add``/``mul``.

        ``values`` maps each used variable to a ring element; coefficients are
        applied with ``mul(coefficient, element)`` semantics via ``scale``.
        """
        add = add or (lambda a, b: a + b)
        mul = mul or (lambda a, b: a * b)
        total = None
        power_cache: dict = {}
        for mono, c in sorted(self.terms.items()):
            term = None
            for v, e in zip(self.vars, mono):
                if e == 0:
                    continue
                key = (v, e)
                if key not in power_cache:
                    acc = values[v]
                    for _ in range(e - 1):
                        acc = mul(acc, values[v])
                    power_cache[key] = acc
                term = power_cache[key] if term is None else mul(term, power_cache[key])
            term = mul(c, one) if term is None else mul(c, term)
            total = term if total is None else add(total, term)
        if total is None:
            return mul(Fraction(0), one)
        return total

    def subs(self, mapping: Mapping[str, "Poly"], target_vars: Iterable[str]) -> "Poly":
        target_vars = tuple(target_vars)
        values = {}
        for v in self.used_vars():
            if v in mapping:
                values[v] = mapping[v].with_vars(target_vars) if mapping[v].vars != target_vars else mapping[v]
            else:
                values[v] = Poly.var(target_vars, v)
        return self.evaluate(values, Poly.const(target_vars, 1))

    def at_zero(self) -> Fraction:
        return self.constant_term()

    def __repr__(self):
        return f"Poly({format_poly(self)!r})"

    def __str__(self):
        return format_poly(self)


def format_poly(f: Poly) -> str:
    if not f.terms:
        return "0"
    parts = []
    for mono, c in sorted(f.terms.items(), key=lambda mc: (sum(mc[0]), [-e for e in mc[0]])):
        factors = [v if e == 1 else f"{v}^{e}" for v, e in zip(f.vars, mono) if e]
        mag = abs(c)
        if factors:
            body = "*".join(factors)
            text = body if mag == 1 else f"{mag}*{body}"
        else:
            text = str(mag)
        parts.append(("-" if c < 0 else "+", text))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, text in parts[1:]:
        out += f" {sign} {text}"
    return out


_INTEGER = re.compile(r"-?\d+")
_IMPLICIT = re.compile(r"(?<![A-Za-z_\d.])(\d+)\s*(?=[A-Za-z_(])")


def parse_poly(text: str, vars: Iterable[str]) -> Poly:
    """Parse ``text`` using ``+ - * ^ /`` and integer or rational constants.

    A number directly followed by a name (``5x``) is read as a product.
    """
    vars = tuple(vars)
    if _INTEGER.fullmatch(text.strip()):
        return Poly.const(vars, int(text))
    src = _IMPLICIT.sub(r"\1*", text.strip()).replace("^", "**")
    if not src:
        raise ParseError("empty polynomial")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse polynomial {text!r}") from exc

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            return Poly.const(vars, node.value)
        if isinstance(node, ast.Name):
            if node.id not in vars:
                raise ParseError(f"unknown variable {node.id!r} in {text!r}")
            return Poly.var(vars, node.id)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = walk(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.BinOp):
            left = walk(node.left)
            if isinstance(node.op, ast.Pow):
                exp = walk(node.right)
                if exp.used_vars() or exp.constant_term().denominator != 1 or exp.constant_term() < 0:
                    raise ParseError(f"exponent must be a non-negative integer in {text!r}")
                return left ** int(exp.constant_term())
            right = walk(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                if right.used_vars() or right.is_zero():
                    raise ParseError(f"can only divide by non-zero constants in {text!r}")
                return left * (1 / right.constant_term())
        raise ParseError(f"unsupported syntax in {text!r}")

    return walk(tree)


def parse_vector(text: str, vars: Iterable[str]) -> tuple[Poly, ...]:
    """``(f1, f2, ...)`` -> tuple of polynomials."""
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise ParseError(f"expected a parenthesised vector, got {text!r}")
    return tuple(parse_poly(part, vars) for part in _split_top(text[1:-1]))


def parse_matrix(text: str, vars: Iterable[str]) -> tuple[tuple[Poly, ...], ...]:
    """``[[a, b], [c, d]]`` -> rows of polynomials."""
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ParseError(f"expected a bracketed matrix, got {text!r}")
    rows = []
    for part in _split_top(text[1:-1]):
        part = part.strip()
        if not (part.startswith("[") and part.endswith("]")):
            raise ParseError(f"expected a bracketed row, got {part!r}")
        rows.append(tuple(parse_poly(x, vars) for x in _split_top(part[1:-1])))
    if rows and len({len(r) for r in rows}) != 1:
        raise ParseError("ragged matrix")
    return tuple(rows)


def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur))
    return [p for p in parts if p.strip()]
