"""Seeded generators of example algebras with their Lambda-structures.

Every generator emits the input-file text and parses it, so generated
members go through exactly the same validation as user input.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Mapping

from .algebra import (
    AugmentedAlgebra,
    InputData,
    LambdaModule,
    LambdaStructure,
    character_module,
    direct_sum,
    parse_input,
    regular_module,
)
from .poly import Poly, format_poly

PRIMES = (2, 3, 5)
MAX_EXP = 6


@dataclass(frozen=True)
class FiberProductSpec:
    """``O[x_1..x_r]/(x_i^2 - p^m_i x_i, x_i x_j)``, optionally lifted over ``Lambda_c``.

    A lift replaces ``p^m_i`` by ``p^m_i + p^b_i t_l``; the fiber at ``t = 0``
    is the plain fiber product.
    """

    p: int
    exponents: tuple[int, ...]
    c: int = 0
    lift_exponents: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.exponents or any(m < 1 for m in self.exponents):
            raise ValueError("fiber product needs r >= 1 positive exponents")
        if self.lift_exponents and len(self.lift_exponents) != len(self.exponents):
            raise ValueError("one lift exponent per component")


@dataclass(frozen=True)
class Generated:
    name: str
    text: str
    data: InputData
    oracle: Mapping[str, int] = field(default_factory=dict)
    tags: Mapping[str, object] = field(default_factory=dict)
    # per basis element, the values of the characters A -> Lambda (when available)
    characters: tuple = ()

    @property
    def algebra(self) -> AugmentedAlgebra:
        return self.data.algebra

    @property
    def structure(self) -> LambdaStructure:
        return self.data.structure

    @property
    def c(self) -> int:
        return self.algebra.c


def _tnames(c: int) -> list[str]:
    return [f"t{i + 1}" for i in range(c)]


def _vec(entries) -> str:
    return "(" + ", ".join(entries) + ")"


def gen_fiber_product(spec: FiberProductSpec) -> Generated:
    p, ms, c = spec.p, spec.exponents, spec.c
    r = len(ms)
    ts = _tnames(c)
    xs = [f"x{i + 1}" for i in range(r)]
    alphas = []
    for i, m in enumerate(ms):
        a = f"{p ** m}"
        if c and spec.lift_exponents:
            a += f" + {p ** spec.lift_exponents[i]}*{ts[i % c]}"
        alphas.append(a)
    lines = [f"p={p}"]
    if c:
        lines.append("lambda " + ", ".join(ts))
    lines.append("fiber " + ", ".join(xs))
    for i in range(r):
        lines.append(f"rel {xs[i]}^2 - ({alphas[i]})*{xs[i]}")
    for i, j in itertools.combinations(range(r), 2):
        lines.append(f"rel {xs[i]}*{xs[j]}")
    lines.append("[lambda-structure]")
    lines.append("basis 1, " + ", ".join(xs))
    for i in range(r):
        for j in range(i, r):
            entries = ["0"] * (r + 1)
            if i == j:
                entries[i + 1] = alphas[i]
            lines.append(f"mult {xs[i]}*{xs[j]} = {_vec(entries)}")
    text = "\n".join(lines) + "\n"
    data = parse_input(text)
    lv = data.algebra.lambda_vars
    alpha_polys = [data.structure.table[i + 1][i + 1][i + 1] for i in range(r)]
    zero = Poly(lv)
    chars = []
    # component 0 is the lambda-character; component i sends x_i to alpha_i
    for comp in range(r + 1):
        vals = [Poly.const(lv, 1)] + [alpha_polys[i] if comp == i + 1 else zero for i in range(r)]
        chars.append(tuple(vals))
    oracle = {"phi": sum(ms), "psi": max(ms), "defect": sum(ms) - max(ms), "wedge": 0}
    tags = {"family": "fiber_product", "r": r, "ci": r == 1, "regular": False, "member": True,
            "exponents": tuple(ms)}
    name = f"FP(p={p}, m={list(ms)}, c={c})"
    return Generated(name, text, data, oracle, tags, tuple(chars))


def _subsets(k: int) -> list[tuple[int, ...]]:
    out = []
    for size in range(k + 1):
        out.extend(itertools.combinations(range(k), size))
    return out


def gen_ci(seed, c: int, size: int, p: int | None = None) -> Generated:
    """A complete intersection ``Lambda_c[x_1..x_k]/(x_j^2 - alpha_j x_j - beta_j)``.

    ``alpha_j = p^a_j + (optional p^b t_l)`` and ``beta_j`` is 0 or ``p^b t_l``.
    The Lambda-basis is the squarefree monomials in the ``x_j``.
    """
    rng = random.Random(seed)
    p = p or rng.choice(PRIMES)
    ts = _tnames(c)
    lv = tuple(ts)
    k = size
    xs = [f"x{j + 1}" for j in range(k)]
    alphas, betas, texts = [], [], []
    for j in range(k):
        a = rng.randint(1, MAX_EXP)
        alpha = Poly.const(lv, p ** a)
        beta = Poly(lv)
        if c and rng.random() < 0.5:
            alpha = alpha + p ** rng.randint(1, MAX_EXP) * Poly.var(lv, rng.choice(ts))
        if c and rng.random() < 0.5:
            beta = p ** rng.randint(1, MAX_EXP) * Poly.var(lv, rng.choice(ts))
        alphas.append(alpha)
        betas.append(beta)
    subsets = _subsets(k)
    index = {s: i for i, s in enumerate(subsets)}
    labels = ["1" if not s else "*".join(xs[j] for j in s) for s in subsets]

    def times_x(elem: dict, j: int) -> dict:
        out: dict = {}
        for s, coeff in elem.items():
            if j not in s:
                key = tuple(sorted(s + (j,)))
                out[key] = out.get(key, Poly(lv)) + coeff
            else:
                rest = tuple(x for x in s if x != j)
                out[s] = out.get(s, Poly(lv)) + coeff * alphas[j]
                out[rest] = out.get(rest, Poly(lv)) + coeff * betas[j]
        return out

    lines = [f"p={p}"]
    if c:
        lines.append("lambda " + ", ".join(ts))
    if k:
        lines.append("fiber " + ", ".join(xs))
    for j in range(k):
        rel = Poly.var(lv + tuple(xs), xs[j]) ** 2
        rel = rel - alphas[j].with_vars(lv + tuple(xs)) * Poly.var(lv + tuple(xs), xs[j]) - betas[j].with_vars(lv + tuple(xs))
        lines.append(f"rel {format_poly(rel)}")
    if k:
        lines.append("[lambda-structure]")
        lines.append("basis " + ", ".join(labels))
        for a, b in itertools.combinations_with_replacement(range(1, len(subsets)), 2):
            elem = {subsets[a]: Poly.const(lv, 1)}
            for j in subsets[b]:
                elem = times_x(elem, j)
            entries = ["0"] * len(subsets)
            for s, coeff in elem.items():
                if not coeff.is_zero():
                    entries[index[s]] = format_poly(coeff)
            lines.append(f"mult e{a + 1}*e{b + 1} = {_vec(entries)}")
    text = "\n".join(lines) + "\n"
    data = parse_input(text)
    chars = ()
    if all(b.is_zero() for b in betas):
        # x_j -> alpha_j or 0 defines a character for every subset S
        chars_list = []
        for S in subsets:
            vals = []
            for s in subsets:
                v = Poly.const(lv, 1)
                for j in s:
                    v = v * (alphas[j] if j in S else Poly(lv))
                vals.append(v)
            chars_list.append(tuple(vals))
        chars = tuple(chars_list)
    oracle = {"defect": 0}
    if k == 0:
        oracle.update(phi=0, psi=0)
    tags = {"family": "ci", "ci": True, "regular": k == 0, "member": True, "beta_zero": not any(not b.is_zero() for b in betas)}
    return Generated(f"CI(seed={seed}, c={c}, k={k}, p={p})", text, data, oracle, tags, chars)


def gen_lambda(p: int, c: int) -> Generated:
    text = f"p={p}\n" + (("lambda " + ", ".join(_tnames(c)) + "\n") if c else "")
    data = parse_input(text)
    lv = data.algebra.lambda_vars
    return Generated(f"Lambda_{c}(p={p})", text, data, {"phi": 0, "psi": 0, "defect": 0, "wedge": 0},
                     {"family": "regular", "ci": True, "regular": True, "member": True}, ((Poly.const(lv, 1),),))


def gen_power_series(p: int, k: int, c: int = 1) -> Generated:
    """``O[[s]]`` (times ``O[[t_2..]]``) over ``Lambda_c`` via ``t_1 -> p^k s + s^2``."""
    ts = _tnames(c)
    lines = [f"p={p}", "lambda " + ", ".join(ts), "fiber s", f"iota t1 = {p ** k}*s + s^2",
             "[lambda-structure]", "basis 1, s", f"mult s*s = (t1, -{p ** k})"]
    text = "\n".join(lines) + "\n"
    data = parse_input(text)
    return Generated(f"PowerSeries(p={p}, k={k}, c={c})", text, data, {"phi": 0, "psi": 0, "defect": 0, "wedge": k},
                     {"family": "regular", "ci": True, "regular": True, "member": True})


def gen_non_member(kind: int, p: int) -> Generated:
    """Algebras outside the category: the fiber keeps a nilpotent at lambda."""
    if kind == 0:
        lines = [f"p={p}", "fiber x", "rel x^2", "[lambda-structure]", "basis 1, x", "mult x*x = (0, 0)"]
    elif kind == 1:
        lines = [f"p={p}", "fiber x", f"rel x^3 - {p}*x^2", "[lambda-structure]", "basis 1, x, x^2",
                 "mult x*x = (0, 0, 1)", f"mult x*x^2 = (0, 0, {p})", f"mult x^2*x^2 = (0, 0, {p * p})"]
    else:
        lines = [f"p={p}", "lambda t1", "fiber x", "rel x^2 - t1*x", "[lambda-structure]", "basis 1, x",
                 "mult x*x = (0, t1)"]
    text = "\n".join(lines) + "\n"
    return Generated(f"NonMember(kind={kind}, p={p})", text, parse_input(text), {},
                     {"family": "non_member", "member": False, "regular": False, "ci": False})


def random_fiber_product(rng: random.Random, max_r: int = 4, max_c: int = 1) -> Generated:
    p = rng.choice(PRIMES)
    r = rng.randint(1, max_r)
    ms = tuple(rng.randint(1, MAX_EXP) for _ in range(r))
    c = rng.randint(0, max_c)
    lift = tuple(rng.randint(1, MAX_EXP) for _ in range(r)) if c else ()
    return gen_fiber_product(FiberProductSpec(p, ms, c, lift))


def random_member(rng: random.Random, max_c: int = 2) -> Generated:
    kind = rng.random()
    if kind < 0.15:
        return gen_lambda(rng.choice(PRIMES), rng.randint(0, max_c))
    if kind < 0.3:
        return gen_power_series(rng.choice(PRIMES), rng.randint(1, MAX_EXP), rng.randint(1, max(1, max_c)))
    if kind < 0.65:
        return gen_ci(rng.getrandbits(32), rng.randint(0, max_c), rng.randint(1, 2))
    return random_fiber_product(rng)


# ---------------------------------------------------------------------------
# modules


@dataclass(frozen=True)
class ModuleSample:
    name: str
    module: LambdaModule
    splits: bool  # known to be A^mu + W with W zero at lambda
    mu: int | None = None


def module_samples(g: Generated, rng: random.Random | None = None) -> list[ModuleSample]:
    L = g.structure
    A = regular_module(L, "A")
    out = [ModuleSample("A", A, True, 1), ModuleSample("A+A", direct_sum(A, A, name="A+A"), True, 2)]
    if g.characters:
        chars = [character_module(L, vals, f"W{i}") for i, vals in enumerate(g.characters)]
        away = chars[1:]  # characters other than the one through lambda
        if away:
            w = away[(rng.randrange(len(away)) if rng else 0)]
            out.append(ModuleSample(f"A+{w.name}", direct_sum(A, w, name=f"A+{w.name}"), True, 1))
        out.append(ModuleSample("W0", chars[0], False, 1))
        if g.tags.get("family") == "fiber_product":
            out.append(ModuleSample("normalization", direct_sum(*chars, name="normalization"), False, 1))
    return out
