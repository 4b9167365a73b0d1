"""Presented augmented algebras, Lambda-structures and their fibers.

An :class:`AugmentedAlgebra` is ``O[[t, x]]/(f_1..f_m)`` with the augmentation
sending every variable to zero.  A :class:`LambdaStructure` describes the same
ring as a finite free module over ``Lambda_c = O[[t_1..t_c]]``: a basis whose
first element is ``1``, structure constants that are polynomials in the
``t``'s, the augmentation on the basis, and the images of the fiber variables.
Nothing here discovers such a structure; it is supplied and then checked.
"""
from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Mapping, Sequence

from .dvr import (
    INF,
    FgOModule,
    OMatrix,
    det_valuation,
    is_integral,
    kernel_basis,
    module_from_presentation,
    rank_over_fraction_field,
    smith_normal_form,
    valuation_of,
)
from .errors import (
    BadAugmentationForm,
    InconsistentStructure,
    NotInCategory,
    NotRegularCase,
    ParseError,
)
from .poly import Poly, format_poly, parse_matrix, parse_poly, parse_vector

DEFAULT_DEGREE = 8


@dataclass(frozen=True)
class AugmentedAlgebra:
    p: int
    lambda_vars: tuple[str, ...]
    fiber_vars: tuple[str, ...]
    relations: tuple[Poly, ...] = ()
    # images of Lambda-variables that are not presentation variables
    lambda_images: Mapping[str, Poly] = field(default_factory=dict)

    @property
    def c(self) -> int:
        return len(self.lambda_vars)

    @property
    def k(self) -> int:
        return len(self.fiber_vars)

    @property
    def presentation_vars(self) -> tuple[str, ...]:
        return tuple(t for t in self.lambda_vars if t not in self.lambda_images) + self.fiber_vars

    def poly(self, text: str) -> Poly:
        return parse_poly(text, self.presentation_vars)

    def validate(self) -> "AugmentedAlgebra":
        p, pv = self.p, self.presentation_vars
        names = list(self.lambda_vars) + list(self.fiber_vars)
        if len(set(names)) != len(names):
            raise ParseError("variable declared twice")
        for f in self.relations:
            if f.vars != pv:
                raise ValueError("relation over the wrong variables")
            if any(not is_integral(c, p) for c in f.terms.values()):
                raise BadAugmentationForm(f"relation {format_poly(f)} has coefficients outside O")
            if f.constant_term() != 0:
                raise BadAugmentationForm(
                    f"relation {format_poly(f)} has non-zero constant term; the augmentation must send every variable to 0"
                )
            for v, coeff in f.linear_part().items():
                if coeff and valuation_of(coeff, p) < 1:
                    raise BadAugmentationForm(
                        f"relation {format_poly(f)} has unit linear coefficient on {v}; "
                        "relations must lie in (p)(vars) + (vars)^2"
                    )
        for t, img in self.lambda_images.items():
            if t not in self.lambda_vars:
                raise ParseError(f"iota given for {t!r}, which is not a lambda variable")
            if img.vars != pv:
                raise ValueError("iota image over the wrong variables")
            if img.constant_term() != 0 or any(not is_integral(c, p) for c in img.terms.values()):
                raise BadAugmentationForm(f"iota {t} = {format_poly(img)} must lie in the augmentation ideal")
        return self

    def normalized(self) -> "AugmentedAlgebra":
        rels = tuple(f for f in self.relations if not f.is_zero())
        return AugmentedAlgebra(self.p, self.lambda_vars, self.fiber_vars, rels, dict(self.lambda_images))

    def is_regular_presentation(self) -> bool:
        return not self.normalized().relations

    def describe(self) -> str:
        rels = ", ".join(format_poly(f) for f in self.relations) or "-"
        return f"p={self.p} lambda={list(self.lambda_vars)} fiber={list(self.fiber_vars)} rels=[{rels}]"


def linear_part_matrix(A: AugmentedAlgebra) -> OMatrix:
    """Rows: relations; columns: presentation variables (Lambda ones first)."""
    pv = A.presentation_vars
    lins = [f.linear_part() for f in A.relations]
    rows = [[lin[v] for v in pv] for lin in lins]
    return OMatrix.from_rows(A.p, rows, len(pv))


def linear_vector(A: AugmentedAlgebra, f: Poly) -> list[Fraction]:
    lin = f.linear_part()
    return [lin[v] for v in A.presentation_vars]


def lambda_linear_matrix(A: AugmentedAlgebra) -> OMatrix:
    """Columns are the linear parts of iota(t_1), ..., iota(t_c)."""
    pv = A.presentation_vars
    cols = []
    for t in A.lambda_vars:
        if t in A.lambda_images:
            cols.append(linear_vector(A, A.lambda_images[t]))
        else:
            cols.append([Fraction(int(v == t)) for v in pv])
    return OMatrix.from_rows(A.p, [[col[i] for col in cols] for i in range(len(pv))], len(cols))


def cotangent_dual_basis(A: AugmentedAlgebra) -> OMatrix:
    """Columns: O-basis of Hom(p/p^2, O) as functionals on the variables."""
    u = linear_part_matrix(A)
    if u.nrows == 0:
        return OMatrix.identity(A.p, len(A.presentation_vars))
    return kernel_basis(u)


def iota_star_matrix(A: AugmentedAlgebra) -> OMatrix:
    """``iota^*: (p/p^2)^* -> (m/m^2)^*``; row ``a`` holds ``alpha_a(iota t_l)``."""
    K = cotangent_dual_basis(A)
    return K.transpose() @ lambda_linear_matrix(A)


# ---------------------------------------------------------------------------
# Lambda-polynomial vectors and matrices


def _lzero(lv) -> Poly:
    return Poly(lv)


def _vec_add(u, v):
    return tuple(a + b for a, b in zip(u, v))


def _vec_scale(c, u):
    return tuple(c * a for a in u)


def poly_matrix_mul(X, Y, degree: int | None = None):
    n = len(Y[0]) if Y else 0
    out = []
    for row in X:
        new = []
        for j in range(n):
            acc = None
            for a, yrow in zip(row, Y):
                b = yrow[j]
                if a.is_zero() or b.is_zero():
                    continue
                term = a * b
                acc = term if acc is None else acc + term
            if acc is None:
                acc = Poly(row[0].vars if row else ())
            new.append(acc.truncate(degree) if degree is not None else acc)
        out.append(tuple(new))
    return tuple(out)


def poly_matrix_at_zero(X, p: int) -> OMatrix:
    n = len(X[0]) if X else 0
    return OMatrix.from_rows(p, [[a.constant_term() for a in row] for row in X], n)


@dataclass(frozen=True)
class LambdaStructure:
    p: int
    lambda_vars: tuple[str, ...]
    labels: tuple[str, ...]
    table: tuple  # table[i][j] -> tuple of r Lambda-polys
    aug: tuple[Fraction, ...]
    embed: Mapping[str, tuple] = field(default_factory=dict)
    degree: int = DEFAULT_DEGREE

    @property
    def rank(self) -> int:
        return len(self.labels)

    @property
    def c(self) -> int:
        return len(self.lambda_vars)

    def zero(self):
        return tuple(_lzero(self.lambda_vars) for _ in range(self.rank))

    def basis_vector(self, i: int, coeff=1):
        lv = self.lambda_vars
        if not isinstance(coeff, Poly):
            coeff = Poly.const(lv, coeff)
        return tuple(coeff if j == i else _lzero(lv) for j in range(self.rank))

    def one(self):
        return self.basis_vector(0)

    def mult(self, u, v):
        out = [_lzero(self.lambda_vars) for _ in range(self.rank)]
        for i, a in enumerate(u):
            if a.is_zero():
                continue
            for j, b in enumerate(v):
                if b.is_zero():
                    continue
                ab = (a * b).truncate(self.degree)
                if ab.is_zero():
                    continue
                for k, s in enumerate(self.table[i][j]):
                    if not s.is_zero():
                        out[k] = out[k] + ab * s
        return tuple(x.truncate(self.degree) for x in out)

    def left_matrix(self, u):
        """Matrix of multiplication by ``u``: column ``j`` is ``u * e_j``."""
        cols = [self.mult(u, self.basis_vector(j)) for j in range(self.rank)]
        return tuple(tuple(cols[j][i] for j in range(self.rank)) for i in range(self.rank))

    def var_vector(self, name: str):
        if name in self.lambda_vars:
            return self.basis_vector(0, Poly.var(self.lambda_vars, name))
        if name in self.embed:
            return self.embed[name]
        if name in self.labels:
            return self.basis_vector(self.labels.index(name))
        raise InconsistentStructure(f"no embedding given for variable {name!r}")

    def element(self, f: Poly):
        """Image of a polynomial in the presentation variables."""
        values = {v: self.var_vector(v) for v in f.used_vars()}

        def mul(a, b):
            if isinstance(a, Fraction):
                return _vec_scale(a, b)
            return self.mult(a, b)

        return f.evaluate(values, self.one(), add=_vec_add, mul=mul)

    def augment(self, u) -> Fraction:
        return sum((a.constant_term() * l for a, l in zip(u, self.aug)), Fraction(0))

    def validate(self) -> "LambdaStructure":
        r, lv = self.rank, self.lambda_vars
        if r == 0:
            raise InconsistentStructure("empty basis")
        if len(self.table) != r or any(len(row) != r for row in self.table):
            raise InconsistentStructure("multiplication table has the wrong shape")
        if len(self.aug) != r or self.aug[0] != 1:
            raise InconsistentStructure("augmentation must send the first basis element (1) to 1")
        for i in range(r):
            for j in range(r):
                if len(self.table[i][j]) != r:
                    raise InconsistentStructure(f"product e{i + 1}*e{j + 1} has the wrong length")
                for s in self.table[i][j]:
                    if s.vars != lv:
                        raise InconsistentStructure("structure constants must be polynomials in the lambda variables")
                    if any(not is_integral(c, self.p) for c in s.terms.values()):
                        raise InconsistentStructure("structure constants must lie in Lambda")
        if lv:
            table, mult, e = self.table, self.mult, [self.basis_vector(i) for i in range(r)]
        else:
            # constant structure constants: Fraction arithmetic is much cheaper than Poly
            table = tuple(tuple(tuple(s.constant_term() for s in prod) for prod in row) for row in self.table)
            fiber = FiberAlgebra(self.p, self.labels, table, self.aug)
            mult = fiber.mult
            e = [tuple(Fraction(int(i == j)) for j in range(r)) for i in range(r)]
        for i in range(r):
            if mult(e[0], e[i]) != e[i]:
                raise InconsistentStructure(f"e1 does not act as the identity on {self.labels[i]}")
            for j in range(i + 1, r):
                if self.table[i][j] != self.table[j][i]:
                    raise InconsistentStructure(f"table is not commutative at ({self.labels[i]}, {self.labels[j]})")
        for i, j, k in itertools.product(range(1, r), repeat=3):
            if i > k:
                continue
            lhs = mult(table[i][j], e[k])
            rhs = mult(e[i], table[j][k])
            if lhs != rhs:
                raise InconsistentStructure(
                    f"table is not associative at ({self.labels[i]}, {self.labels[j]}, {self.labels[k]})"
                )
        for i in range(r):
            for j in range(r):
                prod = self.table[i][j]
                if sum((s.constant_term() * l for s, l in zip(prod, self.aug)), Fraction(0)) != self.aug[i] * self.aug[j]:
                    raise InconsistentStructure("augmentation is not multiplicative on the basis")
        for name, vec in self.embed.items():
            if len(vec) != r:
                raise InconsistentStructure(f"embedding of {name} has the wrong length")
            if self.augment(vec) != 0:
                raise InconsistentStructure(f"embedding of {name} does not lie in the augmentation ideal")
        if not lv:
            # the checks above are exactly the fiber checks, so the fiber is already verified
            object.__setattr__(self, "_fiber", fiber)
        return self

    def specialize(self, values: Mapping[str, Poly]) -> "LambdaStructure":
        """Substitute some Lambda-variables by polynomials in the remaining ones."""
        keep = tuple(t for t in self.lambda_vars if t not in values)
        mapping = {t: f.with_vars(keep) if f.vars != keep else f for t, f in values.items()}

        def sub(s: Poly) -> Poly:
            return s.subs(mapping, keep).truncate(self.degree)

        table = tuple(tuple(tuple(sub(s) for s in prod) for prod in row) for row in self.table)
        embed = {k: tuple(sub(s) for s in v) for k, v in self.embed.items()}
        return LambdaStructure(self.p, keep, self.labels, table, self.aug, embed, self.degree)


@dataclass(frozen=True)
class FiberAlgebra:
    p: int
    labels: tuple[str, ...]
    table: tuple  # table[i][j] -> tuple of Fractions
    aug: tuple[Fraction, ...]

    @property
    def rank(self) -> int:
        return len(self.labels)

    def left_matrix(self, i: int) -> OMatrix:
        r = self.rank
        return OMatrix.from_rows(self.p, [[self.table[i][j][k] for j in range(r)] for k in range(r)], r)

    def mult(self, u: Sequence[Fraction], v: Sequence[Fraction]) -> tuple[Fraction, ...]:
        out = [Fraction(0)] * self.rank
        for i, a in enumerate(u):
            if not a:
                continue
            for j, b in enumerate(v):
                if b:
                    ab = a * b
                    for k, s in enumerate(self.table[i][j]):
                        if s:
                            out[k] += ab * s
        return tuple(out)

    def augmentation_ideal_basis(self) -> OMatrix:
        """Columns: ``e_i - aug_i e_1`` for i >= 2 (an O-basis of p_0)."""
        r = self.rank
        cols = []
        for i in range(1, r):
            cols.append([Fraction(int(k == i)) - (self.aug[i] if k == 0 else 0) for k in range(r)])
        return OMatrix.from_rows(self.p, [[col[k] for col in cols] for k in range(r)], len(cols))

    def check(self) -> "FiberAlgebra":
        r = self.rank
        e = [tuple(Fraction(int(i == j)) for j in range(r)) for i in range(r)]
        for i in range(r):
            if self.mult(e[0], e[i]) != e[i]:
                raise InconsistentStructure("fiber: first basis element is not the identity")
            for j in range(r):
                if self.table[i][j] != self.table[j][i]:
                    raise InconsistentStructure("fiber table is not commutative")
                for k in range(i, r):
                    # commutativity makes (i, j, k) and (k, j, i) the same condition
                    if i and j and self.mult(self.table[i][j], e[k]) != self.mult(e[i], self.table[j][k]):
                        raise InconsistentStructure("fiber table is not associative")
                aug_ij = sum((s * l for s, l in zip(self.table[i][j], self.aug)), Fraction(0))
                if aug_ij != self.aug[i] * self.aug[j]:
                    raise InconsistentStructure("fiber augmentation is not an algebra map")
        return self


@dataclass(frozen=True)
class FiberModule:
    p: int
    actions: tuple[OMatrix, ...]  # one s x s matrix per fiber-algebra basis element

    @property
    def rank(self) -> int:
        return self.actions[0].nrows if self.actions else 0

    def action_of(self, u: Sequence[Fraction]) -> OMatrix:
        s = self.rank
        rows = [[Fraction(0)] * s for _ in range(s)]
        for a, mat in zip(u, self.actions):
            if a:
                for i, mrow in enumerate(mat.entries):
                    for j, x in enumerate(mrow):
                        if x:
                            rows[i][j] += a * x
        return OMatrix.from_rows(self.p, rows, s)

    def check(self, A0: FiberAlgebra) -> "FiberModule":
        s, r = self.rank, A0.rank
        if len(self.actions) != r:
            raise InconsistentStructure("fiber module needs one action matrix per basis element")
        if self.actions[0] != OMatrix.identity(self.p, s):
            raise InconsistentStructure("identity does not act as the identity")
        for i in range(1, r):
            for j in range(i, r):
                lhs = self.actions[i] @ self.actions[j]
                rhs = self.action_of(A0.table[i][j])
                if lhs != rhs:
                    raise InconsistentStructure(f"module actions violate e{i + 1}*e{j + 1}")
        return self


@dataclass(frozen=True)
class LambdaModule:
    """A module that is free of rank ``rank`` over Lambda, with A-action."""

    p: int
    lambda_vars: tuple[str, ...]
    actions: tuple  # per basis element of the Lambda-structure: s x s matrix of Lambda-polys
    name: str = "M"

    @property
    def rank(self) -> int:
        return len(self.actions[0]) if self.actions else 0

    def action_of(self, u, degree: int | None = None):
        s = self.rank
        lv = self.lambda_vars
        rows = [[Poly(lv) for _ in range(s)] for _ in range(s)]
        for a, mat in zip(u, self.actions):
            if a.is_zero():
                continue
            for i in range(s):
                for j in range(s):
                    if not mat[i][j].is_zero():
                        rows[i][j] = rows[i][j] + a * mat[i][j]
        if degree is not None:
            rows = [[x.truncate(degree) for x in row] for row in rows]
        return tuple(tuple(row) for row in rows)

    def fiber(self) -> FiberModule:
        return FiberModule(self.p, tuple(poly_matrix_at_zero(m, self.p) for m in self.actions))

    def check(self, L: LambdaStructure) -> "LambdaModule":
        r, D = L.rank, L.degree
        if len(self.actions) != r:
            raise InconsistentStructure(f"module {self.name} needs one action matrix per basis element")
        s = self.rank
        ident = tuple(tuple(Poly.const(self.lambda_vars, int(i == j)) for j in range(s)) for i in range(s))
        if self.actions[0] != ident:
            raise InconsistentStructure(f"module {self.name}: the unit does not act as the identity")
        for i in range(1, r):
            for j in range(i, r):
                lhs = poly_matrix_mul(self.actions[i], self.actions[j], D)
                rhs = self.action_of(L.table[i][j], D)
                if lhs != rhs:
                    raise InconsistentStructure(
                        f"module {self.name}: actions violate {L.labels[i]}*{L.labels[j]}"
                    )
        return self

    def specialize(self, values: Mapping[str, Poly], degree: int) -> "LambdaModule":
        keep = tuple(t for t in self.lambda_vars if t not in values)
        mapping = {t: f.with_vars(keep) if f.vars != keep else f for t, f in values.items()}
        acts = tuple(
            tuple(tuple(x.subs(mapping, keep).truncate(degree) for x in row) for row in mat) for mat in self.actions
        )
        return LambdaModule(self.p, keep, acts, self.name)


def regular_module(L: LambdaStructure, name: str = "A") -> LambdaModule:
    r = L.rank
    # e_i * e_j is read off the (already truncated) table
    acts = tuple(tuple(tuple(L.table[i][j][k] for j in range(r)) for k in range(r)) for i in range(r))
    return LambdaModule(L.p, L.lambda_vars, acts, name)


def character_module(L: LambdaStructure, values: Sequence, name: str = "W") -> LambdaModule:
    """Rank-one module on which basis element ``i`` acts by ``values[i]``."""
    lv = L.lambda_vars
    acts = tuple(((v if isinstance(v, Poly) else Poly.const(lv, v),),) for v in values)
    return LambdaModule(L.p, lv, acts, name)


def direct_sum(*mods: LambdaModule, name: str | None = None) -> LambdaModule:
    lv = mods[0].lambda_vars
    total = sum(m.rank for m in mods)
    acts = []
    for i in range(len(mods[0].actions)):
        rows = [[Poly(lv) for _ in range(total)] for _ in range(total)]
        off = 0
        for m in mods:
            for a in range(m.rank):
                for b in range(m.rank):
                    rows[off + a][off + b] = m.actions[i][a][b]
            off += m.rank
        acts.append(tuple(tuple(r) for r in rows))
    return LambdaModule(mods[0].p, lv, tuple(acts), name or "+".join(m.name for m in mods))


def fiber_algebra(L: LambdaStructure) -> FiberAlgebra:
    cached = L.__dict__.get("_fiber")
    if cached is not None:
        return cached
    table = tuple(tuple(tuple(s.constant_term() for s in prod) for prod in row) for row in L.table)
    A0 = FiberAlgebra(L.p, L.labels, table, L.aug).check()
    object.__setattr__(L, "_fiber", A0)  # L is immutable, so the fiber never changes
    return A0


def fiber_module(M: LambdaModule, A0: FiberAlgebra | None = None) -> FiberModule:
    M0 = M.fiber()
    if A0 is None:
        return M0
    if M0.actions == tuple(A0.left_matrix(i) for i in range(A0.rank)):
        return M0  # the regular module: compatibility is associativity, already checked on A0
    return M0.check(A0)


@dataclass(frozen=True)
class TruncationContext:
    N: int = 20
    D: int = 8

    def __post_init__(self):
        if self.N < 4 or self.D < 2:
            raise ValueError("TruncationContext needs N >= 4 and D >= 2")

    def escalate(self, step: int = 4) -> "TruncationContext":
        return TruncationContext(self.N + step, self.D + step)


@dataclass(frozen=True)
class ConsistencyReport:
    passed: bool
    witness: str | None = None
    detail: str = ""


def consistency_check(A: AugmentedAlgebra, L: LambdaStructure, ctx: TruncationContext | None = None) -> ConsistencyReport:
    """Do the relations of ``A`` vanish in ``L`` modulo ``(p^N, t-degree > D)``?"""
    ctx = ctx or TruncationContext()
    D = min(ctx.D, L.degree)
    if A.lambda_vars != L.lambda_vars:
        return ConsistencyReport(False, None, "lambda variables differ")

    def vanishes(vec) -> bool:
        for s in vec:
            for mono, c in s.terms.items():
                if sum(mono) <= D and valuation_of(c, A.p) < ctx.N:
                    return False
        return True

    for f in A.relations:
        try:
            vec = L.element(f)
        except InconsistentStructure as exc:
            return ConsistencyReport(False, format_poly(f), str(exc))
        if not vanishes(vec):
            return ConsistencyReport(False, format_poly(f), "relation does not vanish in the structure")
    for t, img in A.lambda_images.items():
        vec = L.element(img)
        diff = tuple(a - b for a, b in zip(vec, L.var_vector(t)))
        if not vanishes(diff):
            return ConsistencyReport(False, f"iota {t} = {format_poly(img)}", "iota image does not match t*1")
    pv = A.presentation_vars
    for i, label in enumerate(L.labels):
        try:
            f = parse_poly(label, pv)
        except ParseError:
            continue
        diff = tuple(a - b for a, b in zip(L.element(f), L.basis_vector(i)))
        if not vanishes(diff):
            return ConsistencyReport(False, label, "basis label does not match its basis vector")
    return ConsistencyReport(True)


# ---------------------------------------------------------------------------
# category membership and the regular case


def generalized_eigenspace_dim(ops: Sequence[OMatrix], values: Sequence[Fraction]) -> int:
    """E-dimension of the joint generalized eigenspace ``{op_i ~ values[i]}``."""
    return _eigenspace_dim(tuple(ops), tuple(values))


@functools.lru_cache(maxsize=256)
def _eigenspace_dim(ops: tuple[OMatrix, ...], values: tuple[Fraction, ...]) -> int:
    if not ops:
        return 0
    s = ops[0].nrows
    if s == 0:
        return 0
    blocks = []
    for op, val in zip(ops, values):
        shifted = OMatrix.from_rows(
            op.p, [[op[i, j] - (val if i == j else 0) for j in range(s)] for i in range(s)], s
        )
        if not any(any(row) for row in shifted.entries):
            continue
        # ranks of powers decrease until they stabilize at the generalized kernel
        power, rank = shifted, rank_over_fraction_field(shifted)
        while rank:
            nxt = power @ shifted
            nrank = rank_over_fraction_field(nxt)
            if nrank == rank:
                break
            power, rank = nxt, nrank
        if rank < s:
            blocks.append(power)
        else:
            return 0
    if not blocks:
        return s
    stacked = blocks[0]
    for b in blocks[1:]:
        stacked = stacked.vstack(b)
    return s - rank_over_fraction_field(stacked)


def lambda_component_dim(A0: FiberAlgebra) -> int:
    ops = [A0.left_matrix(i) for i in range(A0.rank)]
    return generalized_eigenspace_dim(ops, A0.aug)


def cotangent_module_of(A: AugmentedAlgebra) -> FgOModule:
    cached = A.__dict__.get("_cotangent")
    if cached is None:
        cached = module_from_presentation(linear_part_matrix(A))
        object.__setattr__(A, "_cotangent", cached)  # A is immutable
    return cached


def membership_check(A: AugmentedAlgebra, L: LambdaStructure | None = None) -> int:
    """Verify ``(A, lambda)`` lies in C_O(c) and return ``c``."""
    if L is not None:
        A0 = fiber_algebra(L)
        dim = lambda_component_dim(A0)
        if dim != 1:
            raise NotInCategory(
                f"lambda-component of A_0 (x) E has dimension {dim}, expected 1 (A_0 is not regular at lambda_0)"
            )
    cot = cotangent_module_of(A)
    if cot.free_rank != A.c:
        raise NotInCategory(f"cotangent module has rank {cot.free_rank}, expected c = {A.c}")
    if A.c:
        if det_valuation(iota_star_matrix(A)) == INF:
            raise NotInCategory("residues of the lambda variables are not independent in p/p^2")
    return A.c


@dataclass(frozen=True)
class ResidueModule:
    """``O`` viewed as an A-module through the augmentation."""


RESIDUE = ResidueModule()


def koszul_cohomology(ops: Sequence[OMatrix], i: int, p: int, rank: int | None = None) -> FgOModule:
    """``H^i`` of the Koszul cochain complex of commuting operators on ``O^rank``."""
    c = len(ops)
    s = ops[0].nrows if ops else (rank or 0)
    if i < 0 or i > c:
        return FgOModule()

    def differential(deg: int) -> OMatrix:
        src = list(itertools.combinations(range(c), deg))
        tgt = list(itertools.combinations(range(c), deg + 1))
        rows = [[Fraction(0)] * (len(src) * s) for _ in range(len(tgt) * s)]
        for ti, T in enumerate(tgt):
            for pos, j in enumerate(T):
                S = T[:pos] + T[pos + 1 :]
                si = src.index(S)
                sign = -1 if pos % 2 else 1
                for a in range(s):
                    for b in range(s):
                        rows[ti * s + a][si * s + b] += sign * ops[j][a, b]
        return OMatrix.from_rows(p, rows, len(src) * s)

    dim_i = comb(c, i) * s
    if dim_i == 0:
        return FgOModule()
    Z = kernel_basis(differential(i)) if i < c else OMatrix.identity(p, dim_i)
    if Z.ncols == 0:
        return FgOModule()
    if i == 0:
        return FgOModule(Z.ncols)
    B = differential(i - 1)
    snf = smith_normal_form(Z)
    coords = snf.V @ snf.U.select_rows(range(snf.rank))
    image = coords @ B
    return module_from_presentation(image.transpose())


def koszul_ext(A: AugmentedAlgebra, M, i: int, L: LambdaStructure | None = None) -> FgOModule:
    """``Ext^i_A(O, M)`` from the Koszul complex on the generators of Ker(lambda).

    Only the regular case is supported: Ker(lambda) must be generated by the
    ``c`` presentation variables.  ``M`` is :data:`RESIDUE` or a
    :class:`LambdaModule`.
    """
    A = A.normalized()
    if A.relations or len(A.presentation_vars) != A.c:
        raise NotRegularCase("Koszul path needs Ker(lambda) generated by exactly c elements with no relations")
    membership_check(A, L)
    c, p = A.c, A.p
    if isinstance(M, ResidueModule):
        zero = OMatrix.zeros(p, 1, 1)
        return koszul_cohomology([zero] * c, i, p, rank=1)
    if L is None:
        raise NotRegularCase("a Lambda-structure is needed to compute with a Lambda-free module")
    M0 = M.fiber()
    ops = []
    for y in A.presentation_vars:
        vec = L.element(Poly.var(A.presentation_vars, y))
        ops.append(M0.action_of([s.constant_term() for s in vec]))
    if i == c:
        # H^c(y; M) = M/yM = M_0/yM_0 since every t lies in (y)
        return koszul_cohomology(ops, c, p, rank=M0.rank)
    # a Lambda-free module over a regular ring is A-free, so y is M-regular
    return FgOModule()


# ---------------------------------------------------------------------------
# input grammar


@dataclass(frozen=True)
class InputData:
    algebra: AugmentedAlgebra
    structure: LambdaStructure | None
    modules: Mapping[str, LambdaModule]


_NAME = re.compile(r"^[A-Za-z_][A-Za-z_0-9]*$")


def _names(text: str) -> tuple[str, ...]:
    out = tuple(n for n in re.split(r"[,\s]+", text.strip()) if n)
    for n in out:
        if not _NAME.match(n):
            raise ParseError(f"bad variable name {n!r}")
    return out


def _statements(text: str) -> list[str]:
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        for stmt in line.split(";"):
            stmt = stmt.strip()
            if stmt:
                out.append(stmt)
    return out


def parse_presentation(text: str) -> AugmentedAlgebra:
    return parse_input(text).algebra


def parse_input(text: str) -> InputData:
    p = None
    lambda_vars: tuple[str, ...] = ()
    fiber_vars: tuple[str, ...] = ()
    rel_texts: list[str] = []
    iota_texts: dict[str, str] = {}
    section = "main"
    ls: dict = {"mult": [], "embed": {}, "aug": None, "basis": None, "degree": None}
    modules: dict[str, list] = {}
    current_module = None
    for stmt in _statements(text):
        header = re.match(r"^\[\s*(lambda-structure|module(?:\s+([A-Za-z_][\w]*))?)\s*\]$", stmt)
        if header:
            if header.group(1) == "lambda-structure":
                section = "ls"
            else:
                section = "module"
                current_module = header.group(2) or "M"
                if current_module in modules:
                    raise ParseError(f"module {current_module} declared twice")
                modules[current_module] = []
            continue
        m = re.match(r"^p\s*=\s*(\d+)$", stmt)
        if m and section == "main":
            p = int(m.group(1))
            if p < 2 or any(p % d == 0 for d in range(2, int(p ** 0.5) + 1)):
                raise ParseError(f"p={p} is not prime")
            continue
        m = re.match(r"^iota\s+([A-Za-z_]\w*)\s*=\s*(.+)$", stmt)
        if m:
            iota_texts[m.group(1)] = m.group(2)
            continue
        if section == "main":
            kw, _, rest = stmt.partition(" ")
            if kw == "lambda":
                lambda_vars += _names(rest)
            elif kw == "fiber":
                fiber_vars += _names(rest)
            elif kw == "rel":
                rel_texts.append(rest)
            else:
                raise ParseError(f"unknown statement {stmt!r}")
        elif section == "ls":
            kw, _, rest = stmt.partition(" ")
            if kw == "basis":
                ls["basis"] = tuple(b.strip() for b in rest.split(",") if b.strip())
            elif kw == "degree":
                ls["degree"] = int(rest)
            elif kw == "mult":
                lhs, eq, rhs = rest.partition("=")
                if not eq:
                    raise ParseError(f"bad mult line {stmt!r}")
                ls["mult"].append((lhs.strip(), rhs.strip()))
            elif kw == "embed":
                lhs, eq, rhs = rest.partition("=")
                ls["embed"][lhs.strip()] = rhs.strip()
            elif stmt.startswith("aug"):
                _, eq, rhs = stmt.partition("=")
                if not eq:
                    raise ParseError(f"bad aug line {stmt!r}")
                ls["aug"] = rhs.strip()
            else:
                raise ParseError(f"unknown lambda-structure statement {stmt!r}")
        else:
            m = re.match(r"^act\s+([^=]+?)\s*=\s*(.+)$", stmt)
            if not m:
                raise ParseError(f"unknown module statement {stmt!r}")
            modules[current_module].append((m.group(1), m.group(2)))
    if p is None:
        raise ParseError("missing p=<prime>")
    pv = tuple(t for t in lambda_vars if t not in iota_texts) + fiber_vars
    rels = tuple(parse_poly(r, pv) for r in rel_texts)
    images = {t: parse_poly(s, pv) for t, s in iota_texts.items()}
    for t in images:
        if t not in lambda_vars:
            raise ParseError(f"iota given for undeclared lambda variable {t!r}")
    A = AugmentedAlgebra(p, lambda_vars, fiber_vars, rels, images).validate()

    structure = None
    if ls["basis"] is not None:
        structure = _build_structure(A, ls)
    elif not fiber_vars and not rels and not images:
        structure = trivial_structure(p, lambda_vars)
    mods = {}
    if modules and structure is None:
        raise ParseError("module blocks need a lambda-structure")
    for name, acts in modules.items():
        mods[name] = _build_module(structure, name, acts)
    return InputData(A, structure, mods)


def trivial_structure(p: int, lambda_vars: tuple[str, ...], degree: int = DEFAULT_DEGREE) -> LambdaStructure:
    one = Poly.const(lambda_vars, 1)
    return LambdaStructure(p, lambda_vars, ("1",), (((one,),),), (Fraction(1),), {}, degree)


def _label_index(labels: tuple[str, ...], token: str) -> int:
    token = token.strip()
    if token in labels:
        return labels.index(token)
    m = re.match(r"^e(\d+)$", token)
    if m and 1 <= int(m.group(1)) <= len(labels):
        return int(m.group(1)) - 1
    raise ParseError(f"unknown basis element {token!r}")


def _build_structure(A: AugmentedAlgebra, ls: dict) -> LambdaStructure:
    labels = ls["basis"]
    r = len(labels)
    lv = A.lambda_vars
    if not labels or labels[0] != "1":
        raise ParseError("basis must start with 1")
    zero = Poly(lv)
    table = [[None] * r for _ in range(r)]
    for i in range(r):
        table[0][i] = table[i][0] = tuple(Poly.const(lv, 1) if k == i else zero for k in range(r))
    for lhs, rhs in ls["mult"]:
        parts = lhs.split("*")
        if len(parts) != 2:
            raise ParseError(f"mult needs exactly two factors, got {lhs!r} (use e<k> for composite labels)")
        i, j = (_label_index(labels, x) for x in parts)
        vec = parse_vector(rhs, lv)
        if len(vec) != r:
            raise ParseError(f"product {lhs} has {len(vec)} components, basis has {r}")
        table[i][j] = table[j][i] = vec
    for i in range(r):
        for j in range(r):
            if table[i][j] is None:
                raise ParseError(f"missing product {labels[i]}*{labels[j]}")
    if ls["aug"] is not None:
        aug_polys = parse_vector(ls["aug"], ())
        aug = tuple(a.constant_term() for a in aug_polys)
    else:
        aug = [Fraction(1)]
        for lab in labels[1:]:
            try:
                aug.append(parse_poly(lab, A.presentation_vars).constant_term())
            except ParseError:
                raise ParseError(f"cannot infer the augmentation of basis label {lab!r}; give aug = (...)")
        aug = tuple(aug)
    embed = {}
    for name, text in ls["embed"].items():
        if name not in A.fiber_vars:
            raise ParseError(f"embed given for unknown fiber variable {name!r}")
        embed[name] = parse_vector(text, lv)
    for x in A.fiber_vars:
        if x not in embed and x not in labels:
            raise ParseError(f"fiber variable {x!r} is neither a basis label nor embedded")
    degree = ls["degree"] or DEFAULT_DEGREE
    table = tuple(tuple(tuple(s.truncate(degree) for s in v) for v in row) for row in table)
    return LambdaStructure(A.p, lv, labels, table, aug, embed, degree).validate()


def _build_module(L: LambdaStructure, name: str, acts: list) -> LambdaModule:
    r = L.rank
    given: dict[int, tuple] = {}
    for token, text in acts:
        i = _label_index(L.labels, token)
        given[i] = parse_matrix(text, L.lambda_vars)
    if not given:
        raise ParseError(f"module {name} has no action matrices")
    s = len(next(iter(given.values())))
    if any(len(m) != s or any(len(row) != s for row in m) for m in given.values()):
        raise ParseError(f"module {name}: action matrices must all be {s}x{s}")
    ident = tuple(tuple(Poly.const(L.lambda_vars, int(a == b)) for b in range(s)) for a in range(s))
    given.setdefault(0, ident)
    missing = [L.labels[i] for i in range(r) if i not in given]
    if missing:
        raise ParseError(f"module {name}: missing actions for {missing}")
    return LambdaModule(L.p, L.lambda_vars, tuple(given[i] for i in range(r)), name).check(L)
