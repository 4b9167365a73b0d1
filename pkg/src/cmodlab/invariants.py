"""Cotangent torsion, congruence modules, congruence ideals and the Wiles defect.

The primary path works at the fiber ``A_0 = A/tA`` where everything is a
finite O-linear algebra problem, then corrects by the length of the
cokernel of ``wedge^c iota^*``.  The Koszul and truncated paths recompute
``Psi`` independently where they apply.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .algebra import (
    AugmentedAlgebra,
    FiberAlgebra,
    FiberModule,
    InputData,
    LambdaModule,
    LambdaStructure,
    TruncationContext,
    cotangent_module_of,
    fiber_algebra,
    fiber_module,
    generalized_eigenspace_dim,
    iota_star_matrix,
    linear_part_matrix,
    linear_vector,
    membership_check,
    regular_module,
    trivial_structure,
)
from .dvr import (
    INF,
    FgOModule,
    OMatrix,
    det_valuation,
    kernel_basis,
    left_kernel_basis,
    module_from_presentation,
    quotient_projection,
    rank_over_fraction_field,
    saturation_coordinates,
    smith_normal_form,
    valuation_of,
)
from .errors import (
    BadAugmentationForm,
    DependentResidues,
    InputError,
    InvariantViolation,
    NegativeKernel,
    NegativeLength,
    NotInCategory,
    NotIndependent,
    NotRegularCase,
    ParseError,
    TorsionResidue,
    UnsupportedDeformation,
)
from .poly import Poly, format_poly, parse_poly
from . import truncated

SCHEMA = "cmodlab/1"
PATHS = ("C0Direct", "LambdaDescent", "KoszulRegular", "Ext1Truncated", "ColonTruncated")


@dataclass(frozen=True)
class InvariantReport:
    phi_length: int
    psi_length: int
    eta_valuation: int | None
    rank_lambda: int
    defect: int
    path: str
    c: int = 0
    wedge_length: int | None = None
    phi_fiber: int | None = None
    psi_fiber: int | None = None
    eta_fiber: int | None = None
    psi_exponents: tuple[int, ...] | None = None  # elementary divisors of Psi at the fiber
    flags: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.path not in PATHS:
            raise ValueError(f"unknown path {self.path!r}")
        if self.defect != self.rank_lambda * self.phi_length - self.psi_length:
            raise InvariantViolation("defect does not equal rank * phi - psi")

    def pairing_bounds_hold(self) -> bool:
        if self.eta_valuation is None:
            return self.rank_lambda == 0 and self.psi_length == 0
        eta, psi = self.eta_valuation, self.psi_length
        if not eta <= psi <= self.rank_lambda * eta:
            return False
        return self.rank_lambda != 1 or eta == psi

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "phi": self.phi_length,
            "psi": self.psi_length,
            "eta_val": self.eta_valuation,
            "rank": self.rank_lambda,
            "defect": self.defect,
            "path": self.path,
            "c": self.c,
            "wedge": self.wedge_length,
            "phi_fiber": self.phi_fiber,
            "psi_fiber": self.psi_fiber,
            "eta_fiber": self.eta_fiber,
            "psi_fiber_module": None if self.psi_exponents is None else list(self.psi_exponents),
            "flags": dict(sorted(self.flags.items())),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "InvariantReport":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported schema {d.get('schema')!r}")
        return cls(
            phi_length=d["phi"],
            psi_length=d["psi"],
            eta_valuation=d["eta_val"],
            rank_lambda=d["rank"],
            defect=d["defect"],
            path=d["path"],
            c=d.get("c", 0),
            wedge_length=d.get("wedge"),
            phi_fiber=d.get("phi_fiber"),
            psi_fiber=d.get("psi_fiber"),
            eta_fiber=d.get("eta_fiber"),
            psi_exponents=None if d.get("psi_fiber_module") is None else tuple(d["psi_fiber_module"]),
            flags=dict(d.get("flags", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "InvariantReport":
        return cls.from_dict(json.loads(text))


def _report(phi: int, psi: int, eta, mu: int, path: str, **kw) -> InvariantReport:
    return InvariantReport(phi, psi, eta, mu, mu * phi - psi, path, **kw)


# ---------------------------------------------------------------------------
# cotangent data


def cotangent_module(A: AugmentedAlgebra) -> FgOModule:
    return cotangent_module_of(A)


def phi_length(A: AugmentedAlgebra) -> int:
    return cotangent_module(A).length()


def element_poly(A: AugmentedAlgebra, f) -> Poly:
    """Parse or coerce ``f`` into the presentation variables, expanding iota images."""
    pv = A.presentation_vars
    if isinstance(f, str):
        names = tuple(dict.fromkeys(pv + A.lambda_vars))
        f = parse_poly(f, names)
    if f.vars != pv:
        extra = {t: A.lambda_images[t] for t in A.lambda_images if t in f.used_vars()}
        f = f.subs(extra, pv) if extra else f.with_vars(pv)
    if f.constant_term() != 0:
        raise BadAugmentationForm(f"{format_poly(f)} is not in the augmentation ideal")
    return f


def _free_coordinates(A: AugmentedAlgebra, fs: Sequence[Poly]) -> list[list[Fraction]]:
    """Coordinates of the residues of ``fs`` on the free part of p/p^2."""
    u = linear_part_matrix(A)
    n = len(A.presentation_vars)
    snf = smith_normal_form(u, rows=False) if u.nrows else None
    out = []
    for f in fs:
        v = OMatrix.from_rows(A.p, [linear_vector(A, f)], n)
        if snf is None:
            out.append(list(v.entries[0]))
        else:
            out.append(list((v @ snf.V).entries[0][snf.rank :]))
    return out


def order_of(A: AugmentedAlgebra, f) -> int:
    """Valuation of the order ideal ``{alpha(f) : alpha in Hom(p/p^2, O)}``."""
    f = element_poly(A, f)
    y = _free_coordinates(A, [f])[0]
    vals = [valuation_of(x, A.p) for x in y]
    ordv = min(vals, default=INF)
    if ordv == INF:
        raise TorsionResidue(f"residue of {format_poly(f)} is torsion in p/p^2; its order ideal is zero")
    return int(ordv)


def check_independent(A: AugmentedAlgebra, fs: Sequence[Poly]) -> None:
    if not fs:
        return
    rows = _free_coordinates(A, fs)
    m = OMatrix.from_rows(A.p, rows, len(rows[0]))
    if rank_over_fraction_field(m) < len(fs):
        raise DependentResidues("residues of the deformation elements are linearly dependent in p/p^2")


def wedge_iota_star(A: AugmentedAlgebra) -> tuple[OMatrix, int]:
    """Matrix of ``iota^*`` on cotangent duals and the length of coker(wedge^c)."""
    if A.c == 0:
        return OMatrix.zeros(A.p, 0, 0), 0
    m = iota_star_matrix(A)
    if m.nrows != A.c:
        raise NotInCategory(f"cotangent module has rank {m.nrows}, expected c = {A.c}")
    v = det_valuation(m)
    if v == INF:
        raise NotIndependent("iota is not injective on cotangent spaces")
    return m, int(v)


# ---------------------------------------------------------------------------
# codimension zero


def _hstack(mats: Sequence[OMatrix], p: int, nrows: int) -> OMatrix:
    if not mats:
        return OMatrix.zeros(p, nrows, 0)
    out = mats[0].transpose()
    for m in mats[1:]:
        out = out.vstack(m.transpose())
    return out.transpose()


def _shifted(M0: FiberModule, A0: FiberAlgebra) -> list[OMatrix]:
    s = M0.rank
    out = []
    for i in range(1, A0.rank):
        a = M0.actions[i]
        lam = A0.aug[i]
        out.append(OMatrix.from_rows(A0.p, [[a[x, y] - (lam if x == y else 0) for y in range(s)] for x in range(s)], s))
    return out


def fiber_cotangent(A0: FiberAlgebra) -> FgOModule:
    """``p_0/p_0^2`` computed from the multiplication table."""
    if A0.rank == 1:
        return FgOModule()
    B = A0.augmentation_ideal_basis()
    left = saturation_coordinates(B)
    cols = [B.column(j) for j in range(B.ncols)]
    rels = []
    for i in range(len(cols)):
        for j in range(i, len(cols)):
            prod = A0.mult(cols[i], cols[j])
            rels.append([row[0] for row in (left @ OMatrix.from_rows(A0.p, [[x] for x in prod], 1)).entries])
    return module_from_presentation(OMatrix.from_rows(A0.p, rels, B.ncols))


def rank_at_lambda(A0: FiberAlgebra, M0: FiberModule) -> int:
    return generalized_eigenspace_dim(list(M0.actions), A0.aug)


@dataclass(frozen=True)
class CongruenceMap:
    """The map ``M_0[p_0] -> tf(M_0/p_0 M_0)`` and the pairing data behind it."""

    kernel: OMatrix  # columns: O-basis of M_0[p_0]
    projection: OMatrix  # rows: coordinates on tf(M_0/p_0 M_0)
    functionals: OMatrix  # rows: O-basis of Hom_{A_0}(M_0, O)

    @property
    def matrix(self) -> OMatrix:
        return self.projection @ self.kernel

    def cokernel(self) -> FgOModule:
        return module_from_presentation(self.matrix.transpose())

    def is_injective(self) -> bool:
        return rank_over_fraction_field(self.matrix) == self.kernel.ncols


def congruence_map(A0: FiberAlgebra, M0: FiberModule) -> CongruenceMap:
    p, s = A0.p, M0.rank
    shifts = _shifted(M0, A0)
    stacked = shifts[0] if shifts else OMatrix.zeros(p, 0, s)
    for m in shifts[1:]:
        stacked = stacked.vstack(m)
    gens = _hstack(shifts, p, s)  # columns span p_0 M_0
    return CongruenceMap(kernel_basis(stacked), quotient_projection(gens), left_kernel_basis(gens))


def c0_invariants(A0: FiberAlgebra, M0: FiberModule) -> InvariantReport:
    """Invariants of a codimension-zero pair by direct linear algebra."""
    cot = fiber_cotangent(A0)
    if cot.free_rank != 0:
        raise NotInCategory(f"fiber cotangent module has rank {cot.free_rank}, expected 0")
    cm = congruence_map(A0, M0)
    K, Y = cm.kernel, cm.functionals
    if not cm.is_injective():
        raise InvariantViolation("map M_0[p] -> tf(M_0/pM_0) is not injective")
    if cm.projection.nrows != K.ncols:
        raise InvariantViolation("M_0[p] and tf(M_0/pM_0) have different ranks")
    psi = cm.cokernel()
    mu = rank_at_lambda(A0, M0)
    if mu != K.ncols:
        raise InvariantViolation("rank at lambda differs from the rank of M_0[p]")
    if Y.nrows != K.ncols:
        raise InvariantViolation("Hom(M_0, O) and M_0[p] have different ranks")
    eta = None
    if K.ncols:
        eta = (Y @ K).min_valuation()
        if eta == INF:
            raise InvariantViolation("congruence pairing vanishes")
        eta = int(eta)
    phi = cot.length()
    return _report(phi, psi.length(), eta, mu, "C0Direct", c=0, phi_fiber=phi, psi_fiber=psi.length(),
                   eta_fiber=eta, psi_exponents=psi.torsion_exponents)


# ---------------------------------------------------------------------------
# Lambda-descent


def _resolve(A: AugmentedAlgebra, L: LambdaStructure | None, M: LambdaModule | None):
    if L is None:
        if A.normalized().relations or A.fiber_vars or A.lambda_images:
            raise InputError("this algebra needs a [lambda-structure] block")
        L = trivial_structure(A.p, A.lambda_vars)
    if M is None:
        M = regular_module(L)
    return L, M


def congruence_module(A: AugmentedAlgebra, L: LambdaStructure | None = None, M: LambdaModule | None = None) -> InvariantReport:
    """Invariants of ``(A, M)`` by descent to the fiber at ``t = 0``."""
    L, M = _resolve(A, L, M)
    membership_check(A, L)
    A0 = fiber_algebra(L)
    base = c0_invariants(A0, fiber_module(M, A0))
    phi = phi_length(A)
    flags = {"flatness": "basis supplied"}
    if A.c == 0:
        if phi != base.phi_length:
            raise InvariantViolation("cotangent torsion of the presentation and of the structure differ")
        return dataclasses.replace(base, flags=flags)
    _, ck = wedge_iota_star(A)
    mu = base.rank_lambda
    psi = base.psi_length - mu * ck
    if psi < 0:
        raise NegativeLength(f"descent gives Psi length {psi}")
    eta = None
    if base.eta_valuation is not None:
        eta = base.eta_valuation - ck
        if eta < 0:
            raise NegativeLength(f"descent gives eta valuation {eta}")
    return _report(
        phi, psi, eta, mu, "LambdaDescent", c=A.c, wedge_length=ck,
        phi_fiber=base.phi_length, psi_fiber=base.psi_length, eta_fiber=base.eta_valuation,
        psi_exponents=base.psi_exponents, flags=flags,
    )


def report_for(data: InputData, module: str | None = None) -> InvariantReport:
    M = None
    if module is not None:
        if module not in data.modules:
            raise InputError(f"no module named {module!r}")
        M = data.modules[module]
    elif len(data.modules) == 1:
        M = next(iter(data.modules.values()))
    return congruence_module(data.algebra, data.structure, M)


def wiles_defect(A: AugmentedAlgebra, L: LambdaStructure | None = None, M: LambdaModule | None = None) -> int:
    return congruence_module(A, L, M).defect


# ---------------------------------------------------------------------------
# independent paths


def koszul_regular(A: AugmentedAlgebra, L: LambdaStructure | None = None, M: LambdaModule | None = None) -> InvariantReport:
    """Congruence module of a regular ``A`` from the top Koszul cohomology.

    With ``y`` the presentation variables, ``Ext^c(O, M) = M/yM = M_0/yM_0``
    and ``Ext^c(O, M/pM) = M/pM``; Psi is the cokernel of the torsion-free
    parts.  The pairing with ``Hom_A(M, O)`` lands in ``Ext^c(O, O) = O``.
    """
    A = A.normalized()
    L, M = _resolve(A, L, M)
    if A.relations or len(A.presentation_vars) != A.c:
        raise NotRegularCase("Koszul path needs Ker(lambda) generated by exactly c elements with no relations")
    membership_check(A, L)
    p = A.p
    A0 = fiber_algebra(L)
    M0 = fiber_module(M, A0)
    s = M0.rank
    ys = []
    for y in A.presentation_vars:
        vec = L.element(Poly.var(A.presentation_vars, y))
        ys.append(M0.action_of([x.constant_term() for x in vec]))
    y_span = _hstack(ys, p, s)
    p_span = _hstack(_shifted(M0, A0), p, s)
    snf = smith_normal_form(y_span, cols=False)
    lift = snf.U_inv.select_columns(range(snf.rank, s))  # basis of tf(M_0/yM_0) lifted to M_0
    P = quotient_projection(p_span)
    Q = P @ lift
    if rank_over_fraction_field(Q) < Q.ncols or Q.nrows != Q.ncols:
        raise InvariantViolation("Koszul congruence map is not injective")
    psi = module_from_presentation(Q.transpose()).length()
    mu = Q.ncols
    Y = left_kernel_basis(p_span)
    eta = int(Y.min_valuation()) if mu else None
    return _report(phi_length(A), psi, eta, mu, "KoszulRegular", c=A.c)


def ext1_report(A: AugmentedAlgebra, L: LambdaStructure | None = None, M: LambdaModule | None = None,
                ctx: TruncationContext | None = None) -> tuple[InvariantReport, "truncated.SweepResult"]:
    L, M = _resolve(A, L, M)
    if A.c != 1:
        raise NotRegularCase(f"the truncated Ext^1 path needs c = 1, got c = {A.c}")
    membership_check(A, L)
    res = truncated.ext1_truncated(L, M, A.fiber_vars, ctx)
    mu = rank_at_lambda(fiber_algebra(L), M.fiber())
    rep = _report(phi_length(A), res.length, None, mu, "Ext1Truncated", c=1,
                  flags={"eta": "not computed on this path"})
    return rep, res


def ext1_truncated(A: AugmentedAlgebra, L: LambdaStructure | None = None, M: LambdaModule | None = None,
                   ctx: TruncationContext | None = None) -> "truncated.SweepResult":
    """(length estimate, stabilized) for the truncated Ext^1 path; c must be 1."""
    return ext1_report(A, L, M, ctx)[1]


# ---------------------------------------------------------------------------
# deformations


@dataclass(frozen=True)
class DeformationStep:
    elements: tuple[Poly, ...]
    orders: tuple[int, ...]
    algebra: AugmentedAlgebra
    structure: LambdaStructure | None
    module: LambdaModule | None

    @property
    def total_order(self) -> int:
        return sum(self.orders)


@dataclass(frozen=True)
class DeformationResult:
    before: InvariantReport
    after: InvariantReport
    step: DeformationStep
    psi_method: str  # "descent", "colon" or "predicted"
    phi_identity: bool
    psi_identity: bool
    defect_invariant: bool

    @property
    def verified(self) -> bool:
        return self.psi_method != "predicted" and self.phi_identity and self.psi_identity and self.defect_invariant


def _solve_for(f: Poly, t: str):
    """If ``f = u*t - g`` with ``u`` a unit and ``g`` free of ``t``, return ``g/u``."""
    i = f.vars.index(t)
    lin = f.linear_part()[t]
    if any(m[i] for m, c in f.terms.items() if sum(m) != 1 or m[i] != 1):
        return None
    rest = f - Poly.var(f.vars, t) * lin
    return rest * (-1 / lin)


def _quotient_step(A, L, M, f):
    """Quotient by one element; returns (A', L' or None, M' or None, substitution or None)."""
    p = A.p
    lam_pres = [t for t in A.lambda_vars if t not in A.lambda_images]
    lin = f.linear_part()
    for t in lam_pres:
        if lin[t] and valuation_of(lin[t], p) == 0:
            h = _solve_for(f, t)
            if h is None:
                continue
            new_lv = tuple(x for x in A.lambda_vars if x != t)
            new_pv = tuple(x for x in A.presentation_vars if x != t)
            sub = {t: h}
            rels = tuple(g.subs(sub, f.vars).with_vars(new_pv) for g in A.relations)
            images = {k: v.subs(sub, f.vars).with_vars(new_pv) for k, v in A.lambda_images.items()}
            A2 = AugmentedAlgebra(p, new_lv, A.fiber_vars, rels, images).validate()
            if h.used_vars() <= set(lam_pres) and L is not None and not A.lambda_images:
                hl = h.with_vars(new_lv)
                L2 = L.specialize({t: hl})
                M2 = M.specialize({t: hl}, L.degree) if M is not None else None
                return A2, L2, M2, (t, h)
            return A2, None, None, (t, h)
    if any(x and valuation_of(x, p) == 0 for x in lin.values()):
        raise UnsupportedDeformation(
            f"{format_poly(f)} has a unit linear coefficient but is not of the form t - h"
        )
    cands = [(valuation_of(lin[t], p), lam_pres.index(t), t) for t in lam_pres if lin[t]]
    if not cands and A.lambda_images:
        # t is not a presentation variable: drop it from Lambda, keep f as a relation
        t = next(iter(A.lambda_images))
        images = {k: v for k, v in A.lambda_images.items() if k != t}
        lv = tuple(x for x in A.lambda_vars if x != t)
        A2 = AugmentedAlgebra(p, lv, A.fiber_vars, A.relations + (f,), images).validate()
        return A2, None, None, None
    if not cands:
        raise UnsupportedDeformation(f"{format_poly(f)} has no lambda variable in its linear part")
    t = min(cands)[2]
    new_lv = tuple(x for x in A.lambda_vars if x != t)
    new_fv = (t,) + A.fiber_vars
    A2 = AugmentedAlgebra(p, new_lv, new_fv, A.relations + (f,), dict(A.lambda_images))
    new_pv = A2.presentation_vars
    A2 = AugmentedAlgebra(p, new_lv, new_fv, tuple(g.with_vars(new_pv) for g in A2.relations),
                          {k: v.with_vars(new_pv) for k, v in A.lambda_images.items()}).validate()
    return A2, None, None, None


def _names(A: AugmentedAlgebra) -> tuple[str, ...]:
    return tuple(dict.fromkeys(A.presentation_vars + A.lambda_vars))


def _raw_poly(A: AugmentedAlgebra, f) -> Poly | None:
    """``f`` over presentation and Lambda variables, iota images not expanded."""
    try:
        if isinstance(f, str):
            return parse_poly(f, _names(A))
        return f.with_vars(_names(A))
    except (ValueError, ParseError):
        return None


def _lambda_step(A, L, M, raw):
    """Quotient by ``t - h`` with ``h`` in the other Lambda-variables when iota images are present.

    The structure is specialized directly, so iota images never get expanded.
    """
    if L is None or raw is None or not A.lambda_images or not raw.used_vars() <= set(A.lambda_vars):
        return None
    lf = raw.with_vars(A.lambda_vars)
    lin = lf.linear_part()
    for t in A.lambda_vars:
        if t in A.lambda_images or not lin[t] or valuation_of(lin[t], A.p) != 0:
            continue
        if any(t in img.used_vars() for img in A.lambda_images.values()):
            continue
        h = _solve_for(lf, t)
        if h is None:
            continue
        pv = A.presentation_vars
        new_lv = tuple(x for x in A.lambda_vars if x != t)
        new_pv = tuple(x for x in pv if x != t)
        hl = h.with_vars(new_lv)
        images = {k: v.with_vars(new_pv) for k, v in A.lambda_images.items()}
        h_old = hl.subs({k: images[k] for k in images if k in hl.used_vars()}, new_pv).with_vars(pv)
        rels = tuple(g.subs({t: h_old}, pv).with_vars(new_pv) for g in A.relations)
        A2 = AugmentedAlgebra(A.p, new_lv, A.fiber_vars, rels, images).validate()
        L2 = L.specialize({t: hl})
        M2 = M.specialize({t: hl}, L.degree) if M is not None else None
        return A2, L2, M2, (t, h_old), hl
    return None


def deform(A: AugmentedAlgebra, L: LambdaStructure | None, M: LambdaModule | None, fs: Sequence,
           ctx: TruncationContext | None = None) -> DeformationResult:
    """Quotient by ``fs`` and check the length identities for the deformation."""
    L, M = _resolve(A, L, M)
    before = congruence_module(A, L, M)
    raw_fs = list(fs)
    fs = [element_poly(A, f) for f in fs]
    if not fs:
        raise InputError("no deformation elements given")
    if len(fs) > A.c:
        raise DependentResidues("more elements than the codimension")
    for f in fs:
        order_of(A, f)  # raises on torsion residues
    check_independent(A, fs)
    # each order is taken in the quotient by the elements before it
    orders = []

    cur_A, cur_L, cur_M = A, L, M
    pending = list(fs)
    raws = [_raw_poly(A, f) for f in raw_fs]
    while pending:
        f = pending.pop(0)
        raw = raws.pop(0)
        if f.vars != cur_A.presentation_vars:
            f = f.with_vars(cur_A.presentation_vars)
        last = (cur_A, cur_L, cur_M, f)
        orders.append(order_of(cur_A, f))
        step = _lambda_step(cur_A, cur_L, cur_M, raw)
        if step is not None:
            nxt_A, nxt_L, nxt_M, sub, hl = step
            names = _names(cur_A)
            raws = [None if g is None else g.subs({sub[0]: hl}, names).with_vars(_names(nxt_A)) for g in raws]
        else:
            nxt_A, nxt_L, nxt_M, sub = _quotient_step(cur_A, cur_L, cur_M, f)
            raws = [None] * len(raws)
        if sub is not None:
            t, h = sub
            pending = [g.subs({t: h}, g.vars).with_vars(nxt_A.presentation_vars) for g in pending]
        else:
            pending = [g.with_vars(nxt_A.presentation_vars) for g in pending]
        cur_A, cur_L, cur_M = nxt_A, nxt_L, nxt_M
    orders = tuple(orders)
    total = sum(orders)
    phi_after = phi_length(cur_A)
    mu = before.rank_lambda
    predicted_psi = before.psi_length + mu * total
    if cur_L is not None:
        after = congruence_module(cur_A, cur_L, cur_M)
        method = "descent"
    elif last[1] is not None and last[0].c == 1:
        # every earlier step kept a structure, so the last one is a c = 1 to c = 0 quotient
        A1, L1, M1, f1 = last
        res = truncated.colon_truncated(L1, M1, f1, A1.presentation_vars, ctx)
        after = _report(phi_after, res.length, None, mu, "ColonTruncated", c=0,
                        flags={"eta": "not computed on this path", "rank": "carried over from M"})
        method = "colon"
    else:
        after = _report(phi_after, predicted_psi, None, mu, "LambdaDescent", c=cur_A.c,
                        flags={"psi": "predicted, not recomputed"})
        method = "predicted"
    step = DeformationStep(tuple(fs), orders, cur_A, cur_L, cur_M)
    return DeformationResult(
        before, after, step, method,
        phi_identity=after.phi_length == before.phi_length + total,
        psi_identity=after.psi_length == predicted_psi,
        defect_invariant=after.defect == before.defect,
    )


# ---------------------------------------------------------------------------
# comparisons between modules and algebras


@dataclass(frozen=True)
class DefectDecomposition:
    delta_A: int
    ker_a_length: int
    delta_M: int
    rank_lambda: int


def defect_decomposition(A: AugmentedAlgebra, L: LambdaStructure | None, M: LambdaModule) -> DefectDecomposition:
    rep_A = congruence_module(A, L)
    rep_M = congruence_module(A, L, M)
    ker = rep_M.rank_lambda * rep_A.psi_length - rep_M.psi_length
    if ker < 0:
        raise NegativeKernel(f"kernel length {ker} is negative")
    if rep_M.defect != rep_M.rank_lambda * rep_A.defect + ker:
        raise InvariantViolation("defect formula does not balance")
    return DefectDecomposition(rep_A.defect, ker, rep_M.defect, rep_M.rank_lambda)


def freeness_check(A: AugmentedAlgebra, L: LambdaStructure | None, M: LambdaModule, gorenstein: bool = True) -> str:
    """Length test for a free summand ``A^mu``; the Gorenstein/CM flag is the caller's."""
    if not gorenstein:
        return "hypothesis not asserted"
    rep_A = congruence_module(A, L)
    rep_M = congruence_module(A, L, M)
    if rep_M.psi_length == rep_M.rank_lambda * rep_A.psi_length:
        return "free-summand certified"
    return "no"


@dataclass(frozen=True)
class Surjection:
    """A surjection ``source -> target`` of augmented algebras.

    ``images`` sends each presentation variable of the source to a
    polynomial in the target's presentation variables.
    """

    source: AugmentedAlgebra
    source_structure: LambdaStructure | None
    target: AugmentedAlgebra
    target_structure: LambdaStructure | None
    images: Mapping[str, Poly]

    def is_identity(self) -> bool:
        if self.source != self.target:
            return False
        pv = self.source.presentation_vars
        return all(self.images.get(v) == Poly.var(pv, v) for v in pv)


def pullback_module(phi: Surjection, M: LambdaModule) -> LambdaModule:
    """View a module over the target as a module over the source."""
    Ls, Lt = phi.source_structure, phi.target_structure
    if Ls is None or Lt is None:
        raise InputError("pulling back a module needs both Lambda-structures")
    pv_s, pv_t = phi.source.presentation_vars, phi.target.presentation_vars
    acts = []
    for label in Ls.labels:
        g = parse_poly(label, pv_s)
        img = g.subs({v: phi.images[v] for v in pv_s}, pv_t)
        acts.append(M.action_of(Lt.element(img), Lt.degree))
    return LambdaModule(M.p, M.lambda_vars, tuple(acts), M.name).check(Ls)


def invariance_check(phi: Surjection, M: LambdaModule) -> tuple[bool, InvariantReport, InvariantReport]:
    """Psi of ``M`` over the target and over the source must agree."""
    over_target = congruence_module(phi.target, phi.target_structure, M)
    over_source = congruence_module(phi.source, phi.source_structure, pullback_module(phi, M))
    same = (over_target.psi_length, over_target.rank_lambda) == (over_source.psi_length, over_source.rank_lambda)
    return same, over_source, over_target


def iso_criteria_check(phi: Surjection, hypothesis: str | None, evidence: Mapping[str, bool] | None = None) -> str:
    """Certify ``phi`` is an isomorphism from equality of Psi (hyp. "gorenstein") or Phi (hyp. "ci").

    ``evidence`` maps hypothesis names to what the caller knows about the
    target; a tag contradicted by it is reported as rejected.
    """
    from .errors import HypothesisUntagged

    if hypothesis not in ("gorenstein", "ci"):
        raise HypothesisUntagged("tag the surjection with hypothesis 'gorenstein' or 'ci'")
    if evidence is not None and evidence.get(hypothesis) is False:
        return "hypothesis rejected"
    if phi.source.c != phi.target.c:
        raise NotInCategory("source and target have different codimension")
    src = congruence_module(phi.source, phi.source_structure)
    tgt = congruence_module(phi.target, phi.target_structure)
    if hypothesis == "gorenstein":
        equal = src.psi_length == tgt.psi_length
    else:
        equal = src.phi_length == tgt.phi_length
    return "isomorphism certified" if equal else "not certified"
