"""Executable law registry L1..L12 run over seeded corpora.

Each law draws its own corpus from the generators, evaluates the relevant
identities and records failing inputs (as input-file text) as witnesses.
"""
from __future__ import annotations

import random
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from . import invariants as inv
from .algebra import (
    parse_input,
    direct_sum,
    fiber_algebra,
    lambda_component_dim,
    membership_check,
    regular_module,
)
from .dvr import FgOModule
from .errors import CmodlabError, HypothesisUntagged, NotInCategory
from .generators import (
    MAX_EXP,
    PRIMES,
    FiberProductSpec,
    Generated,
    gen_ci,
    gen_fiber_product,
    gen_lambda,
    gen_non_member,
    gen_power_series,
    module_samples,
    random_fiber_product,
    random_member,
)
from .poly import Poly

DEFAULT_SAMPLES = 200
DEFAULT_SEED = 7
LAW_IDS = tuple(f"L{i}" for i in range(1, 13))


@dataclass
class LawResult:
    law: str
    samples: int
    failures: list = field(default_factory=list)
    seed: int = DEFAULT_SEED
    checks: int = 0

    @property
    def status(self) -> str:
        return "pass" if not self.failures else "fail"

    def to_dict(self) -> dict:
        return {"law": self.law, "samples": self.samples, "checks": self.checks, "status": self.status,
                "seed": self.seed, "failures": self.failures}


class _Run:
    def __init__(self, law: str, seed: int, samples: int):
        self.result = LawResult(law, 0, [], seed)
        self.rng = random.Random(f"{law}:{seed}")
        self.samples = samples

    def check(self, ok: bool, witness: str, detail: str) -> None:
        self.result.checks += 1
        if not ok:
            self.result.failures.append({"input": witness, "detail": detail})

    def sample(self, g: Generated, fn: Callable[[Generated], None]) -> None:
        self.result.samples += 1
        try:
            fn(g)
        except CmodlabError as exc:
            self.result.failures.append({"input": g.text, "detail": f"{type(exc).__name__}: {exc}"})


def _members(run: _Run, make: Callable[[random.Random], Generated], fn) -> LawResult:
    for _ in range(run.samples):
        run.sample(make(run.rng), fn)
    return run.result


def _ci_or_fp(rng: random.Random) -> Generated:
    if rng.random() < 0.5:
        return gen_ci(rng.getrandbits(32), rng.randint(0, 2), rng.randint(1, 2))
    return random_fiber_product(rng)


# ---------------------------------------------------------------------------


def law_L1(run: _Run) -> LawResult:
    """Regular at lambda <=> cotangent rank c <=> Psi(A) torsion; Psi(M) torsion on samples."""

    def make(rng):
        if rng.random() < 0.2:
            return gen_non_member(rng.randrange(3), rng.choice(PRIMES))
        return random_member(rng)

    def body(g: Generated):
        A, L = g.algebra, g.structure
        A0 = fiber_algebra(L)
        regular = lambda_component_dim(A0) == 1
        rank_ok = inv.cotangent_module(A).free_rank == A.c
        cm = inv.congruence_map(A0, regular_module(L).fiber())
        torsion = cm.is_injective() and cm.projection.nrows == cm.kernel.ncols
        run.check(regular == rank_ok == torsion == g.tags["member"], g.text,
                  f"conditions disagree: regular={regular} rank={rank_ok} torsion={torsion}")
        if not g.tags["member"]:
            try:
                membership_check(A, L)
                run.check(False, g.text, "non-member passed membership")
            except NotInCategory:
                run.check(True, g.text, "")
            return
        run.check(membership_check(A, L) == A.c, g.text, "membership")
        rep = inv.congruence_module(A, L)
        run.check(rep.psi_exponents is not None and len(rep.psi_exponents) <= 1, g.text, "Psi(A_0) not cyclic")
        for ms in module_samples(g, run.rng):
            r = inv.congruence_module(A, L, ms.module)  # raises unless Psi(M) is torsion
            run.check(r.psi_length >= 0, g.text, f"Psi({ms.name}) invalid")

    return _members(run, make, body)


def law_L2(run: _Run) -> LawResult:
    """Phi = 0 <=> Psi(A) = 0 <=> A regular."""

    def body(g: Generated):
        rep = inv.congruence_module(g.algebra, g.structure)
        regular = not g.algebra.normalized().relations
        triple = (rep.phi_length == 0, rep.psi_length == 0, regular)
        run.check(len(set(triple)) == 1 and regular == g.tags["regular"], g.text, f"(phi=0, psi=0, regular) = {triple}")

    return _members(run, random_member, body)


def law_L3(run: _Run) -> LawResult:
    """The congruence map has full column rank in every computation."""

    def body(g: Generated):
        A0 = fiber_algebra(g.structure)
        for ms in module_samples(g, run.rng):
            cm = inv.congruence_map(A0, ms.module.fiber())
            run.check(cm.is_injective(), g.text, f"not injective on {ms.name}")
            inv.congruence_module(g.algebra, g.structure, ms.module)

    return _members(run, random_member, body)


def law_L4(run: _Run) -> LawResult:
    """eta <= Psi <= rank * eta, with equality when rank = 1."""

    def body(g: Generated):
        reports = [(ms.name, inv.congruence_module(g.algebra, g.structure, ms.module)) for ms in module_samples(g, run.rng)]
        if g.tags["regular"]:
            reports.append(("koszul", inv.koszul_regular(g.algebra, g.structure)))
        for name, rep in reports:
            run.check(rep.pairing_bounds_hold(), g.text,
                      f"{name}: eta={rep.eta_valuation} psi={rep.psi_length} rank={rep.rank_lambda}")

    return _members(run, random_member, body)


def random_surjection(rng: random.Random) -> tuple[Generated, Generated, dict]:
    """A surjection source -> target killing one variable, with the image map."""
    if rng.random() < 0.5:
        p = rng.choice(PRIMES)
        r = rng.randint(2, 4)
        c = rng.randint(0, 1)
        ms = tuple(rng.randint(1, MAX_EXP) for _ in range(r))
        lift = tuple(rng.randint(1, MAX_EXP) for _ in range(r)) if c else ()
        src = gen_fiber_product(FiberProductSpec(p, ms, c, lift))
        tgt = gen_fiber_product(FiberProductSpec(p, ms[:-1], c, lift[:-1]))
        killed = f"x{r}"
    else:
        while True:
            src = gen_ci(rng.getrandbits(32), rng.randint(0, 2), 2)
            m = re.search(r"^mult e3\*e3 = \((.*?),", src.text, re.M)
            if src.algebra.fiber_vars == ("x1", "x2") and m and m.group(1).strip() == "0":
                break
        # x2 -> 0 is well defined since x2^2 = beta*x2; the target keeps x1 and its relation
        lines = src.text.splitlines()
        head = [ln for ln in lines if ln.startswith(("p=", "lambda"))]
        rel1 = next(ln for ln in lines if ln.startswith("rel") and "x1" in ln and "x2" not in ln)
        mult = re.match(r"mult e2\*e2 = \((.*)\)$", next(ln for ln in lines if ln.startswith("mult e2*e2")))
        alpha, beta = [x.strip() for x in mult.group(1).split(",")][:2]
        text = "\n".join(head + ["fiber x1", rel1, "[lambda-structure]", "basis 1, x1",
                                 f"mult x1*x1 = ({alpha}, {beta})"]) + "\n"
        tgt = Generated(src.name + " / x2", text, parse_input(text), {"defect": 0},
                        {"family": "ci", "ci": True, "member": True, "regular": False})
        killed = "x2"
    pv_s, pv_t = src.algebra.presentation_vars, tgt.algebra.presentation_vars
    images = {v: (Poly(pv_t) if v == killed else Poly.var(pv_t, v)) for v in pv_s}
    return src, tgt, images


def _target_modules(tgt: Generated, rng) -> list:
    out = [s.module for s in module_samples(tgt, rng) if s.name in ("A", "A+A", "normalization", "W0")]
    return out


def law_L5(run: _Run) -> LawResult:
    """Psi of an A'-module is the same over A' and over A; defects compare via Phi."""
    for _ in range(run.samples):
        src, tgt, images = random_surjection(run.rng)
        run.result.samples += 1
        phi = inv.Surjection(src.algebra, src.structure, tgt.algebra, tgt.structure, images)
        try:
            for M in _target_modules(tgt, run.rng):
                same, over_src, over_tgt = inv.invariance_check(phi, M)
                run.check(same, src.text + "--\n" + tgt.text, f"Psi differs for {M.name}: {over_src.psi_length} vs {over_tgt.psi_length}")
                run.check(over_src.defect >= over_tgt.defect, src.text, "defect decreased along the surjection")
                if over_src.rank_lambda:
                    equal_phi = inv.cotangent_module(src.algebra) == inv.cotangent_module(tgt.algebra)
                    run.check((over_src.defect == over_tgt.defect) == equal_phi, src.text, "defect equality vs Phi")
        except CmodlabError as exc:
            run.result.failures.append({"input": src.text + "--\n" + tgt.text, "detail": f"{type(exc).__name__}: {exc}"})
    return run.result


def law_L6(run: _Run) -> LawResult:
    """rank * Psi(A) - Psi(M) = length Ker(a(M)) >= 0."""

    def body(g: Generated):
        for ms in module_samples(g, run.rng):
            d = inv.defect_decomposition(g.algebra, g.structure, ms.module)
            run.check(d.ker_a_length >= 0, g.text, f"{ms.name}: negative kernel")
            if ms.splits:
                run.check(d.ker_a_length == 0, g.text, f"{ms.name}: split module with non-zero kernel")

    return _members(run, random_member, body)


def law_L7(run: _Run) -> LawResult:
    """Freeness length test on known splittings A^mu + W; non-split members are rejected."""

    def body(g: Generated):
        rep_A = inv.congruence_module(g.algebra, g.structure)
        for ms in module_samples(g, run.rng):
            verdict = inv.freeness_check(g.algebra, g.structure, ms.module)
            if ms.splits:
                run.check(verdict == "free-summand certified", g.text, f"{ms.name}: {verdict}")
            elif rep_A.psi_length > 0 and ms.name == "normalization":
                run.check(verdict == "no", g.text, f"{ms.name}: certified although Psi differs")

    def make(rng):
        return _ci_or_fp(rng)

    return _members(run, make, body)


def law_L8(run: _Run) -> LawResult:
    """Isomorphism criteria: identity certified, untagged rejected, proper surjections never certified."""
    for _ in range(run.samples):
        run.result.samples += 1
        g = random_member(run.rng)
        pv = g.algebra.presentation_vars
        ident = inv.Surjection(g.algebra, g.structure, g.algebra, g.structure, {v: Poly.var(pv, v) for v in pv})
        try:
            run.check(ident.is_identity(), g.text, "identity not recognised")
            for tag in ("gorenstein", "ci"):
                run.check(inv.iso_criteria_check(ident, tag) == "isomorphism certified", g.text, f"identity under {tag}")
            try:
                inv.iso_criteria_check(ident, None)
                run.check(False, g.text, "untagged hypothesis accepted")
            except HypothesisUntagged:
                run.check(True, g.text, "")
            src, tgt, images = random_surjection(run.rng)
            phi = inv.Surjection(src.algebra, src.structure, tgt.algebra, tgt.structure, images)
            evidence = {"ci": bool(tgt.tags["ci"])}
            verdict = inv.iso_criteria_check(phi, "ci", evidence)
            if not tgt.tags["ci"]:
                expected = "hypothesis rejected"
            else:
                expected = "isomorphism certified" if src.structure.rank == tgt.structure.rank else "not certified"
            run.check(verdict == expected, src.text + "--\n" + tgt.text, f"verdict {verdict}, expected {expected}")
        except CmodlabError as exc:
            run.result.failures.append({"input": g.text, "detail": f"{type(exc).__name__}: {exc}"})
    return run.result


def deformation_elements(g: Generated, rng: random.Random) -> list[str]:
    """Elements of Ker(lambda) whose deformation the library can verify."""
    c = g.c
    ts = list(g.algebra.lambda_vars)
    xs = list(g.algebra.fiber_vars)
    k = rng.randint(0, 3)
    p = g.algebra.p
    if g.algebra.lambda_images:
        if c == 1:
            return [rng.choice(["t1", f"{p ** k}*t1"])]
        return rng.choice([[f"t2 - {p ** k}*t1"], [f"t2 - {p ** k}*t1", "t1"], ["t2", f"{p ** k}*t1"]])
    if c == 1:
        options = ["t1", f"{p ** k}*t1"]
        if xs:
            options.append(f"t1 - {p ** k}*{rng.choice(xs)}")
        return [rng.choice(options)]
    i, j = rng.sample(range(c), 2)
    choice = rng.randrange(3)
    if choice == 0:
        return [ts[i]]
    if choice == 1:
        return [f"{ts[i]} - {p ** k}*{ts[j]}"]
    return [f"{ts[i]} - {p ** k}*{ts[j]}", ts[j]]


def law_L9(run: _Run) -> LawResult:
    """Psi and Phi grow by rank * sum(ord) and sum(ord); the defect is invariant."""

    def make(rng):
        while True:
            g = random_member(rng)
            if g.c >= 1:
                return g

    def body(g: Generated):
        fs = deformation_elements(g, run.rng)
        mods = [ms for ms in module_samples(g, run.rng) if ms.name in ("A", "A+A") or ms.name.startswith("A+W")]
        ms = run.rng.choice(mods)
        res = inv.deform(g.algebra, g.structure, ms.module, fs)
        detail = (f"{fs} on {ms.name}: ord={res.step.orders} phi {res.before.phi_length}->{res.after.phi_length} "
                  f"psi {res.before.psi_length}->{res.after.psi_length} via {res.psi_method}")
        run.check(res.psi_method != "predicted", g.text, "Psi(M/fM) not recomputed: " + detail)
        run.check(res.phi_identity, g.text, "Phi identity: " + detail)
        run.check(res.psi_identity, g.text, "Psi identity: " + detail)
        run.check(res.defect_invariant, g.text, "defect changed: " + detail)

    return _members(run, make, body)


def law_L10(run: _Run) -> LawResult:
    """delta(M) = rank * delta(A) + length Ker(a(M))."""

    def body(g: Generated):
        for ms in module_samples(g, run.rng):
            d = inv.defect_decomposition(g.algebra, g.structure, ms.module)
            run.check(d.delta_M == d.rank_lambda * d.delta_A + d.ker_a_length, g.text, f"{ms.name}: formula")

    return _members(run, random_member, body)


def law_L11(run: _Run) -> LawResult:
    """delta = 0 on complete intersections, > 0 on fiber products with r >= 2, >= 0 everywhere."""

    def body(g: Generated):
        rep = inv.congruence_module(g.algebra, g.structure)
        if g.tags["ci"]:
            run.check(rep.defect == 0, g.text, f"CI with defect {rep.defect}")
        if g.tags.get("family") == "fiber_product":
            r = g.tags["r"]
            run.check((rep.defect > 0) == (r >= 2), g.text, f"fiber product r={r} defect {rep.defect}")
            run.check(rep.defect == g.oracle["defect"], g.text, "fiber product defect differs from closed form")
        for ms in module_samples(g, run.rng):
            d = inv.congruence_module(g.algebra, g.structure, ms.module).defect
            run.check(d >= 0, g.text, f"{ms.name}: negative defect {d}")

    return _members(run, random_member, body)


def law_L12(run: _Run) -> LawResult:
    """Lambda-descent identities, cotangent ranks and cross-path agreement of Psi."""

    def body(g: Generated):
        A, L = g.algebra, g.structure
        cot = inv.cotangent_module(A)
        cot0 = inv.fiber_cotangent(fiber_algebra(L))
        run.check(cot.free_rank == A.c and cot0.free_rank == 0, g.text, f"cotangent ranks {cot.free_rank}, {cot0.free_rank}")
        _, ck = inv.wedge_iota_star(A)
        run.check(cot0.length() - cot.length() == ck, g.text, f"Phi(A_0) - Phi(A) = {cot0.length() - cot.length()} vs {ck}")
        for ms in module_samples(g, run.rng):
            rep = inv.congruence_module(A, L, ms.module)
            if A.c and rep.eta_valuation is not None:
                run.check(rep.eta_fiber == rep.eta_valuation + ck, g.text, f"{ms.name}: eta descent")
                run.check(rep.psi_fiber == rep.psi_length + rep.rank_lambda * ck, g.text, f"{ms.name}: Psi descent")
            if g.tags["regular"]:
                k = inv.koszul_regular(A, L, ms.module)
                run.check(k.psi_length == rep.psi_length, g.text, f"{ms.name}: Koszul {k.psi_length} vs {rep.psi_length}")
            if A.c == 1 and ms.name in ("A", "W0") or (A.c == 1 and ms.name.startswith("A+W")):
                e = inv.ext1_truncated(A, L, ms.module)
                run.check(e.stabilized and e.length == rep.psi_length, g.text,
                          f"{ms.name}: Ext1 {e.length} vs {rep.psi_length}")

    return _members(run, random_member, body)


LAWS = {f"L{i}": globals()[f"law_L{i}"] for i in range(1, 13)}


def parse_law_ids(spec: str) -> list[str]:
    """``"L1-L12"``, ``"L3,L5"`` or ``"all"`` -> list of law ids."""
    out: list[str] = []
    for part in spec.replace(" ", "").split(","):
        if not part:
            continue
        if part.lower() == "all":
            out.extend(LAW_IDS)
            continue
        m = re.fullmatch(r"L(\d+)(?:-L?(\d+))?", part)
        if not m:
            raise KeyError(part)
        lo = int(m.group(1))
        hi = int(m.group(2) or lo)
        for i in range(lo, hi + 1):
            if f"L{i}" not in LAWS:
                raise KeyError(f"L{i}")
            out.append(f"L{i}")
    return out


def run_law(law_id: str, seed: int = DEFAULT_SEED, samples: int = DEFAULT_SAMPLES) -> LawResult:
    if law_id not in LAWS:
        raise KeyError(law_id)
    return LAWS[law_id](_Run(law_id, seed, samples))


def _run_tuple(args):
    return run_law(*args)


def run_laws(law_ids, seed: int = DEFAULT_SEED, samples: int = DEFAULT_SAMPLES, jobs: int = 1) -> list[LawResult]:
    """Run laws in order; with ``jobs > 1`` they run in worker processes."""
    args = [(law, seed, samples) for law in law_ids]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_tuple, args))
    return [run_law(*a) for a in args]
