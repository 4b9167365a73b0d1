"""Acceptance criteria 1-9, one test each; outcomes are summarized at the end of the run.

Run directly with ``python tests/test_acceptance.py`` or as part of ``pytest``.
"""
from __future__ import annotations

import itertools
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from acceptance_log import RESULTS, record  # noqa: E402
from oracles import fiber_product_closed_form, phi_oracle, psi_eta_oracle_c0  # noqa: E402

from cmodlab import invariants as inv  # noqa: E402
from cmodlab.algebra import fiber_algebra, lambda_component_dim  # noqa: E402
from cmodlab.errors import InvariantViolation  # noqa: E402
from cmodlab.generators import (  # noqa: E402
    PRIMES,
    FiberProductSpec,
    gen_ci,
    gen_fiber_product,
    gen_lambda,
    gen_non_member,
    gen_power_series,
    module_samples,
    random_fiber_product,
    random_member,
)
from cmodlab.laws import deformation_elements  # noqa: E402

SEED = 20240601


def fp_family():
    # permuting the components is an isomorphism, so multisets of exponents cover the family
    for p in PRIMES:
        for r in range(1, 5):
            for ms in itertools.combinations_with_replacement(range(1, 6), r):
                yield p, ms


def corpus(n: int, seed: int, max_c: int = 2):
    rng = random.Random(seed)
    return [random_member(rng, max_c) for _ in range(n)], rng


def _finish(n: int, bad: list, note: str) -> None:
    record(n, not bad, note if not bad else f"{len(bad)} violations, first: {bad[0]}")
    assert not bad, bad[:5]


def test_criterion_1_fiber_products():
    t0 = time.perf_counter()
    bad, n = [], 0
    for p, ms in fp_family():
        g = gen_fiber_product(FiberProductSpec(p, ms))
        rep = inv.congruence_module(g.algebra, g.structure)
        want = fiber_product_closed_form(ms)
        got = {"phi": rep.phi_length, "psi": rep.psi_length, "defect": rep.defect}
        if got != want:
            bad.append((p, ms, got, want))
        n += 1
    elapsed = time.perf_counter() - t0
    # the closed forms themselves, against the sympy oracle (outside the timing)
    for p, ms in fp_family():
        g = gen_fiber_product(FiberProductSpec(p, ms))
        want = fiber_product_closed_form(ms)
        if phi_oracle(g.algebra) != want["phi"] or psi_eta_oracle_c0(g.structure)[0] != want["psi"]:
            bad.append(("oracle", p, ms))
    # spot check of the permutation symmetry
    rng = random.Random(SEED)
    for _ in range(20):
        ms = tuple(rng.randint(1, 5) for _ in range(rng.randint(2, 4)))
        a = inv.congruence_module(*_pair(gen_fiber_product(FiberProductSpec(3, ms))))
        b = inv.congruence_module(*_pair(gen_fiber_product(FiberProductSpec(3, tuple(sorted(ms))))))
        if (a.phi_length, a.psi_length) != (b.phi_length, b.psi_length):
            bad.append(("permutation", ms))
    if elapsed >= 5.0:
        bad.append(f"family took {elapsed:.2f}s")
    _finish(1, bad, f"{n} cases in {elapsed:.2f}s")


def _pair(g):
    return g.algebra, g.structure


def test_criterion_2_ci_defect():
    t0 = time.perf_counter()
    rng = random.Random(SEED)
    bad, n = [], 0
    for _ in range(200):
        g = gen_ci(rng.getrandbits(32), rng.randint(0, 2), rng.randint(1, 2))
        rep = inv.congruence_module(g.algebra, g.structure)
        if rep.defect != 0:
            bad.append(g.name)
        n += 1
    elapsed = time.perf_counter() - t0
    if elapsed >= 30.0:
        bad.append(f"took {elapsed:.2f}s")
    _finish(2, bad, f"{n} samples in {elapsed:.2f}s")


def test_criterion_3_regularity():
    members, rng = corpus(150, SEED + 3)
    members += [gen_fiber_product(FiberProductSpec(p, (m,))) for p in PRIMES for m in (1, 3)]
    bad, regular = [], 0
    for g in members:
        rep = inv.congruence_module(g.algebra, g.structure)
        reg = not g.algebra.normalized().relations
        triple = (rep.phi_length == 0, rep.psi_length == 0, reg)
        if len(set(triple)) != 1 or reg != g.tags["regular"]:
            bad.append((g.name, triple))
        regular += reg
    assert 0 < regular < len(members)
    _finish(3, bad, f"{len(members)} members, {regular} regular")


def test_criterion_4_deformation():
    rng = random.Random(SEED + 4)
    bad, verified = [], 0
    while verified < 120:
        g = random_member(rng)
        if g.c < 1:
            continue
        fs = deformation_elements(g, rng)
        mods = [ms for ms in module_samples(g, rng) if ms.name in ("A", "A+A") or ms.name.startswith("A+W")]
        ms = rng.choice(mods)
        res = inv.deform(g.algebra, g.structure, ms.module, fs)
        if res.psi_method == "predicted":
            bad.append((g.name, fs, "Psi not recomputed"))
            continue
        s = sum(res.step.orders)
        ok = (res.after.phi_length - res.before.phi_length == s
              and res.after.psi_length - res.before.psi_length == res.before.rank_lambda * s
              and res.after.defect == res.before.defect)
        if not ok:
            bad.append((g.name, fs, ms.name))
        verified += 1
    _finish(4, bad, f"{verified} triples")


def _c1_members(rng):
    out = [gen_lambda(p, 1) for p in PRIMES]
    out += [gen_power_series(p, k, 1) for p in PRIMES for k in (1, 3)]
    out += [gen_ci(rng.getrandbits(32), 1, rng.randint(1, 2)) for _ in range(20)]
    out += [random_fiber_product(rng, max_r=3, max_c=1) for _ in range(40)]
    return [g for g in out if g.c == 1]


def test_criterion_5_cross_path():
    rng = random.Random(SEED + 5)
    bad, compared = [], 0
    members, _ = corpus(60, SEED + 55)
    for g in members + _c1_members(rng):
        for ms in module_samples(g, rng):
            rep = inv.congruence_module(g.algebra, g.structure, ms.module)
            if g.tags["regular"]:
                k = inv.koszul_regular(g.algebra, g.structure, ms.module)
                compared += 1
                if k.psi_length != rep.psi_length:
                    bad.append((g.name, ms.name, "Koszul", k.psi_length, rep.psi_length))
            if g.c == 1 and ms.name != "normalization":
                e = inv.ext1_truncated(g.algebra, g.structure, ms.module)
                compared += 1
                if not e.stabilized or e.length != rep.psi_length:
                    bad.append((g.name, ms.name, "Ext1", e.length, e.stabilized, rep.psi_length))
    _finish(5, bad, f"{compared} comparisons")


def test_criterion_6_pairing_bounds():
    members, rng = corpus(150, SEED + 6)
    bad, n = [], 0
    for g in members:
        reports = [inv.congruence_module(g.algebra, g.structure, ms.module) for ms in module_samples(g, rng)]
        if g.tags["regular"]:
            reports.append(inv.koszul_regular(g.algebra, g.structure))
        for rep in reports:
            n += 1
            if not rep.pairing_bounds_hold():
                bad.append((g.name, rep.eta_valuation, rep.psi_length, rep.rank_lambda))
    _finish(6, bad, f"{n} reports")


def test_criterion_7_descent():
    members, rng = corpus(150, SEED + 7)
    bad, n = [], 0
    for g in members:
        if g.c == 0:
            continue
        A, L = g.algebra, g.structure
        _, ck = inv.wedge_iota_star(A)
        phi0 = inv.fiber_cotangent(fiber_algebra(L)).length()
        if phi0 - inv.phi_length(A) != ck:
            bad.append((g.name, "Phi"))
        for ms in module_samples(g, rng):
            rep = inv.congruence_module(A, L, ms.module)
            if rep.eta_valuation is None:
                continue
            n += 1
            if rep.eta_fiber != rep.eta_valuation + ck:
                bad.append((g.name, ms.name, "eta"))
    _finish(7, bad, f"{n} Lambda-structured reports")


def test_criterion_8_injectivity():
    members, rng = corpus(150, SEED + 8)
    bad, n = [], 0
    for g in members:
        A0 = fiber_algebra(g.structure)
        for ms in module_samples(g, rng):
            n += 1
            if not inv.congruence_map(A0, ms.module.fiber()).is_injective():
                bad.append((g.name, ms.name))
            try:
                inv.congruence_module(g.algebra, g.structure, ms.module)
            except InvariantViolation as exc:
                bad.append((g.name, ms.name, str(exc)))
    # outside the category the map is not injective, and the library refuses to proceed
    for kind, p in itertools.product(range(3), PRIMES):
        g = gen_non_member(kind, p)
        assert lambda_component_dim(fiber_algebra(g.structure)) != 1
    _finish(8, bad, f"{n} congruence maps")


def test_criterion_9_scope():
    # a scope statement: the number-theoretic inputs are not computed; their
    # algebraic skeleton is exercised by criteria 5 and 7
    for n in (5, 7):
        if n in RESULTS and not RESULTS[n][0]:
            record(9, False, f"criterion {n} failed")
            pytest.fail(f"criterion {n} failed")
    record(9, True, "out of scope; skeleton covered by criteria 5 and 7")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
