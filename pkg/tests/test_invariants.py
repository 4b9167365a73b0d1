import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmodlab import invariants as inv
from cmodlab.algebra import direct_sum, parse_input, regular_module
from cmodlab.errors import (
    DependentResidues,
    HypothesisUntagged,
    InputError,
    TorsionResidue,
)
from cmodlab.generators import (
    FiberProductSpec,
    gen_ci,
    gen_fiber_product,
    gen_lambda,
    gen_power_series,
    module_samples,
    random_member,
)
from cmodlab.poly import Poly
from oracles import fiber_product_closed_form, phi_oracle, psi_eta_oracle_c0


def c1_text(p: int, m: int) -> str:
    return (f"p={p}\nlambda t\nfiber x\nrel x^2 - {p ** m}*x\n"
            f"[lambda-structure]\nbasis 1, x\nmult x*x = (0, {p ** m})\n")


def test_triple_fiber_product_report(data_dir):
    rep = inv.report_for(parse_input((data_dir / "triple_fiber_product.txt").read_text()))
    assert (rep.phi_length, rep.psi_length, rep.eta_valuation, rep.rank_lambda, rep.defect) == (2, 1, 1, 1, 1)
    assert rep.path == "C0Direct"


def test_lambda_report_is_zero():
    g = gen_lambda(3, 2)
    rep = inv.congruence_module(g.algebra, g.structure)
    assert (rep.phi_length, rep.psi_length, rep.defect, rep.rank_lambda) == (0, 0, 0, 1)


def test_c1_descent_example():
    d = parse_input(c1_text(2, 2))
    rep = inv.congruence_module(d.algebra, d.structure)
    assert (rep.phi_length, rep.psi_length, rep.eta_valuation, rep.defect) == (2, 2, 2, 0)
    assert rep.path == "LambdaDescent" and rep.wedge_length == 0


def test_power_series_descent():
    for k in (1, 3):
        g = gen_power_series(2, k)
        rep = inv.congruence_module(g.algebra, g.structure)
        assert rep.psi_fiber == k and rep.wedge_length == k and rep.psi_length == 0 and rep.phi_length == 0


@pytest.mark.parametrize("p", [2, 3, 5])
def test_fiber_products_against_closed_form(p):
    rng = random.Random(p)
    for _ in range(10):
        ms = tuple(rng.randint(1, 5) for _ in range(rng.randint(1, 4)))
        g = gen_fiber_product(FiberProductSpec(p, ms))
        rep = inv.congruence_module(g.algebra, g.structure)
        cf = fiber_product_closed_form(ms)
        assert (rep.phi_length, rep.psi_length, rep.defect) == (cf["phi"], cf["psi"], cf["defect"])
        assert rep.phi_length == phi_oracle(g.algebra)
        assert rep.psi_length == psi_eta_oracle_c0(g.structure)[0]


def test_random_members_against_oracles():
    rng = random.Random(2024)
    for _ in range(60):
        g = random_member(rng)
        rep = inv.congruence_module(g.algebra, g.structure)
        assert rep.phi_length == phi_oracle(g.algebra), g.text
        if g.c == 0:
            psi, eta = psi_eta_oracle_c0(g.structure)
            assert (rep.psi_length, rep.eta_valuation) == (psi, eta), g.text


def test_report_json_roundtrip():
    g = gen_fiber_product(FiberProductSpec(3, (2, 4), 1, (1, 2)))
    rep = inv.congruence_module(g.algebra, g.structure)
    text = rep.to_json()
    assert inv.InvariantReport.from_json(text) == rep
    assert text == inv.InvariantReport.from_json(text).to_json()
    assert rep.to_dict()["schema"] == "cmodlab/1"


def test_defect_identity_enforced():
    with pytest.raises(Exception):
        inv.InvariantReport(2, 1, 1, 1, 0, "C0Direct")


def test_congruence_map_injective_and_cokernel():
    g = gen_fiber_product(FiberProductSpec(2, (1, 2, 4)))
    from cmodlab.algebra import fiber_algebra

    A0 = fiber_algebra(g.structure)
    for ms in module_samples(g, random.Random(1)):
        cm = inv.congruence_map(A0, ms.module.fiber())
        assert cm.is_injective()
        assert cm.cokernel().length() == inv.congruence_module(g.algebra, g.structure, ms.module).psi_length


def test_module_samples_fiber_product():
    g = gen_fiber_product(FiberProductSpec(2, (1, 2, 4)))
    got = {ms.name: inv.congruence_module(g.algebra, g.structure, ms.module) for ms in module_samples(g)}
    assert got["A"].psi_length == 4 and got["A"].phi_length == 7
    assert (got["A+A"].psi_length, got["A+A"].rank_lambda, got["A+A"].eta_valuation) == (8, 2, 4)
    assert got["normalization"].psi_length == 0


def test_needs_structure_for_nontrivial_algebra():
    d = parse_input("p=2\nfiber x\nrel x^2 - 2*x\n")
    with pytest.raises(InputError):
        inv.congruence_module(d.algebra, d.structure)


def test_koszul_regular_matches_descent():
    for g in (gen_lambda(2, 2), gen_power_series(3, 2), gen_power_series(5, 1, 2)):
        A = regular_module(g.structure)
        for M in (A, direct_sum(A, A)):
            k = inv.koszul_regular(g.algebra, g.structure, M)
            d = inv.congruence_module(g.algebra, g.structure, M)
            assert k.psi_length == d.psi_length == 0
            assert k.path == "KoszulRegular"


def test_order_and_independence():
    d = parse_input(c1_text(2, 2))
    assert inv.order_of(d.algebra, "8*t") == 3
    assert inv.order_of(d.algebra, "t") == 0
    with pytest.raises(TorsionResidue):
        inv.order_of(d.algebra, "x")


def test_wedge_iota_star():
    g = gen_power_series(3, 4)
    _, ck = inv.wedge_iota_star(g.algebra)
    assert ck == 4


# -- deformations -------------------------------------------------------------


@pytest.mark.parametrize("elem, before, after, method", [
    ("8*t", (2, 2), (5, 5), "colon"),
    ("t", (2, 2), (2, 2), "descent"),
    ("t - 2*x", (2, 2), (2, 2), "colon"),
])
def test_deform_c1(elem, before, after, method):
    d = parse_input(c1_text(2, 2))
    res = inv.deform(d.algebra, d.structure, None, [elem])
    assert (res.before.phi_length, res.before.psi_length) == before
    assert (res.after.phi_length, res.after.psi_length) == after
    assert res.psi_method == method
    assert res.verified and res.after.defect == res.before.defect == 0


def test_deform_torsion_residue():
    d = parse_input(c1_text(2, 2))
    with pytest.raises(TorsionResidue):
        inv.deform(d.algebra, d.structure, None, ["x"])


def test_deform_too_many_elements():
    d = parse_input(c1_text(2, 2))
    with pytest.raises(DependentResidues):
        inv.deform(d.algebra, d.structure, None, ["t", "2*t"])


def test_deform_power_series():
    g = gen_power_series(2, 2)
    res = inv.deform(g.algebra, g.structure, None, ["3*t1"])
    assert (res.after.phi_length, res.after.psi_length) == (2, 2)
    assert res.verified


def test_deform_sequential_orders():
    g = gen_power_series(3, 1, 2)
    res = inv.deform(g.algebra, g.structure, None, ["t2 - 3*t1", "t1"])
    assert res.step.orders == (0, 1)
    assert res.verified


def test_deform_pair_uses_joint_order():
    # orders are taken successively, so t1 after t2 = t1 picks up the torsion of x2
    g = gen_ci(0, 2, 2)
    A = regular_module(g.structure)
    res = inv.deform(g.algebra, g.structure, A, ["t2 - t1", "t1"])
    assert res.verified
    assert res.after.phi_length - res.before.phi_length == sum(res.step.orders)


# -- comparisons ----------------------------------------------------------------


def test_defect_decomposition_fiber_product():
    g = gen_fiber_product(FiberProductSpec(2, (1, 2, 4)))
    for ms in module_samples(g):
        d = inv.defect_decomposition(g.algebra, g.structure, ms.module)
        assert d.delta_M == d.rank_lambda * d.delta_A + d.ker_a_length
        assert d.ker_a_length >= 0


def test_freeness_check():
    g = gen_fiber_product(FiberProductSpec(3, (1, 3)))
    samples = {ms.name: ms for ms in module_samples(g)}
    assert inv.freeness_check(g.algebra, g.structure, samples["A+A"].module) == "free-summand certified"
    assert inv.freeness_check(g.algebra, g.structure, samples["normalization"].module) == "no"
    assert inv.freeness_check(g.algebra, g.structure, samples["A"].module, gorenstein=False) == "hypothesis not asserted"


def _identity(g):
    pv = g.algebra.presentation_vars
    return inv.Surjection(g.algebra, g.structure, g.algebra, g.structure, {v: Poly.var(pv, v) for v in pv})


def test_iso_criteria():
    g = gen_fiber_product(FiberProductSpec(2, (1, 2)))
    phi = _identity(g)
    assert inv.iso_criteria_check(phi, "gorenstein") == "isomorphism certified"
    with pytest.raises(HypothesisUntagged):
        inv.iso_criteria_check(phi, None)
    assert inv.iso_criteria_check(phi, "ci", {"ci": False}) == "hypothesis rejected"


def test_invariance_of_domain_fiber_product():
    src = gen_fiber_product(FiberProductSpec(2, (1, 2, 3)))
    tgt = gen_fiber_product(FiberProductSpec(2, (1, 2)))
    pv_s, pv_t = src.algebra.presentation_vars, tgt.algebra.presentation_vars
    images = {v: (Poly(pv_t) if v == "x3" else Poly.var(pv_t, v)) for v in pv_s}
    phi = inv.Surjection(src.algebra, src.structure, tgt.algebra, tgt.structure, images)
    for ms in module_samples(tgt):
        same, over_src, over_tgt = inv.invariance_check(phi, ms.module)
        assert same, ms.name


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.lists(st.integers(1, 5), min_size=1, max_size=4), st.integers(0, 1))
def test_fiber_product_property(p, ms, c):
    lift = tuple(range(1, len(ms) + 1)) if c else ()
    g = gen_fiber_product(FiberProductSpec(p, tuple(ms), c, lift))
    rep = inv.congruence_module(g.algebra, g.structure)
    assert rep.phi_length == g.oracle["phi"]
    assert rep.psi_length == g.oracle["psi"]
    assert rep.defect == sum(ms) - max(ms)
    assert rep.pairing_bounds_hold()
