import random

import pytest

from cmodlab import invariants as inv
from cmodlab.algebra import consistency_check, parse_input
from cmodlab.generators import (
    FiberProductSpec,
    gen_ci,
    gen_fiber_product,
    gen_non_member,
    gen_power_series,
    random_member,
)
from oracles import phi_oracle


def test_generated_text_reparses():
    rng = random.Random(9)
    for _ in range(30):
        g = random_member(rng)
        again = parse_input(g.text)
        assert again.algebra == g.algebra


def test_ci_seed_is_deterministic():
    assert gen_ci(42, 2, 2).text == gen_ci(42, 2, 2).text


@pytest.mark.parametrize("c, size", [(0, 1), (1, 1), (1, 2), (2, 2)])
def test_ci_members_consistent_with_zero_defect(c, size):
    for seed in range(8):
        g = gen_ci(seed, c, size)
        assert consistency_check(g.algebra, g.structure).passed
        rep = inv.congruence_module(g.algebra, g.structure)
        assert rep.defect == 0
        assert rep.phi_length == phi_oracle(g.algebra)


def test_fiber_product_spec_validation():
    with pytest.raises(ValueError):
        FiberProductSpec(2, ())
    with pytest.raises(ValueError):
        FiberProductSpec(2, (1, 2), 1, (1,))


def test_fiber_product_oracle_fields():
    g = gen_fiber_product(FiberProductSpec(5, (2, 3, 1)))
    assert g.oracle == {"phi": 6, "psi": 3, "defect": 3, "wedge": 0}
    assert g.tags["r"] == 3 and not g.tags["ci"]


def test_power_series_wedge_oracle():
    g = gen_power_series(2, 5)
    _, ck = inv.wedge_iota_star(g.algebra)
    assert ck == g.oracle["wedge"] == 5


def test_non_members_are_tagged():
    for kind in range(3):
        assert not gen_non_member(kind, 3).tags["member"]
