import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmodlab import modp
from cmodlab import invariants as inv
from cmodlab.algebra import TruncationContext, parse_input
from cmodlab.errors import NotRegularCase, PrecisionExhausted
from cmodlab.generators import gen_lambda, gen_power_series
from cmodlab.truncated import SweepResult, sweep
from oracles import torsion_length


def c1(p, m, extra=""):
    return parse_input(f"p={p}\nlambda t\nfiber x\nrel x^2 - {p ** m}*x{extra}\n"
                       f"[lambda-structure]\nbasis 1, x\nmult x*x = (0, {p ** m})\n")


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(2, 4), st.integers(1, 4), st.integers(1, 4), st.data())
def test_cokernel_exponents_match_sympy(p, N, m, n, data):
    q = p ** N
    rows = data.draw(st.lists(st.lists(st.integers(0, q - 1), min_size=n, max_size=n), min_size=m, max_size=m))
    a = modp.as_mod_array(rows, q, (m, n))
    exps = modp.cokernel_exponents(a, p, N)
    # over Z/p^N the cokernel is (Z/p^N)^m / image: add p^N I to the relations
    stacked = [list(r) for r in zip(*rows)] + [[q if i == j else 0 for j in range(m)] for i in range(m)]
    assert sum(exps) == torsion_length(stacked, p)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 5]), st.integers(1, 4), st.integers(1, 4), st.data())
def test_kernel_generators_are_kernel(p, m, n, data):
    N = 3
    q = p ** N
    rows = data.draw(st.lists(st.lists(st.integers(0, q - 1), min_size=n, max_size=n), min_size=m, max_size=m))
    a = modp.as_mod_array(rows, q, (m, n))
    K = modp.kernel_generators(a, p, N)
    assert not (a.dot(K) % q).any()
    # counting: |ker| = q^n / |image| and the kernel generators span a group of that size
    img = sum(N - e for e in modp.smith_mod(a, p, N, track_v=False).exponents)
    ker_size = n * N - img
    got = n * N - sum(modp.cokernel_exponents(K, p, N)) if K.shape[1] else 0
    assert got == ker_size


def test_int64_and_object_paths_agree():
    rng = np.random.default_rng(0)
    rows = rng.integers(0, 50, size=(6, 5)).tolist()
    small = modp.cokernel_exponents(modp.as_mod_array(rows, 3 ** 10, (6, 5)), 3, 10)
    big = modp.cokernel_exponents(modp.as_mod_array(rows, 3 ** 30, (6, 5)), 3, 30)
    assert [e for e in small if e < 10] == [e for e in big if e < 10]


def test_sweep_stabilizes_and_escalates():
    calls = []

    def est(N, D):
        calls.append((N, D))
        return (3, False) if N >= 24 else (2, False)

    res = sweep(est, TruncationContext())
    assert isinstance(res, SweepResult)
    assert tuple(res) == (3, True)
    assert calls == [(20, 8), (24, 12), (28, 16)]


def test_sweep_exhausted_carries_rows():
    with pytest.raises(PrecisionExhausted) as info:
        sweep(lambda N, D: (N, True), TruncationContext(4, 4))
    assert len(info.value.result.rows) == 4
    assert not info.value.result.stabilized


@pytest.mark.parametrize("p, m", [(2, 1), (2, 2), (3, 1), (5, 3)])
def test_ext1_matches_descent_c1(p, m):
    d = c1(p, m)
    res = inv.ext1_truncated(d.algebra, d.structure)
    assert res.stabilized and res.length == m == inv.congruence_module(d.algebra, d.structure).psi_length


def test_ext1_lambda_and_power_series():
    g = gen_lambda(3, 1)
    assert tuple(inv.ext1_truncated(g.algebra, g.structure)) == (0, True)
    g = gen_power_series(3, 2)
    assert tuple(inv.ext1_truncated(g.algebra, g.structure)) == (0, True)


def test_ext1_with_lambda_in_relation():
    d = parse_input("p=2\nlambda t\nfiber x\nrel x^2 - 4*x - 2*t\n"
                    "[lambda-structure]\nbasis 1, x\nmult x*x = (2*t, 4)\n")
    res = inv.ext1_truncated(d.algebra, d.structure)
    assert res.stabilized and res.length == inv.congruence_module(d.algebra, d.structure).psi_length == 1


def test_ext1_needs_c1():
    g = gen_lambda(2, 2)
    with pytest.raises(NotRegularCase):
        inv.ext1_truncated(g.algebra, g.structure)


def test_high_exponent_exhausts_small_precision():
    d = c1(2, 20)
    with pytest.raises(PrecisionExhausted):
        inv.ext1_truncated(d.algebra, d.structure, ctx=TruncationContext(4, 8))
