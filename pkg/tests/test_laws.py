import dataclasses

import pytest

from cmodlab import invariants as inv
from cmodlab import laws
from cmodlab.laws import LAW_IDS, parse_law_ids, run_law, run_laws


@pytest.mark.parametrize("law", LAW_IDS)
def test_law_passes_small_corpus(law):
    res = run_law(law, seed=3, samples=25)
    assert res.samples == 25
    assert res.checks >= 25 or law == "L2" and res.checks == 25
    assert res.status == "pass", res.failures[:3]


def test_laws_are_deterministic():
    a = run_law("L4", seed=11, samples=15).to_dict()
    b = run_law("L4", seed=11, samples=15).to_dict()
    assert a == b


def test_parse_law_ids():
    assert parse_law_ids("L1-L3,L7") == ["L1", "L2", "L3", "L7"]
    assert parse_law_ids("all") == list(LAW_IDS)
    for bad in ("L99", "L0", "X1", "L3-L13"):
        with pytest.raises(KeyError):
            parse_law_ids(bad)


def test_failures_carry_witnesses(monkeypatch):
    real = inv.congruence_module

    def broken(A, L=None, M=None):
        rep = real(A, L, M)
        if rep.psi_length == 0 and rep.rank_lambda:
            # pretend Psi(A) vanished less than it did
            return dataclasses.replace(rep, psi_length=1, defect=rep.defect - 1)
        return rep

    monkeypatch.setattr(inv, "congruence_module", broken)
    res = run_law("L2", seed=1, samples=30)
    assert res.status == "fail"
    w = res.failures[0]
    assert w["input"].startswith("p=") and "phi=0, psi=0, regular" in w["detail"]


def test_run_laws_order_and_jobs():
    seq = run_laws(["L2", "L11"], seed=5, samples=5)
    assert [r.law for r in seq] == ["L2", "L11"]
    par = run_laws(["L2", "L11"], seed=5, samples=5, jobs=2)
    assert [r.to_dict() for r in par] == [r.to_dict() for r in seq]


def test_deformation_law_counts_verified_triples():
    res = run_law("L9", seed=7, samples=100)
    assert res.status == "pass"
    # four identities per triple
    assert res.checks == 4 * res.samples
