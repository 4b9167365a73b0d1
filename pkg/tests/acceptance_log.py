"""Shared record of acceptance outcomes, printed by the conftest summary hook."""

RESULTS: dict[int, tuple[bool, str]] = {}

TITLES = {
    1: "fiber-product closed forms",
    2: "CI defect vanishes",
    3: "regularity tri-equivalence",
    4: "deformation identities",
    5: "cross-path agreement",
    6: "pairing bounds",
    7: "Lambda-descent identities",
    8: "injectivity of the congruence map",
    9: "number-theoretic results out of scope",
}


def record(n: int, ok: bool, note: str) -> None:
    RESULTS[n] = (ok, note)


def summary_lines() -> list[str]:
    lines = []
    for n, title in TITLES.items():
        if n not in RESULTS:
            lines.append(f"criterion {n}: NOT RUN  {title}")
            continue
        ok, note = RESULTS[n]
        lines.append(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  ({note})")
    return lines
