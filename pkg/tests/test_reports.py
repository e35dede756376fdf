import numpy as np

from carnot.reports import (
    CheckReport,
    decide_verdict,
    heavy_tail_fraction,
)


def test_one_sided_verdict_rule():
    # holds iff margin >= -4 stderr
    assert decide_verdict(0.5, 0.1) == "holds"
    assert decide_verdict(-0.39, 0.1) == "holds"
    assert decide_verdict(-0.41, 0.1) == "violated"
    # below the threshold but inside the absolute floor: inconclusive
    assert decide_verdict(-5e-10, 1e-12) == "inconclusive"
    assert decide_verdict(-5e-9, 1e-12) == "violated"


def test_two_sided_verdict_rule():
    assert decide_verdict(0.39, 0.1, two_sided=True) == "holds"
    assert decide_verdict(-0.39, 0.1, two_sided=True) == "holds"
    assert decide_verdict(0.41, 0.1, two_sided=True) == "violated"
    assert decide_verdict(-0.41, 0.1, two_sided=True) == "violated"


def test_zero_stderr_exact_checks():
    assert decide_verdict(0.0, 0.0) == "holds"
    assert decide_verdict(1.0, 0.0) == "holds"
    assert decide_verdict(-1.0, 0.0) == "violated"


def test_from_margin_records_z_and_notes():
    rep = CheckReport.from_margin("demo", lhs=1.0, rhs=2.0, stderr=0.5)
    assert rep.margin == 1.0 and rep.z == 2.0 and rep.verdict == "holds"
    rep = CheckReport.from_margin("demo", lhs=2.0, rhs=1.0, stderr=0.1,
                                  heavy_tail=True)
    assert rep.verdict == "inconclusive"
    assert any("heavy tail" in note for note in rep.notes)
    d = rep.as_dict()
    assert {"lhs", "rhs", "margin", "stderr", "z", "verdict"} <= set(d)


def test_heavy_tail_fraction():
    flat = np.ones(10_000)
    assert heavy_tail_fraction(flat) < 0.005
    spiked = flat.copy()
    spiked[0] = 1e7
    assert heavy_tail_fraction(spiked) > 0.9
    assert heavy_tail_fraction(np.zeros(100)) == 0.0
