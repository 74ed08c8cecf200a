"""Acceptance criteria at their stated sizes and tolerances.

Each test runs one verification suite from ``shapegeo.verify`` with full
sample counts and the default seed, then records one PASS/FAIL line.
"""

import pytest

from shapegeo import verify as vf

SUITES = {
    1: ("closed-form Laplacian of log lambda vs Richardson FD", "shirt_laplacian"),
    2: ("shirt curvature sign, origin zero and flat ends", "shirt_curvature"),
    3: ("cylinder end circumferences 2 pi/sqrt2 and 2 pi", "cylinder_ends"),
    4: ("collinear Laplacian(log U) certificate, FD oracle, K < 0 on T", "collinear"),
    5: ("JM geodesics vs projected Newton orbits, with J != 0 control", "jm_newton"),
    6: ("boundary fall asymptotics and linear landing scaling", "asymptotics"),
    7: ("boundary-to-boundary shooting, uniqueness proxy, runtime", "shooting"),
    8: ("Gauss-Bonnet closure on geodesic triangles", "gauss_bonnet"),
    9: ("syzygy dictionary, reduction fixtures, tolerance stability", "syzygy"),
    10: ("roundtrips, H drift and virial identity", "roundtrips"),
}


def _detail(cases):
    bad = [c for c in cases if c.status != "pass"]
    shown = bad or cases
    parts = [f"{c.case}: {c.measured:.3g} vs {c.tolerance:.3g}" for c in shown[:4]]
    return "; ".join(parts) + (" ..." if len(shown) > 4 else "")


@pytest.mark.parametrize("number", sorted(SUITES))
def test_criterion(number, acceptance_record):
    title, suite = SUITES[number]
    cases = vf.suites()[suite]()
    passed = all(c.status == "pass" for c in cases)
    acceptance_record(number, title, passed, _detail(cases))
    assert passed, "\n".join(str(c.as_dict()) for c in cases if c.status != "pass")
