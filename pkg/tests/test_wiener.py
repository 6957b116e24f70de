import json

import numpy as np
import pytest

from jacobi_scatter.fourier import FourierSeries, fourier_coefficients
from jacobi_scatter.lattice import JacobiOperator
from jacobi_scatter.scattering import scattering_matrix
from jacobi_scatter.wiener import (
    membership_report,
    reports_to_json,
    reports_to_rows,
    verdict,
    wiener_inverse_check,
)


def test_verdict_rule():
    assert verdict([1e-3, 1e-5, 1e-7]) == "summable"
    assert verdict([0.0, 0.0, 0.0]) == "summable"
    assert verdict([1e-3, 1e-4, 2e-4]) == "inconclusive"
    assert verdict([1e-1, 1e-2, 1e-3]) == "inconclusive"
    # rounding-level wobble is not growth
    assert verdict([1e-13, 5e-13, 2e-13]) == "summable"
    assert verdict([np.nan, 0.0]) == "inconclusive"


def test_free_operator_trivial():
    reps = {r.quantity: r for r in membership_report(JacobiOperator(), 2, (64, 128))}
    T = reps["T"]
    assert T.norms[0] == pytest.approx([1.0, 1.0])
    assert all(t == 0.0 for l in T.tails for t in T.tails[l])
    assert all(r.all_summable for r in reps.values())


def test_single_site_norm_stable_under_doubling():
    op = JacobiOperator({}, {0: 0.5})
    norms = [fourier_coefficients(scattering_matrix(op, M).T).wiener_norm for M in (256, 512)]
    assert abs(norms[1] - norms[0]) < 1e-6


def test_single_site_all_summable():
    reps = membership_report(JacobiOperator({}, {0: 0.5}), 2, (256, 512, 1024))
    names = {r.quantity for r in reps}
    assert {"T", "R_plus", "R_minus", "T/dd(+1)", "Psit_plus[+1]", "phit_minus(n=5)"} <= names
    for r in reps:
        assert r.all_summable, r.quantity
        assert r.l_max == (1 if "/dd(" in r.quantity else 2)


def test_divided_differences_at_resonance(tuned):
    reps = {r.quantity: r for r in membership_report(tuned, 2, (256, 512, 1024))}
    for name in ("T/dd(+1)", "R_plus/dd(+1)", "R_minus/dd(+1)"):
        assert reps[name].all_summable
        assert reps[name].tails[1][-1] < 1e-4


def test_moment_order_caps_verdicts():
    reps = membership_report(JacobiOperator({}, {0: 0.5}), 3, (128, 256), moment_order=2)
    T = next(r for r in reps if r.quantity == "T")
    assert T.verdicts[3] == "inconclusive" and T.verdicts[2] == "summable"


def test_reports_reproducible_and_exportable(tuned):
    a = reports_to_json(membership_report(tuned, 1, (128, 256)))
    b = reports_to_json(membership_report(tuned, 1, (128, 256)))
    assert a == b
    rows = json.loads(a)
    assert set(rows[0]) == {"quantity", "l", "M", "wiener_norm", "tail_fraction", "verdict"}
    assert len(rows) == len(reports_to_rows(membership_report(tuned, 1, (128, 256))))


def test_needs_two_grids():
    with pytest.raises(ValueError):
        membership_report(JacobiOperator(), 1, (256,))


@pytest.mark.parametrize("c", [[0.2, 1.0, -0.3], [0.1j, 1.0, 0.0, 0.25]])
def test_wiener_inverse_bound(c):
    f = FourierSeries(c, -1)
    norm, bound = wiener_inverse_check(f)
    assert norm <= bound + 1e-6


def test_wiener_inverse_of_nonvanishing_function_is_summable():
    f = FourierSeries([0.3, 1.0], 0)  # 1 + 0.3 z never vanishes on the circle
    inv = fourier_coefficients(1.0 / f.on_grid(256).samples)
    assert inv.tail_fraction < 1e-12
    assert inv.wiener_norm == pytest.approx(1 / 0.7, rel=1e-10)
