import math

import numpy as np
import pytest

from qthresh.evaluate import (
    ClosedFormEvaluator,
    ExactEvaluator,
    MonteCarloEvaluator,
    exact_probability,
)
from qthresh.functions import (
    build_tribes,
    constant_function,
    from_table,
    indicator,
    random_zero_monotone,
)
from qthresh.measures import SimplexMeasure, central_measure, mix_t
from qthresh.threshold import (
    METHOD_BISECTION,
    METHOD_GRID_SCAN,
    METHOD_MC_BISECTION,
    ThresholdReport,
    cross_section_scan,
    derivative_lower_bound_ratio,
    line_width,
    region_measure,
    rm_derivative_exact,
    sweep_scaling,
)


CENTRAL3 = central_measure(3)
EXACT = ExactEvaluator()


def fd_derivative(f, base, t, dt=1e-6):
    lo = exact_probability(f, mix_t(base, t - dt), 1).value
    hi = exact_probability(f, mix_t(base, t + dt), 1).value
    return (hi - lo) / (2 * dt)


def dictator_indicator(q=3, n=3):
    tbl = (np.arange(q**n) // q ** (n - 1) >= 1).astype(np.int32)
    return from_table(q, n, tbl, kind="indicator")


# ---------------------------------------------------------------------------
# Derivative identity


def test_rm_derivative_constant_function_is_zero():
    f = constant_function(3, 3, 1, kind="indicator")
    for t in (0.0, 0.3, 0.9):
        assert rm_derivative_exact(f, CENTRAL3, t) == 0.0


def test_rm_derivative_matches_finite_differences():
    f = indicator(build_tribes(3, 4, 0.5, r=2), 0)
    for base in (CENTRAL3, SimplexMeasure((0.0, 0.3, 0.7))):
        for t in (0.1, 0.4, 0.75):
            exact = rm_derivative_exact(f, base, t)
            approx = fd_derivative(f, base, t)
            assert exact == pytest.approx(approx, rel=1e-6)


def test_rm_derivative_dictator_closed_form():
    # Pr[f = 1] = 1 - t along the line, derivative is identically -(-1) ... no:
    # the indicator of x_0 >= 1 has Pr = 1 - t, so d/dt = -1; 0-monotone
    # indicators of the *zero* event instead increase.  Use the dead-tribe
    # indicator of a single block of size 1 on one coordinate: Pr = t.
    tbl = np.zeros(3, dtype=np.int32)
    tbl[0] = 1
    f = from_table(3, 1, tbl, kind="indicator")  # 1 iff x_0 == 0
    for t in (0.0, 0.25, 0.6, 0.9):
        assert rm_derivative_exact(f, CENTRAL3, t) == pytest.approx(1.0, rel=1e-12)


def test_rm_derivative_rejects_bad_inputs():
    f = indicator(build_tribes(3, 4, 0.5, r=2), 0)
    with pytest.raises(ValueError):
        rm_derivative_exact(f, CENTRAL3, 1.0)  # divides by 1 - t
    with pytest.raises(ValueError):
        rm_derivative_exact(f, SimplexMeasure((0.2, 0.4, 0.4)), 0.5)  # off the zero face


# ---------------------------------------------------------------------------
# Derivative benchmark diagnostic


def test_derivative_lower_bound_ratio_fields():
    f = indicator(build_tribes(3, 6, 0.5, r=2), 0)
    diag = derivative_lower_bound_ratio(f, CENTRAL3, 0.5)
    assert diag.n == 6
    assert diag.alpha == 0.5
    assert diag.derivative == pytest.approx(rm_derivative_exact(f, CENTRAL3, 0.5), abs=0)
    p = exact_probability(f, mix_t(CENTRAL3, 0.5), 1).value
    expected_den = p * (1 - p) * math.log(6) / math.log(2)
    assert diag.denominator == pytest.approx(expected_den, rel=1e-15)
    assert diag.ratio == pytest.approx(diag.derivative / expected_den, rel=1e-15)


def test_derivative_lower_bound_ratio_degenerate_cases():
    f = constant_function(3, 3, 0, kind="indicator")
    diag = derivative_lower_bound_ratio(f, CENTRAL3, 0.2)
    assert diag.denominator == 0.0
    assert diag.ratio is None

    with pytest.raises(ValueError):
        # alpha = 0: a rest symbol carries no mass
        g = indicator(build_tribes(3, 4, 0.5, r=2), 0)
        derivative_lower_bound_ratio(g, SimplexMeasure((0.0, 1.0, 0.0)), 0.2)


def test_derivative_lower_bound_ratio_alpha_one_binary():
    # q = 2 central measure has alpha = 1, so ln(1/alpha) = 0
    tbl = np.array([1, 0], dtype=np.int32)
    f = from_table(2, 1, tbl, kind="indicator")
    diag = derivative_lower_bound_ratio(f, central_measure(2), 0.3)
    assert diag.denominator == math.inf
    assert diag.ratio is None


# ---------------------------------------------------------------------------
# Line widths, deterministic path


def test_line_width_dictator():
    # indicator of x_0 == 0 climbs linearly: Pr = t, so width is 1 - 2 eps
    tbl = np.zeros(27, dtype=np.int32)
    tbl[:9] = 1
    f = from_table(3, 3, tbl, kind="indicator")
    rep = line_width(f, CENTRAL3, 1, 0.1, EXACT)
    assert rep.method == METHOD_BISECTION
    assert rep.t_lo == pytest.approx(0.1, abs=1e-8)
    assert rep.t_hi == pytest.approx(0.9, abs=1e-8)
    assert rep.width == pytest.approx(0.8, abs=2e-8)
    assert not rep.lo_absent and not rep.hi_absent


def test_line_width_tribes_closed_vs_exact():
    f = build_tribes(3, 6, 0.5, r=2)
    rep_closed = line_width(f, CENTRAL3, 0, 0.1, ClosedFormEvaluator())
    rep_exact = line_width(f, CENTRAL3, 0, 0.1, EXACT)
    assert rep_closed.width == pytest.approx(rep_exact.width, abs=1e-8)
    assert rep_closed.t_lo == pytest.approx(rep_exact.t_lo, abs=1e-8)


def test_line_width_t_tol_controls_precision():
    f = build_tribes(3, 8, 0.5, r=2)
    coarse = line_width(f, CENTRAL3, 0, 0.1, ClosedFormEvaluator(), t_tol=1e-3)
    fine = line_width(f, CENTRAL3, 0, 0.1, ClosedFormEvaluator(), t_tol=1e-10)
    assert coarse.t_lo == pytest.approx(fine.t_lo, abs=2e-3)
    assert abs(coarse.width - fine.width) <= 4e-3


def test_line_width_absent_crossings():
    # a constant-0 indicator never reaches eps: zero width, both ends absent
    f = constant_function(3, 3, 0, kind="indicator")
    rep = line_width(f, CENTRAL3, 1, 0.1, EXACT)
    assert rep.width == 0.0
    assert rep.lo_absent and rep.hi_absent
    assert rep.t_lo is None and rep.t_hi is None


def test_line_width_partial_band():
    # Pr[tribes = 0] at t = 0 is already positive for small blocks; with a
    # large eps the lower crossing can be absent while the upper one exists
    f = build_tribes(3, 2, 0.5, r=2)  # single block of 2: Pr = t^2 ... at the
    # central line Pr[f=0] = t^2 which starts at 0; use a=1 instead:
    rep = line_width(f, CENTRAL3, 0, 0.05, EXACT)
    assert rep.t_lo is not None
    assert rep.t_hi is not None
    assert rep.width == pytest.approx(math.sqrt(0.95) - math.sqrt(0.05), abs=1e-7)


def test_line_width_grid_scan_fallback():
    # Pr[f = 1] for the full tribes family is not monotone along the line:
    # it rises from near 0 and then dies as the zero event takes over
    f = build_tribes(3, 6, 0.5, r=2)
    rep = line_width(f, CENTRAL3, 1, 0.2, EXACT)
    assert rep.method == METHOD_GRID_SCAN
    assert 0.0 <= rep.width <= 1.0


def test_line_width_rejections():
    f = build_tribes(3, 4, 0.5, r=2)
    with pytest.raises(ValueError):
        line_width(f, CENTRAL3, 0, 0.6, EXACT)
    with pytest.raises(ValueError):
        line_width(f, CENTRAL3, 3, 0.1, EXACT)
    with pytest.raises(ValueError):
        line_width(f, SimplexMeasure((0.1, 0.45, 0.45)), 0, 0.1, EXACT)
    with pytest.raises(ValueError):
        line_width(f, CENTRAL3, 0, 0.1, EXACT, t_tol=0.0)
    with pytest.raises(ValueError):
        line_width(f, CENTRAL3, 0, 0.1, EXACT, grid_points=2)


# ---------------------------------------------------------------------------
# Line widths, Monte Carlo path


def test_line_width_mc_matches_closed_form():
    f = build_tribes(3, 64, 0.5, r=4)
    truth = line_width(f, CENTRAL3, 0, 0.1, ClosedFormEvaluator())
    ev = MonteCarloEvaluator(samples=2000, seed=31)
    rep = line_width(f, CENTRAL3, 0, 0.1, ev)
    assert rep.method == METHOD_MC_BISECTION
    assert rep.t_tol >= 1e-4
    assert rep.width == pytest.approx(truth.width, abs=0.02)


def test_line_width_mc_deterministic_replay():
    f = build_tribes(3, 64, 0.5, r=4)
    rep1 = line_width(f, CENTRAL3, 0, 0.1, MonteCarloEvaluator(samples=2000, seed=8))
    rep2 = line_width(f, CENTRAL3, 0, 0.1, MonteCarloEvaluator(samples=2000, seed=8))
    assert rep1 == rep2


# ---------------------------------------------------------------------------
# Cross sections


# the sheet base must vanish at symbol 0 and at the direction symbol
SHEET_BASE = SimplexMeasure((0.0, 0.0, 1.0))


def test_cross_section_constant_function_zero_area():
    f = constant_function(3, 3, 0, kind="indicator")
    area = cross_section_scan(f, SHEET_BASE, 1, 1, 0.1, np.linspace(0, 1, 5), EXACT)
    assert area == 0.0


def test_cross_section_area_bounds():
    f = indicator(build_tribes(3, 6, 0.5, r=2), 0)
    s_grid = np.linspace(0.0, 1.0, 9)
    area = cross_section_scan(f, SHEET_BASE, 1, 1, 0.1, s_grid, EXACT)
    assert 0.0 < area < 1.0
    # refining the s grid moves the estimate only slightly
    finer = cross_section_scan(f, SHEET_BASE, 1, 1, 0.1, np.linspace(0.0, 1.0, 17), EXACT)
    assert area == pytest.approx(finer, abs=0.02)


def test_cross_section_rejects_bad_grid():
    f = indicator(build_tribes(3, 4, 0.5, r=2), 0)
    with pytest.raises(ValueError):
        cross_section_scan(f, SHEET_BASE, 1, 1, 0.1, [0.5], EXACT)
    with pytest.raises(ValueError):
        cross_section_scan(f, SHEET_BASE, 1, 1, 0.1, [0.0, 0.0, 1.0], EXACT)
    with pytest.raises(ValueError):
        cross_section_scan(f, SHEET_BASE, 1, 1, 0.1, [0.0, 1.5], EXACT)
    with pytest.raises(ValueError):
        # base carrying mass at the direction symbol is rejected
        cross_section_scan(f, CENTRAL3, 1, 1, 0.1, [0.0, 1.0], EXACT)


# ---------------------------------------------------------------------------
# Region measure


def test_region_measure_constant_function():
    f = constant_function(3, 4, 0, kind="indicator")
    est = region_measure(f, 1, 0.1, samples=500, seed=3, evaluator=EXACT)
    assert est.fraction == 0.0
    assert est.std_error == pytest.approx(3.0 / 500, abs=0)


def test_region_measure_deterministic():
    f = build_tribes(3, 32, 0.5, r=4)
    ev = ClosedFormEvaluator()
    e1 = region_measure(f, 0, 0.1, samples=2000, seed=11, evaluator=ev)
    e2 = region_measure(f, 0, 0.1, samples=2000, seed=11, evaluator=ev)
    assert e1 == e2
    e3 = region_measure(f, 0, 0.1, samples=2000, seed=12, evaluator=ev)
    assert e1.fraction != e3.fraction


def test_region_measure_batch_and_scalar_agree():
    f = build_tribes(3, 6, 0.5, r=2)
    with_batch = region_measure(f, 0, 0.1, samples=400, seed=5, evaluator=ClosedFormEvaluator())
    scalar_only = region_measure(f, 0, 0.1, samples=400, seed=5, evaluator=EXACT)
    assert with_batch.fraction == pytest.approx(scalar_only.fraction, abs=0)


def test_region_measure_matches_analytic_small_case():
    # single block of size 1 on one coordinate: Pr[f = 0] = mu(0), and the
    # atom-0 marginal of the uniform simplex measure is Beta(1, q-1), so the
    # band probability is (1 - eps)^(q-1) - eps^(q-1)
    f = build_tribes(3, 1, 0.5, r=1)
    est = region_measure(f, 0, 0.1, samples=40000, seed=19, evaluator=EXACT)
    analytic = 0.9**2 - 0.1**2
    assert abs(est.fraction - analytic) <= 4 * est.std_error


def test_region_measure_rejections():
    f = build_tribes(3, 4, 0.5, r=2)
    with pytest.raises(ValueError):
        region_measure(f, 0, 0.1, samples=0, seed=1, evaluator=EXACT)
    with pytest.raises(ValueError):
        region_measure(f, 4, 0.1, samples=10, seed=1, evaluator=EXACT)


# ---------------------------------------------------------------------------
# Scaling sweep


def test_sweep_scaling_rows():
    rows = sweep_scaling(3, 0.5, [1024, 256], 0.1)
    assert [r.n for r in rows] == [256, 1024]  # sorted
    assert rows[0].r == 4 and rows[1].r == 6
    for row in rows:
        assert 0.0 < row.p_lo < row.p_hi < 1.0
        assert row.width == pytest.approx(row.p_hi - row.p_lo, abs=1e-12)
        assert row.width_times_ln_n == pytest.approx(row.width * math.log(row.n), abs=0)


def test_sweep_scaling_widths_decrease():
    rows = sweep_scaling(3, 0.5, [2**10, 2**12, 2**14], 0.1)
    widths = [r.width for r in rows]
    assert widths[0] > widths[1] > widths[2]


def test_sweep_scaling_frozen_values():
    rows = sweep_scaling(3, 0.5, [1024, 4096, 16384], 0.1)
    assert [r.r for r in rows] == [6, 8, 10]
    assert rows[0].width == pytest.approx(0.19587081670761108, abs=1e-12)
    assert rows[1].width == pytest.approx(0.16266521718353033, abs=1e-12)
    assert rows[2].width == pytest.approx(0.13759851828217506, abs=1e-12)


def test_sweep_scaling_duplicate_n_identical():
    rows = sweep_scaling(3, 0.5, [512, 512], 0.1)
    assert rows[0] == rows[1]


def test_sweep_scaling_empty():
    assert sweep_scaling(3, 0.5, [], 0.1) == []


def test_threshold_report_is_plain_record():
    rep = ThresholdReport(
        eps=0.1, a=0, t_lo=0.2, t_hi=0.7, width=0.5, method=METHOD_BISECTION,
        grid_points=101, t_tol=1e-9, lo_absent=False, hi_absent=False,
    )
    assert rep.width == 0.5
