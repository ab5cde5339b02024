"""Threshold locations, widths, and derivative identities along simplex lines.

The central object is the line from a zero-face base measure toward the
point mass at symbol 0.  For a 0-monotone indicator the output probability
is nondecreasing along that line, its derivative has an exact fibre-sum
expression, and the threshold width is the stretch of the line where the
probability crosses from eps to 1 - eps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .evaluate import ClosedFormEvaluator, exact_probability
from .functions import DEFAULT_CAP, FunctionSpec, build_tribes
from .influence import phi_k
from .measures import (
    SimplexMeasure,
    central_measure,
    mix_st,
    mix_t,
    require_zero_face,
    sample_uniform_batch,
    second_smallest_atom,
)

METHOD_BISECTION = "bisection"
METHOD_GRID_SCAN = "grid-scan"
METHOD_MC_BISECTION = "mc-bisection"
METHOD_MC_GRID_SCAN = "mc-grid-scan"

_MC_COARSE_POINTS = 33
_MC_T_TOL = 1e-4


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 < eps < 0.5:
        raise ValueError(f"eps must lie strictly inside (0, 0.5), got {eps!r}")
    return eps


def rm_derivative_exact(f: FunctionSpec, base: SimplexMeasure, t: float, cap: int = DEFAULT_CAP) -> float:
    """Exact d/dt Pr[f = 1] along mix_t(base, t) for 0-monotone indicators.

    Equals sum_k E[ 1[fibre nonconstant] (1 - fibre mean) ] / (1 - t) under
    the mixed measure; an identity, not an approximation, so finite
    differences of the exact probability must reproduce it to rounding.
    """
    require_zero_face(base)
    t = float(t)
    if not 0.0 <= t < 1.0:
        raise ValueError(f"t must lie in [0, 1); the identity divides by 1 - t, got {t!r}")
    mu_t = mix_t(base, t)
    total = math.fsum(phi_k(f, mu_t, k, cap) for k in range(f.n))
    return total / (1.0 - t)


@dataclass(frozen=True)
class DerivativeDiagnostic:
    """One probe of the derivative against its influence-style benchmark.

    ``denominator`` is E(1-E) ln(n) / ln(1/alpha) with E the output
    probability at t and alpha the smallest nonzero-symbol atom of the base;
    ``ratio`` is derivative/denominator, None when the benchmark degenerates
    (constant f, n = 1, or alpha = 1).
    """

    n: int
    t: float
    alpha: float
    derivative: float
    denominator: float
    ratio: float | None


def derivative_lower_bound_ratio(
    f: FunctionSpec, base: SimplexMeasure, t: float, cap: int = DEFAULT_CAP
) -> DerivativeDiagnostic:
    require_zero_face(base)
    alpha = second_smallest_atom(base)
    if alpha == 0.0:
        raise ValueError("benchmark needs every symbol 1..q-1 to carry mass (alpha > 0)")
    derivative = rm_derivative_exact(f, base, t, cap)
    prob = exact_probability(f, mix_t(base, t), 1, cap).value
    log_inv_alpha = math.log(1.0 / alpha)
    if log_inv_alpha > 0.0:
        denominator = prob * (1.0 - prob) * math.log(f.n) / log_inv_alpha
    else:
        denominator = math.inf
    ratio = derivative / denominator if 0.0 < denominator < math.inf else None
    return DerivativeDiagnostic(
        n=f.n, t=float(t), alpha=alpha, derivative=derivative, denominator=denominator, ratio=ratio
    )


@dataclass(frozen=True)
class ThresholdReport:
    """Where the output probability crosses eps and 1 - eps along a line.

    ``t_lo``/``t_hi`` are the crossing positions, None when the probability
    already starts above eps (or ends below 1 - eps), in which case the
    width counts only the achieved stretch of [eps, 1 - eps].
    """

    eps: float
    a: int
    t_lo: float | None
    t_hi: float | None
    width: float
    method: str
    grid_points: int
    t_tol: float
    lo_absent: bool
    hi_absent: bool


def _bisect_increasing(probe, target: float, lo: float, hi: float, t_tol: float) -> float:
    # Invariant: probe(lo) < target <= probe(hi).
    while hi - lo > t_tol:
        mid = 0.5 * (lo + hi)
        if probe(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _grid_scan_report(
    grid: np.ndarray, vals: np.ndarray, eps: float, a: int, t_tol: float, method: str
) -> ThresholdReport:
    # Linear interpolation inside each cell; exact when the probability is
    # piecewise linear, a controlled estimate otherwise.
    lo_band, hi_band = eps, 1.0 - eps
    width = 0.0
    for j in range(len(grid) - 1):
        p0, p1 = vals[j], vals[j + 1]
        if p1 == p0:
            frac = 1.0 if lo_band <= p0 <= hi_band else 0.0
        else:
            u0 = (lo_band - p0) / (p1 - p0)
            u1 = (hi_band - p0) / (p1 - p0)
            ua, ub = min(u0, u1), max(u0, u1)
            frac = max(0.0, min(1.0, ub) - max(0.0, ua))
        width += frac * (grid[j + 1] - grid[j])
    inside = np.nonzero((vals >= lo_band) & (vals <= hi_band))[0]
    t_lo = float(grid[inside[0]]) if inside.size else None
    t_hi = float(grid[inside[-1]]) if inside.size else None
    return ThresholdReport(
        eps=eps,
        a=a,
        t_lo=t_lo,
        t_hi=t_hi,
        width=width,
        method=method,
        grid_points=len(grid),
        t_tol=t_tol,
        lo_absent=t_lo is None,
        hi_absent=t_hi is None,
    )


def _line_width_deterministic(f, base, a, eps, evaluator, t_tol, grid_points, monotone_slack):
    grid = np.linspace(0.0, 1.0, grid_points)
    vals = np.array([evaluator(f, mix_t(base, float(t)), a) for t in grid])
    if np.any(np.diff(vals) < -monotone_slack):
        return _grid_scan_report(grid, vals, eps, a, t_tol, METHOD_GRID_SCAN)

    def probe(t: float) -> float:
        return float(evaluator(f, mix_t(base, t), a))

    p_start, p_end = float(vals[0]), float(vals[-1])
    if p_end < eps or p_start > 1.0 - eps:
        return ThresholdReport(
            eps=eps, a=a, t_lo=None, t_hi=None, width=0.0, method=METHOD_BISECTION,
            grid_points=grid_points, t_tol=t_tol, lo_absent=True, hi_absent=True,
        )
    if p_start < eps:
        t_lo: float | None = _bisect_increasing(probe, eps, 0.0, 1.0, t_tol)
        eff_lo = t_lo
    else:
        t_lo, eff_lo = None, 0.0
    if p_end > 1.0 - eps:
        t_hi: float | None = _bisect_increasing(probe, 1.0 - eps, 0.0, 1.0, t_tol)
        eff_hi = t_hi
    else:
        t_hi, eff_hi = None, 1.0
    return ThresholdReport(
        eps=eps,
        a=a,
        t_lo=t_lo,
        t_hi=t_hi,
        width=max(0.0, eff_hi - eff_lo),
        method=METHOD_BISECTION,
        grid_points=grid_points,
        t_tol=t_tol,
        lo_absent=t_lo is None,
        hi_absent=t_hi is None,
    )


def _line_width_mc(f, base, a, eps, evaluator, t_tol):
    # Probe precision: per-point confidence radius (two standard errors)
    # at most 0.25 * min(eps, 0.1), so band membership near the crossings
    # is resolved well inside the band height.
    target_ci = 0.25 * min(eps, 0.1)
    probe_samples = max(evaluator.samples, math.ceil((1.0 / target_ci) ** 2))
    t_tol = max(t_tol, _MC_T_TOL)

    def probe(t: float) -> float:
        return float(evaluator(f, mix_t(base, t), a, samples=probe_samples))

    grid = np.linspace(0.0, 1.0, _MC_COARSE_POINTS)
    vals = np.array([probe(float(t)) for t in grid])
    sig = np.sqrt(np.maximum(vals * (1.0 - vals), 1.0 / probe_samples) / probe_samples)
    tolerated_drop = 4.0 * (sig[:-1] + sig[1:])
    if np.any(np.diff(vals) < -tolerated_drop):
        return _grid_scan_report(grid, vals, eps, a, t_tol, METHOD_MC_GRID_SCAN)

    p_start, p_end = float(vals[0]), float(vals[-1])
    if p_end < eps or p_start > 1.0 - eps:
        return ThresholdReport(
            eps=eps, a=a, t_lo=None, t_hi=None, width=0.0, method=METHOD_MC_BISECTION,
            grid_points=_MC_COARSE_POINTS, t_tol=t_tol, lo_absent=True, hi_absent=True,
        )

    def refine(target: float) -> float:
        over = np.nonzero(vals >= target)[0]
        j = int(over[0])
        if j == 0:
            return float(grid[0])
        return _bisect_increasing(probe, target, float(grid[j - 1]), float(grid[j]), t_tol)

    if p_start < eps:
        t_lo: float | None = refine(eps)
        eff_lo = t_lo
    else:
        t_lo, eff_lo = None, 0.0
    if p_end > 1.0 - eps:
        t_hi: float | None = refine(1.0 - eps)
        eff_hi = t_hi
    else:
        t_hi, eff_hi = None, 1.0
    return ThresholdReport(
        eps=eps,
        a=a,
        t_lo=t_lo,
        t_hi=t_hi,
        width=max(0.0, eff_hi - eff_lo),
        method=METHOD_MC_BISECTION,
        grid_points=_MC_COARSE_POINTS,
        t_tol=t_tol,
        lo_absent=t_lo is None,
        hi_absent=t_hi is None,
    )


def line_width(
    f: FunctionSpec,
    base: SimplexMeasure,
    a: int,
    eps: float,
    evaluator,
    *,
    t_tol: float = 1e-9,
    grid_points: int = 101,
    monotone_slack: float = 1e-12,
) -> ThresholdReport:
    """Threshold width of Pr[f = a] along the line from base toward delta_0.

    A deterministic evaluator gets a monotonicity check on a coarse grid and
    then bisection to ``t_tol``; a visibly non-monotone probe profile falls
    back to a grid scan of the band.  A stochastic evaluator (attribute
    ``stochastic``) gets the coarse-grid-plus-refinement path with sample
    sizes sized to the band height.
    """
    require_zero_face(base)
    eps = _check_eps(eps)
    if not 0 <= a < f.q:
        raise ValueError(f"symbol a={a} out of range for q={f.q}")
    if t_tol <= 0.0:
        raise ValueError("t_tol must be positive")
    if grid_points < 3:
        raise ValueError("grid_points must be at least 3")
    if getattr(evaluator, "stochastic", False):
        return _line_width_mc(f, base, a, eps, evaluator, t_tol)
    return _line_width_deterministic(f, base, a, eps, evaluator, t_tol, grid_points, monotone_slack)


def cross_section_scan(
    f: FunctionSpec,
    base: SimplexMeasure,
    i: int,
    a: int,
    eps: float,
    s_grid: Sequence[float],
    evaluator,
    **line_kwargs,
) -> float:
    """Trapezoid estimate of the area swept by the threshold band.

    For each s the base point s*delta_i + (1-s)*base spans a line toward
    delta_0; the integral over s of the line widths is the two-dimensional
    size of the band inside the cross-section sheet.
    """
    s_values = [float(s) for s in s_grid]
    if len(s_values) < 2:
        raise ValueError("s_grid needs at least two points")
    if any(s1 <= s0 for s0, s1 in zip(s_values, s_values[1:])):
        raise ValueError("s_grid must be strictly increasing")
    if not 0.0 <= s_values[0] or not s_values[-1] <= 1.0:
        raise ValueError("s_grid must lie inside [0, 1]")
    widths = [
        line_width(f, mix_st(base, i, s, 0.0), a, eps, evaluator, **line_kwargs).width
        for s in s_values
    ]
    area = 0.0
    for j in range(len(s_values) - 1):
        area += 0.5 * (widths[j] + widths[j + 1]) * (s_values[j + 1] - s_values[j])
    return area


@dataclass(frozen=True)
class RegionMeasureEstimate:
    """Uniform-measure fraction of the simplex where Pr[f = a] sits in the band."""

    fraction: float
    std_error: float
    samples: int
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction {self.fraction!r} outside [0, 1]")
        if self.std_error < 0.0:
            raise ValueError("std_error must be nonnegative")


def region_measure(
    f: FunctionSpec, a: int, eps: float, samples: int, seed: int, evaluator
) -> RegionMeasureEstimate:
    """Monte Carlo fraction of uniform simplex points with eps <= Pr[f=a] <= 1-eps.

    Uses the evaluator's vectorized ``batch`` method when it has one; the
    randomness is only in the simplex sample, so a deterministic evaluator
    makes the estimate reproducible from the seed alone.
    """
    eps = _check_eps(eps)
    if samples < 1:
        raise ValueError("samples must be positive")
    if not 0 <= a < f.q:
        raise ValueError(f"symbol a={a} out of range for q={f.q}")
    M = sample_uniform_batch(f.q, samples, seed)
    batch = getattr(evaluator, "batch", None)
    if callable(batch):
        probs = np.asarray(batch(f, M, a), dtype=float)
    else:
        probs = np.array([evaluator(f, SimplexMeasure(tuple(row)), a) for row in M])
    hits = int(((probs >= eps) & (probs <= 1.0 - eps)).sum())
    fraction = hits / samples
    if hits in (0, samples):
        std_error = 3.0 / samples
    else:
        std_error = math.sqrt(fraction * (1.0 - fraction) / samples)
    return RegionMeasureEstimate(fraction=fraction, std_error=std_error, samples=samples, seed=int(seed))


@dataclass(frozen=True)
class ScalingRow:
    """One n of a tribes width sweep along the central line."""

    n: int
    r: int
    p_lo: float
    p_hi: float
    width: float
    width_times_ln_n: float


def sweep_scaling(q: int, p0: float, n_list: Sequence[int], eps: float) -> list[ScalingRow]:
    """Tribes threshold widths along the central line for each n, sorted by n.

    The closed-form evaluator keeps every n cheap, so the sweep scales to n
    in the millions.  Width times ln n is the quantity expected to stay in a
    constant band.
    """
    eps = _check_eps(eps)
    evaluator = ClosedFormEvaluator()
    rows = []
    for n in sorted(int(n) for n in n_list):
        f = build_tribes(q, n, p0)
        rep = line_width(f, central_measure(q), 0, eps, evaluator)
        if rep.t_lo is None or rep.t_hi is None:
            raise AssertionError("tribes zero-probability spans [0, 1]; crossings must exist")
        rows.append(
            ScalingRow(
                n=n,
                r=f.family.r,
                p_lo=rep.t_lo,
                p_hi=rep.t_hi,
                width=rep.width,
                width_times_ln_n=rep.width * math.log(n),
            )
        )
    return rows
