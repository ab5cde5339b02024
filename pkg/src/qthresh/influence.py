"""Coordinate influences for functions on [q]^n under product measures.

Three influence notions for a {0,1}-valued f, all expectations over the
other n-1 coordinates of a statistic of the one-coordinate fibre:

* geometric: probability that the fibre is nonconstant,
* variance: expected conditional variance of the fibre,
* h-weighted: expectation of h(fibre mean) for a supplied weight profile h.

The weight profile ``h_paper`` dominating the binary entropy is the one the
threshold lower-bound machinery needs, alongside the per-coordinate
derivative contribution ``phi_k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evaluate import product_weights, variance_of_indicator
from .functions import DEFAULT_CAP, KIND_FULL, FunctionSpec, evaluate_point, materialize_table
from .measures import SimplexMeasure


@dataclass(frozen=True)
class FibreView:
    """The one-coordinate restriction of f at a rest-point x.

    ``outputs[v]`` is f with coordinate k rewritten to v; by construction
    ``outputs[x[k]]`` equals f(x).
    """

    x: tuple[int, ...]
    k: int
    outputs: tuple[int, ...]

    def is_constant(self) -> bool:
        return min(self.outputs) == max(self.outputs)

    def mean(self, mu: SimplexMeasure) -> float:
        return float(np.dot(mu.as_array(), self.outputs))


def fibre_view(f: FunctionSpec, x, k: int) -> FibreView:
    x = tuple(int(v) for v in x)
    if not 0 <= k < f.n:
        raise ValueError(f"coordinate k={k} out of range for n={f.n}")
    outputs = []
    probe = list(x)
    for v in range(f.q):
        probe[k] = v
        outputs.append(evaluate_point(f, probe))
    return FibreView(x=x, k=k, outputs=tuple(outputs))


def _fibre_rows(f: FunctionSpec, k: int, cap: int) -> np.ndarray:
    """(q^(n-1), q) matrix: one row per rest-point, one column per symbol."""
    if not 0 <= k < f.n:
        raise ValueError(f"coordinate k={k} out of range for n={f.n}")
    tbl = materialize_table(f, cap).reshape((f.q,) * f.n)
    return np.moveaxis(tbl, k, -1).reshape(-1, f.q)


def _require_binary_rows(f: FunctionSpec, rows: np.ndarray) -> None:
    if f.kind == KIND_FULL and rows.size and rows.max() > 1:
        raise ValueError("this influence needs a {0,1}-valued function")


def _check_compatible(f: FunctionSpec, mu: SimplexMeasure) -> None:
    if mu.q != f.q:
        raise ValueError(f"measure has q={mu.q}, function has q={f.q}")


def influence_bkkkl(f: FunctionSpec, mu: SimplexMeasure, k: int, cap: int = DEFAULT_CAP) -> float:
    """Probability over the rest coordinates that the k-fibre is nonconstant."""
    _check_compatible(f, mu)
    rows = _fibre_rows(f, k, cap)
    nonconst = rows.min(axis=1) != rows.max(axis=1)
    w = product_weights(mu, f.n - 1, cap)
    return float(w @ nonconst)


def influence_variance(f: FunctionSpec, mu: SimplexMeasure, k: int, cap: int = DEFAULT_CAP) -> float:
    """Expected conditional variance E[m(1-m)] of the k-fibre mean m."""
    _check_compatible(f, mu)
    rows = _fibre_rows(f, k, cap)
    _require_binary_rows(f, rows)
    m = rows @ mu.as_array()
    w = product_weights(mu, f.n - 1, cap)
    return float(w @ (m * (1.0 - m)))


def _apply_h(h, m: np.ndarray) -> np.ndarray:
    # Most profiles (including the built-ins) vectorize; fall back to a
    # scalar loop for ones that do not.
    try:
        out = np.asarray(h(m), dtype=float)
        if out.shape == m.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(h(t)) for t in m])


def influence_h(f: FunctionSpec, mu: SimplexMeasure, k: int, h, cap: int = DEFAULT_CAP) -> float:
    """E over rest coordinates of h(fibre mean) for a weight profile h on [0, 1]."""
    _check_compatible(f, mu)
    rows = _fibre_rows(f, k, cap)
    _require_binary_rows(f, rows)
    m = rows @ mu.as_array()
    w = product_weights(mu, f.n - 1, cap)
    return float(w @ _apply_h(h, m))


def phi_k(f: FunctionSpec, mu: SimplexMeasure, k: int, cap: int = DEFAULT_CAP) -> float:
    """E[ 1[k-fibre nonconstant] * (1 - fibre mean) ] under mu.

    Summed over k and divided by (1 - t) this is the exact derivative of
    Pr[f = 1] along the line mixture for 0-monotone indicators.
    """
    _check_compatible(f, mu)
    rows = _fibre_rows(f, k, cap)
    _require_binary_rows(f, rows)
    nonconst = rows.min(axis=1) != rows.max(axis=1)
    m = rows @ mu.as_array()
    w = product_weights(mu, f.n - 1, cap)
    return float(w @ (nonconst * (1.0 - m)))


# ---------------------------------------------------------------------------
# Weight profiles on [0, 1]


def _profile(t, values_fn):
    arr = np.asarray(t, dtype=float)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("weight profiles are defined on [0, 1]")
    out = values_fn(arr)
    if np.isscalar(t) or arr.ndim == 0:
        return float(out)
    return out


def ent(t):
    """Binary entropy -t ln t - (1-t) ln(1-t) in nats, 0 at the endpoints."""

    def values(arr):
        with np.errstate(divide="ignore", invalid="ignore"):
            v = -arr * np.log(arr) - (1.0 - arr) * np.log1p(-arr)
        return np.where((arr == 0.0) | (arr == 1.0), 0.0, v)

    return _profile(t, values)


def h_paper(t):
    """The profile 2 (1-t) (1 - ln(1-t)) on (0, 1), zero at the endpoints.

    Dominates the binary entropy pointwise, which is what the threshold
    lower bound needs from a weight profile.
    """

    def values(arr):
        with np.errstate(divide="ignore", invalid="ignore"):
            v = 2.0 * (1.0 - arr) * (1.0 - np.log1p(-arr))
        return np.where((arr > 0.0) & (arr < 1.0), v, 0.0)

    return _profile(t, values)


def h_variance(t):
    """t(1-t); plugging it into influence_h recovers the variance influence."""
    return _profile(t, lambda arr: arr * (1.0 - arr))


def h_nonconstant(t):
    """Indicator of (0, 1); recovers the geometric influence when every
    symbol has positive mass (zero-mass symbols can hide a nonconstant fibre
    behind a degenerate mean)."""
    return _profile(t, lambda arr: ((arr > 0.0) & (arr < 1.0)).astype(float))


# ---------------------------------------------------------------------------
# Profiles across coordinates and the max-influence diagnostic


_PROFILE_KINDS = ("bkkkl", "variance", "h")


@dataclass(frozen=True)
class InfluenceProfile:
    """Per-coordinate influences of one kind, in coordinate order."""

    kind: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in _PROFILE_KINDS:
            raise ValueError(f"kind must be one of {_PROFILE_KINDS}, got {self.kind!r}")
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        for k, v in enumerate(values):
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"influence {k} is {v!r}; must be finite and nonnegative")
            if self.kind == "bkkkl" and v > 1.0 + 1e-12:
                raise ValueError(f"geometric influence {v!r} exceeds 1")
            if self.kind == "variance" and v > 0.25 + 1e-12:
                raise ValueError(f"variance influence {v!r} exceeds 1/4")

    @property
    def n(self) -> int:
        return len(self.values)

    def total(self) -> float:
        return math.fsum(self.values)

    def max_coordinate(self) -> tuple[int, float]:
        k = max(range(self.n), key=lambda j: self.values[j])
        return k, self.values[k]


def influence_profile(
    f: FunctionSpec,
    mu: SimplexMeasure,
    kind: str,
    h=None,
    cap: int = DEFAULT_CAP,
) -> InfluenceProfile:
    """All n influences of one kind.  ``kind='h'`` defaults to h_paper."""
    if kind == "bkkkl":
        vals = [influence_bkkkl(f, mu, k, cap) for k in range(f.n)]
    elif kind == "variance":
        vals = [influence_variance(f, mu, k, cap) for k in range(f.n)]
    elif kind == "h":
        vals = [influence_h(f, mu, k, h if h is not None else h_paper, cap) for k in range(f.n)]
    else:
        raise ValueError(f"kind must be one of {_PROFILE_KINDS}, got {kind!r}")
    return InfluenceProfile(kind=kind, values=tuple(vals))


@dataclass(frozen=True)
class KellerDiagnostic:
    """Largest h_paper-influence against the variance-scaled benchmark.

    ``ratio`` is max_k I_k / (Var(f) ln(n) / n), reported as None when the
    benchmark degenerates (constant f, or n = 1 where ln n = 0).
    """

    values: tuple[float, ...]
    max_value: float
    argmax_k: int
    variance: float
    denominator: float
    ratio: float | None


def keller_diagnostic(f: FunctionSpec, mu: SimplexMeasure, cap: int = DEFAULT_CAP) -> KellerDiagnostic:
    _check_compatible(f, mu)
    prof = influence_profile(f, mu, "h", h=h_paper, cap=cap)
    argmax_k, max_value = prof.max_coordinate()
    variance = variance_of_indicator(f, mu, cap)
    denominator = variance * math.log(f.n) / f.n
    ratio = max_value / denominator if denominator > 0.0 else None
    return KellerDiagnostic(
        values=prof.values,
        max_value=max_value,
        argmax_k=argmax_k,
        variance=variance,
        denominator=denominator,
        ratio=ratio,
    )
