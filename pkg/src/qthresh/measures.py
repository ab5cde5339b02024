"""Probability measures on [q] and the simplex paths used by threshold sweeps.

A measure is a point of the probability simplex: q nonnegative atoms summing
to one.  Threshold questions live on the boundary face where atom 0 vanishes;
the sweeps move from a base point on that face toward the point mass at
symbol 0, either along a straight line or through a two-parameter cross
section that additionally blends in one other point mass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Constructors accept atom vectors whose sum strays from 1 by at most this.
ATOM_SUM_TOL = 1e-12


@dataclass(frozen=True)
class SimplexMeasure:
    """A probability measure on the symbol set {0, ..., q-1}."""

    atoms: tuple[float, ...]

    def __post_init__(self) -> None:
        atoms = tuple(float(a) for a in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if len(atoms) < 2:
            raise ValueError("a measure needs at least two atoms (q >= 2)")
        for j, a in enumerate(atoms):
            if not math.isfinite(a) or a < 0.0:
                raise ValueError(f"atom {j} is {a!r}; atoms must be finite and nonnegative")
        total = math.fsum(atoms)
        if abs(total - 1.0) > ATOM_SUM_TOL:
            raise ValueError(f"atoms sum to {total!r}; must equal 1 within {ATOM_SUM_TOL}")

    @property
    def q(self) -> int:
        return len(self.atoms)

    def __getitem__(self, j: int) -> float:
        return self.atoms[j]

    def __iter__(self):
        return iter(self.atoms)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.atoms, dtype=float)

    def serialize(self) -> str:
        """Comma-separated decimal atoms, e.g. ``0,0.5,0.5``.  Round-trips exactly."""
        return ",".join(format(a, ".17g") for a in self.atoms)

    @classmethod
    def parse(cls, text: str) -> "SimplexMeasure":
        try:
            atoms = tuple(float(tok) for tok in text.split(","))
        except ValueError:
            raise ValueError(f"bad measure string {text!r}: atoms must be decimal numbers") from None
        return cls(atoms)

    @classmethod
    def normalized(cls, weights) -> "SimplexMeasure":
        """Scale a nonnegative weight vector so it sums exactly to one."""
        w = [float(v) for v in weights]
        total = math.fsum(w)
        if not math.isfinite(total) or total <= 0.0:
            raise ValueError("weights must be finite with positive total mass")
        return cls(tuple(v / total for v in w))

    @classmethod
    def point_mass(cls, q: int, j: int) -> "SimplexMeasure":
        if q < 2:
            raise ValueError("q must be at least 2")
        if not 0 <= j < q:
            raise ValueError(f"symbol {j} out of range for q={q}")
        return cls(tuple(1.0 if i == j else 0.0 for i in range(q)))


def require_zero_face(mu: SimplexMeasure) -> None:
    """Reject measures with mass at symbol 0 (sweep bases must have atom 0 == 0)."""
    if mu.atoms[0] != 0.0:
        raise ValueError(f"base measure must place zero mass at symbol 0, got {mu.atoms[0]!r}")


def _check_unit(name: str, v: float) -> float:
    v = float(v)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
    return v


def mix_t(base: SimplexMeasure, t: float) -> SimplexMeasure:
    """Line mixture t*delta_0 + (1-t)*base.

    ``base`` must have no mass at symbol 0.  Atom 0 of the result equals t
    exactly; the remaining atoms are scaled by (1-t).
    """
    require_zero_face(base)
    t = _check_unit("t", t)
    rest = tuple((1.0 - t) * a for a in base.atoms[1:])
    return SimplexMeasure((t,) + rest)


def mix_st(base: SimplexMeasure, i: int, s: float, t: float) -> SimplexMeasure:
    """Cross-section mixture t*delta_0 + s*(1-t)*delta_i + (1-t)*(1-s)*base.

    ``base`` must vanish at symbols 0 and i.  At t=1 the result is exactly
    delta_0 regardless of s; at (s, t) = (1, 0) it is exactly delta_i.
    """
    require_zero_face(base)
    if not 1 <= i < base.q:
        raise ValueError(f"direction symbol i={i} must lie in 1..{base.q - 1}")
    if base.atoms[i] != 0.0:
        raise ValueError(f"base measure must place zero mass at symbol {i}, got {base.atoms[i]!r}")
    s = _check_unit("s", s)
    t = _check_unit("t", t)
    atoms = [(1.0 - t) * (1.0 - s) * a for a in base.atoms]
    atoms[0] = t
    atoms[i] = s * (1.0 - t)
    return SimplexMeasure(tuple(atoms))


def second_smallest_atom(mu: SimplexMeasure) -> float:
    """Smallest atom over symbols 1..q-1 (symbol 0 excluded)."""
    return min(mu.atoms[1:])


def classify_region(mu: SimplexMeasure) -> int:
    """Index i >= 1 of the smallest atom among symbols 1..q-1.

    Ties resolve to the lowest index, so the regions partition the simplex.
    """
    rest = mu.atoms[1:]
    return 1 + rest.index(min(rest))


def central_measure(q: int) -> SimplexMeasure:
    """Uniform measure on symbols 1..q-1 with zero mass at symbol 0."""
    if q < 2:
        raise ValueError("q must be at least 2")
    return SimplexMeasure((0.0,) + (1.0 / (q - 1),) * (q - 1))


def sample_uniform(q: int, rng) -> SimplexMeasure:
    """One draw from the uniform (Lebesgue) distribution on the simplex.

    Uses the exponential trick: q iid Exp(1) variates divided by their sum
    are Dirichlet(1, ..., 1), which is the uniform distribution.  ``rng``
    may be a seed or an ``np.random.Generator``.
    """
    if q < 2:
        raise ValueError("q must be at least 2")
    gen = np.random.default_rng(rng)
    g = gen.exponential(size=q)
    return SimplexMeasure.normalized(g)


def sample_uniform_batch(q: int, count: int, rng) -> np.ndarray:
    """Matrix of ``count`` uniform simplex points, one per row."""
    if q < 2:
        raise ValueError("q must be at least 2")
    if count < 0:
        raise ValueError("count must be nonnegative")
    gen = np.random.default_rng(rng)
    g = gen.exponential(size=(count, q))
    return g / g.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class LineParametrization:
    """Position t along the segment from a zero-face base toward delta_0."""

    base: SimplexMeasure
    t: float

    def __post_init__(self) -> None:
        require_zero_face(self.base)
        _check_unit("t", self.t)

    def measure(self) -> SimplexMeasure:
        return mix_t(self.base, self.t)


@dataclass(frozen=True)
class CrossSectionParametrization:
    """Position (s, t) on the two-parameter sheet spanned by delta_0, delta_i, base."""

    base: SimplexMeasure
    i: int
    s: float
    t: float

    def __post_init__(self) -> None:
        # mix_st re-runs the checks; doing them here makes bad parameters
        # fail at construction time instead of first use.
        mix_st(self.base, self.i, self.s, self.t)

    def measure(self) -> SimplexMeasure:
        return mix_st(self.base, self.i, self.s, self.t)
