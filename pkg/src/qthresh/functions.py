"""Functions on [q]^n: explicit tables, the tribes family, orders, monotonicity.

A function is either a fully materialized lookup table in lexicographic
order (coordinate 0 most significant) or a structured family member that can
be evaluated pointwise without ever writing the table down.  Everything that
must enumerate [q]^n goes through a size cap so structured functions stay
usable at n far beyond enumeration range.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Hard ceiling on q**n for any operation that materializes a table.
DEFAULT_CAP = 2**24

_BATCH_CELLS = 4_000_000  # rough element budget per vectorized chunk

KIND_FULL = "full"
KIND_INDICATOR = "indicator"


class CapExceededError(ValueError):
    """Raised when an operation would enumerate more than the table cap allows."""


def check_cap(q: int, n: int, cap: int = DEFAULT_CAP) -> int:
    """Return q**n if it fits under ``cap``, else raise."""
    size = q**n
    if size > cap:
        raise CapExceededError(f"q^n = {q}^{n} = {size} exceeds the enumeration cap {cap}")
    return size


def point_index(x, q: int) -> int:
    """Lexicographic index of a point, coordinate 0 most significant."""
    idx = 0
    for v in x:
        idx = idx * q + int(v)
    return idx


def index_point(idx: int, q: int, n: int) -> tuple[int, ...]:
    """Inverse of :func:`point_index`."""
    out = [0] * n
    for k in range(n - 1, -1, -1):
        idx, out[k] = divmod(idx, q)
    return tuple(out)


@dataclass(frozen=True)
class TribesVariant:
    """Parameters of a tribes-style function on [q]^n.

    Coordinates are split into contiguous blocks (``tribe_sizes``); the
    function reports symbol 0 when some block is entirely zero, and otherwise
    the first nonzero coordinate value.  ``p0`` records the design point used
    to size the blocks; ``r_clamped`` records that the block-size formula
    left [1, n] and was clamped.
    """

    r: int
    p0: float
    tribe_sizes: tuple[int, ...]
    r_clamped: bool = False

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.tribe_sizes)
        object.__setattr__(self, "tribe_sizes", sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("tribe sizes must be positive")
        if not 0.0 < float(self.p0) < 1.0:
            raise ValueError(f"p0 must lie strictly inside (0, 1), got {self.p0!r}")
        if not 1 <= self.r <= sum(sizes):
            raise ValueError(f"nominal tribe size r={self.r} out of range")

    @property
    def n(self) -> int:
        return sum(self.tribe_sizes)


@dataclass(frozen=True, eq=False)
class FunctionSpec:
    """A function on [q]^n, as an explicit table or a structured family.

    Exactly one of ``table`` and ``family`` is set.  Tables are stored in
    lexicographic order with coordinate 0 most significant.  ``kind`` is
    ``"full"`` for [q]-valued functions and ``"indicator"`` for {0,1}-valued
    ones; an indicator view of a family records the tracked output symbol in
    ``indicator_of``.
    """

    q: int
    n: int
    kind: str
    table: np.ndarray | None = None
    family: TribesVariant | None = None
    indicator_of: int | None = None

    def __post_init__(self) -> None:
        if self.q < 2:
            raise ValueError("q must be at least 2")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.kind not in (KIND_FULL, KIND_INDICATOR):
            raise ValueError(f"kind must be 'full' or 'indicator', got {self.kind!r}")
        if (self.table is None) == (self.family is None):
            raise ValueError("exactly one of table and family must be given")
        if self.table is not None:
            # Copy before freezing so the caller's array is never locked.
            tbl = np.array(self.table, dtype=np.int32, copy=True).reshape(-1)
            if tbl.shape[0] != self.q**self.n:
                raise ValueError(f"table has {tbl.shape[0]} entries, expected q^n = {self.q ** self.n}")
            hi = self.q if self.kind == KIND_FULL else 2
            if tbl.size and (tbl.min() < 0 or tbl.max() >= hi):
                raise ValueError(f"table values must lie in [0, {hi})")
            tbl.setflags(write=False)
            object.__setattr__(self, "table", tbl)
            if self.indicator_of is not None:
                raise ValueError("indicator_of only applies to family-backed indicators")
        else:
            if self.family.n != self.n:
                raise ValueError(f"family covers {self.family.n} coordinates, expected n={self.n}")
            if self.kind == KIND_INDICATOR:
                if self.indicator_of is None:
                    raise ValueError("family-backed indicator needs indicator_of")
                if not 0 <= self.indicator_of < self.q:
                    raise ValueError(f"indicator_of={self.indicator_of} out of range for q={self.q}")
            elif self.indicator_of is not None:
                raise ValueError("indicator_of only applies to kind='indicator'")

    @property
    def size(self) -> int:
        return self.q**self.n


def from_table(q: int, n: int, values, kind: str = KIND_FULL) -> FunctionSpec:
    return FunctionSpec(q=q, n=n, kind=kind, table=np.asarray(values))


def constant_function(q: int, n: int, value: int, kind: str = KIND_FULL) -> FunctionSpec:
    hi = q if kind == KIND_FULL else 2
    if not 0 <= value < hi:
        raise ValueError(f"constant value {value} out of range")
    return FunctionSpec(q=q, n=n, kind=kind, table=np.full(q**n, value, dtype=np.int32))


def _tribes_point(fam: TribesVariant, x) -> int:
    pos = 0
    for size in fam.tribe_sizes:
        if all(v == 0 for v in x[pos : pos + size]):
            return 0
        pos += size
    for v in x:
        if v != 0:
            return int(v)
    raise AssertionError("unreachable: all-zero input has an all-zero tribe")


def evaluate_point(f: FunctionSpec, x) -> int:
    """Evaluate at a single point (tuple or array of n symbols)."""
    if len(x) != f.n:
        raise ValueError(f"point has {len(x)} coordinates, expected {f.n}")
    if any(not 0 <= int(v) < f.q for v in x):
        raise ValueError(f"point {tuple(x)} has symbols outside [0, {f.q})")
    if f.table is not None:
        return int(f.table[point_index(x, f.q)])
    val = _tribes_point(f.family, [int(v) for v in x])
    if f.kind == KIND_INDICATOR:
        return int(val == f.indicator_of)
    return val


def evaluate_batch(f: FunctionSpec, X: np.ndarray) -> np.ndarray:
    """Evaluate at every row of an (m, n) matrix of symbols."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != f.n:
        raise ValueError(f"expected an (m, {f.n}) matrix, got shape {X.shape}")
    if f.table is not None:
        strides = f.q ** np.arange(f.n - 1, -1, -1, dtype=np.int64)
        idx = X.astype(np.int64) @ strides
        return f.table[idx].astype(np.int32)
    fam = f.family
    sizes = np.asarray(fam.tribe_sizes, dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    zero = X == 0
    tribe_dead = np.logical_and.reduceat(zero, starts, axis=1).any(axis=1)
    first_nz = np.argmax(~zero, axis=1)
    vals = X[np.arange(X.shape[0]), first_nz].astype(np.int32)
    out = np.where(tribe_dead, np.int32(0), vals)
    if f.kind == KIND_INDICATOR:
        out = (out == f.indicator_of).astype(np.int32)
    return out


def materialize_table(f: FunctionSpec, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Full lexicographic value table, enumerating family-backed functions."""
    if f.table is not None:
        return f.table
    size = check_cap(f.q, f.n, cap)
    strides = f.q ** np.arange(f.n - 1, -1, -1, dtype=np.int64)
    out = np.empty(size, dtype=np.int32)
    chunk = max(1, _BATCH_CELLS // f.n)
    for lo in range(0, size, chunk):
        ids = np.arange(lo, min(lo + chunk, size), dtype=np.int64)
        X = (ids[:, None] // strides[None, :]) % f.q
        out[lo : lo + len(ids)] = evaluate_batch(f, X)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# Partial orders and monotonicity


def leq_a(x, y, a: int) -> bool:
    """Whether y is reachable from x by rewriting coordinates to the symbol a.

    Equivalent characterization: positions holding a in x still hold a in y,
    and wherever y differs from a it agrees with x.
    """
    if len(x) != len(y):
        raise ValueError(f"points have different lengths {len(x)} and {len(y)}")
    return all(yv == a or xv == yv for xv, yv in zip(x, y))


def _binary_table(f: FunctionSpec, cap: int) -> np.ndarray:
    tbl = materialize_table(f, cap)
    if f.kind == KIND_FULL and tbl.size and tbl.max() > 1:
        raise ValueError("monotonicity in this sense is defined for {0,1}-valued functions")
    return tbl


def is_a_monotone(f: FunctionSpec, a: int, cap: int = DEFAULT_CAP) -> bool:
    """Whether a {0,1}-valued f is nondecreasing for the rewrite-to-a order.

    Checks every covering relation (one coordinate rewritten to a), which
    generates the full order.
    """
    if not 0 <= a < f.q:
        raise ValueError(f"symbol a={a} out of range for q={f.q}")
    tbl = _binary_table(f, cap).reshape((f.q,) * f.n)
    for k in range(f.n):
        rewritten = np.expand_dims(np.take(tbl, a, axis=k), axis=k)
        if not np.all(tbl <= rewritten):
            return False
    return True


def is_monotone_full(f: FunctionSpec, cap: int = DEFAULT_CAP) -> bool:
    """Whether every level indicator 1[f = a] is monotone for its own order."""
    if f.kind != KIND_FULL:
        raise ValueError("full monotonicity applies to [q]-valued functions")
    tbl = materialize_table(f, cap).reshape((f.q,) * f.n)
    for a in range(f.q):
        level = tbl == a
        for k in range(f.n):
            rewritten = np.expand_dims(np.take(level, a, axis=k), axis=k)
            if not np.all(level <= rewritten):
                return False
    return True


def _check_permutation(sigma, n: int) -> tuple[int, ...]:
    perm = tuple(int(v) for v in sigma)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{sigma!r} is not a permutation of 0..{n - 1}")
    return perm


@dataclass(frozen=True)
class PermutationGroupSpec:
    """Generators (0-based coordinate permutations) of a subgroup of S_n."""

    generators: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        gens = tuple(_check_permutation(g, len(self.generators[0])) for g in self.generators)
        object.__setattr__(self, "generators", gens)

    @property
    def n(self) -> int:
        return len(self.generators[0])

    def orbit_of(self, start: int) -> frozenset[int]:
        # Finite permutations have inverses among their own powers, so
        # closing under the generators alone reaches the whole group orbit.
        seen = {start}
        frontier = [start]
        while frontier:
            j = frontier.pop()
            for g in self.generators:
                img = g[j]
                if img not in seen:
                    seen.add(img)
                    frontier.append(img)
        return frozenset(seen)

    def is_transitive(self) -> bool:
        return len(self.orbit_of(0)) == self.n


def adjacent_transpositions(n: int) -> PermutationGroupSpec:
    """Generators of the full symmetric group S_n."""
    if n == 1:
        return PermutationGroupSpec(((0,),))
    gens = []
    for k in range(n - 1):
        g = list(range(n))
        g[k], g[k + 1] = g[k + 1], g[k]
        gens.append(tuple(g))
    return PermutationGroupSpec(tuple(gens))


def full_cycle(n: int) -> PermutationGroupSpec:
    """The cyclic shift generator (transitive, but much smaller than S_n)."""
    return PermutationGroupSpec((tuple((j + 1) % n for j in range(n)),))


def apply_permutation(x, sigma) -> tuple[int, ...]:
    """The relabeled point y with y[j] = x[sigma[j]]."""
    perm = _check_permutation(sigma, len(x))
    return tuple(x[perm[j]] for j in range(len(x)))


def is_symmetric(f: FunctionSpec, group: PermutationGroupSpec, cap: int = DEFAULT_CAP) -> bool:
    """Whether the group acts transitively and leaves f invariant.

    Invariance means f(x) == f(y) with y[j] = x[sigma[j]] for every
    generator sigma; transitivity is the orbit of coordinate 0 covering all
    coordinates.
    """
    if group.n != f.n:
        raise ValueError(f"group permutes {group.n} coordinates, function has {f.n}")
    if not group.is_transitive():
        return False
    tbl = materialize_table(f, cap).reshape((f.q,) * f.n)
    for g in group.generators:
        if not np.array_equal(tbl, tbl.transpose(g)):
            return False
    return True


# ---------------------------------------------------------------------------
# Families and constructions


def tribes_block_size(n: int, p0: float) -> int:
    """Nominal block size floor[(ln n - ln ln n + ln ln(1/p0)) / ln(1/p0)]."""
    if n < 3:
        raise ValueError("block-size formula needs n >= 3 (ln ln n degenerates below that)")
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"p0 must lie strictly inside (0, 1), got {p0!r}")
    b = math.log(1.0 / p0)
    return math.floor((math.log(n) - math.log(math.log(n)) + math.log(b)) / b)


def build_tribes(q: int, n: int, p0: float, r: int | None = None) -> FunctionSpec:
    """Tribes-style function on [q]^n.

    Coordinates split into floor(n/r) contiguous blocks of size r, with the
    remainder folded into the last block.  The output is 0 when some block is
    all zero and otherwise the first nonzero coordinate value.  When ``r`` is
    not given it comes from :func:`tribes_block_size` at the design point
    ``p0``, clamped into [1, n].

    Parameters
    ----------
    q, n : alphabet size and coordinate count (q >= 2; n >= 3 unless ``r``
        is given explicitly, in which case n >= 1 suffices).
    p0 : design point in (0, 1) controlling the block-size formula.
    r : explicit block size, bypassing the formula.
    """
    if q < 2:
        raise ValueError("q must be at least 2")
    if n < 1:
        raise ValueError("n must be at least 1")
    clamped = False
    if r is None:
        raw = tribes_block_size(n, p0)
        r = min(n, max(1, raw))
        clamped = r != raw
    else:
        if not 0.0 < p0 < 1.0:
            raise ValueError(f"p0 must lie strictly inside (0, 1), got {p0!r}")
        if not 1 <= r <= n:
            raise ValueError(f"explicit r={r} must lie in 1..{n}")
    m = n // r
    if m <= 1:
        sizes: tuple[int, ...] = (n,)
    else:
        sizes = (r,) * (m - 1) + (r + (n - m * r),)
    fam = TribesVariant(r=r, p0=float(p0), tribe_sizes=sizes, r_clamped=clamped)
    return FunctionSpec(q=q, n=n, kind=KIND_FULL, family=fam)


def indicator(f: FunctionSpec, a: int) -> FunctionSpec:
    """The {0,1}-valued level function 1[f = a]."""
    if f.kind != KIND_FULL:
        raise ValueError("indicator expects a [q]-valued function")
    if not 0 <= a < f.q:
        raise ValueError(f"symbol a={a} out of range for q={f.q}")
    if f.table is not None:
        return FunctionSpec(q=f.q, n=f.n, kind=KIND_INDICATOR, table=(f.table == a).astype(np.int32))
    return FunctionSpec(q=f.q, n=f.n, kind=KIND_INDICATOR, family=f.family, indicator_of=a)


def random_zero_monotone(
    q: int, n: int, density: float, seed, cap: int = DEFAULT_CAP
) -> FunctionSpec:
    """Random monotone indicator for the rewrite-to-0 order.

    Seeds round(density * q^n) distinct points and takes the upward closure:
    every point reachable by rewriting coordinates of a seed to 0 joins the
    set.  The result is 0-monotone by construction.
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {density!r}")
    size = check_cap(q, n, cap)
    rng = np.random.default_rng(seed)
    count = min(size, max(0, round(density * size)))
    hit = np.zeros(size, dtype=bool)
    if count:
        hit[rng.choice(size, size=count, replace=False)] = True
    nd = hit.reshape((q,) * n)
    # One pass per axis closes upward: rewriting coordinate k to 0 lands in
    # the axis-k zero slab, so OR each slab over its axis in turn.
    for k in range(n):
        sel: list = [slice(None)] * n
        sel[k] = 0
        nd[tuple(sel)] = nd.any(axis=k)
    return FunctionSpec(q=q, n=n, kind=KIND_INDICATOR, table=nd.reshape(size).astype(np.int32))


# ---------------------------------------------------------------------------
# Plain-text function files


class FunctionFileError(ValueError):
    """Malformed function file; carries the offending 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _parse_tokens(lineno: int, line: str, required: tuple[str, ...], optional: tuple[str, ...] = ()):
    fields: dict[str, str] = {}
    for tok in line.split():
        key, sep, val = tok.partition("=")
        if not sep or not key or not val:
            raise FunctionFileError(lineno, f"expected key=value tokens, got {tok!r}")
        if key not in required + optional:
            raise FunctionFileError(lineno, f"unknown key {key!r}")
        if key in fields:
            raise FunctionFileError(lineno, f"duplicate key {key!r}")
        fields[key] = val
    for key in required:
        if key not in fields:
            raise FunctionFileError(lineno, f"missing key {key!r}")
    return fields


def _parse_int(lineno: int, key: str, val: str) -> int:
    try:
        return int(val)
    except ValueError:
        raise FunctionFileError(lineno, f"{key} must be an integer, got {val!r}") from None


def parse_function_file(source) -> FunctionSpec:
    """Read a function from a path or an open text stream.

    Line 1 holds ``q=<int> n=<int> kind=<full|indicator>``.  A structured
    family follows as a single line ``family=tribes r=<int> p0=<real>`` (plus
    ``a=<symbol>`` for indicator views); otherwise q^n table lines follow,
    one integer per line in lexicographic point order.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return parse_function_file(fh)
    lines = [ln.rstrip("\n") for ln in source]
    if not lines or not lines[0].strip():
        raise FunctionFileError(1, "empty file; expected a header line")
    head = _parse_tokens(1, lines[0], required=("q", "n", "kind"))
    q = _parse_int(1, "q", head["q"])
    n = _parse_int(1, "n", head["n"])
    kind = head["kind"]
    if kind not in (KIND_FULL, KIND_INDICATOR):
        raise FunctionFileError(1, f"kind must be full or indicator, got {kind!r}")
    if q < 2 or n < 1:
        raise FunctionFileError(1, f"need q >= 2 and n >= 1, got q={q} n={n}")

    body = lines[1:]
    if body and body[0].lstrip().startswith("family="):
        fields = _parse_tokens(2, body[0], required=("family", "r", "p0"), optional=("a",))
        if fields["family"] != "tribes":
            raise FunctionFileError(2, f"unknown family {fields['family']!r}")
        r = _parse_int(2, "r", fields["r"])
        try:
            p0 = float(fields["p0"])
        except ValueError:
            raise FunctionFileError(2, f"p0 must be a real number, got {fields['p0']!r}") from None
        for extra_no, extra in enumerate(body[1:], start=3):
            if extra.strip():
                raise FunctionFileError(extra_no, "unexpected content after family line")
        try:
            f = build_tribes(q, n, p0, r=r)
        except ValueError as exc:
            raise FunctionFileError(2, str(exc)) from None
        if kind == KIND_INDICATOR:
            if "a" not in fields:
                raise FunctionFileError(2, "indicator family needs a=<symbol>")
            a = _parse_int(2, "a", fields["a"])
            if not 0 <= a < q:
                raise FunctionFileError(2, f"a={a} out of range for q={q}")
            return indicator(f, a)
        if "a" in fields:
            raise FunctionFileError(2, "a=<symbol> only applies to indicator kind")
        return f

    expected = q**n
    values = np.empty(expected, dtype=np.int32)
    hi = q if kind == KIND_FULL else 2
    count = 0
    for lineno, raw in enumerate(body, start=2):
        text = raw.strip()
        if not text:
            continue
        if count >= expected:
            raise FunctionFileError(lineno, f"too many table lines; expected {expected}")
        v = _parse_int(lineno, "table entry", text)
        if not 0 <= v < hi:
            raise FunctionFileError(lineno, f"value {v} out of range [0, {hi})")
        values[count] = v
        count += 1
    if count != expected:
        raise FunctionFileError(len(lines) + 1, f"expected {expected} table lines, found {count}")
    return FunctionSpec(q=q, n=n, kind=kind, table=values)


def write_function_file(f: FunctionSpec, path) -> None:
    """Serialize in the format :func:`parse_function_file` reads."""
    out = [f"q={f.q} n={f.n} kind={f.kind}"]
    if f.family is not None:
        line = f"family=tribes r={f.family.r} p0={format(f.family.p0, '.17g')}"
        if f.kind == KIND_INDICATOR:
            line += f" a={f.indicator_of}"
        out.append(line)
    else:
        out.extend(str(int(v)) for v in f.table)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def tribe_size_counts(fam: TribesVariant) -> dict[int, int]:
    """Histogram of block sizes (the closed-form product groups by size)."""
    return dict(Counter(fam.tribe_sizes))
