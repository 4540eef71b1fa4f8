"""Exact probability, entropy, and mutual-information arithmetic over finite alphabets.

All tables are dense float64 numpy arrays, all logarithms are base 2, and
all information quantities are in bits. 0*log(0) is 0; entries below
``LOG_ZERO_CUTOFF`` are treated as exact zeros in log arithmetic. Entropy
sums nonzero cells in sorted order, so tables that hold the same multiset
of probabilities produce bit-identical entropies regardless of axis layout.

Every object here is immutable after construction; all operations are pure
functions and safe to call concurrently.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace

import numpy as np

MASS_TOL = 1e-12
LOG_ZERO_CUTOFF = 1e-15
TABLE_CELL_CAP = 2**24


class ProbabilityError(ValueError):
    """Base class for invalid probability objects or queries."""


class InvalidDistribution(ProbabilityError):
    """Negative entries or mass away from 1. Renormalization is refused on purpose:
    silently fixing mass hides modeling bugs."""


class UnknownAxis(ProbabilityError):
    """Axis name not present in this joint distribution."""


class OverlappingAxes(ProbabilityError):
    """Axis sets that must be disjoint share a name."""


class TableTooLarge(ProbabilityError):
    """A dense table would exceed the 2^24 cell cap."""


@dataclass(frozen=True)
class Alphabet:
    """A named finite alphabet with distinct symbol labels."""

    name: str
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if len(self.labels) < 1:
            raise ProbabilityError(f"alphabet {self.name!r} must have size >= 1")
        if len(set(self.labels)) != len(self.labels):
            raise ProbabilityError(f"alphabet {self.name!r} has duplicate labels")

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise ProbabilityError(f"label {label!r} not in alphabet {self.name!r}") from None

    def renamed(self, name: str) -> "Alphabet":
        return replace(self, name=name)


@dataclass(frozen=True)
class ProductAlphabet(Alphabet):
    """An alphabet formed as the cartesian product of component alphabets.

    Labels follow C order: the last component varies fastest, so an axis over
    this alphabet can be split into component axes by a plain reshape.
    """

    parts: tuple[Alphabet, ...] = ()

    def renamed(self, name: str) -> "ProductAlphabet":
        return replace(self, name=name)


def product_alphabet(name: str, *parts: Alphabet) -> ProductAlphabet:
    if len(parts) < 2:
        raise ProbabilityError("a product alphabet needs at least two parts")
    labels = tuple("|".join(combo) for combo in itertools.product(*(p.labels for p in parts)))
    return ProductAlphabet(name=name, labels=labels, parts=tuple(parts))


def binary_alphabet(name: str) -> Alphabet:
    return Alphabet(name, ("0", "1"))


def _check_probs(vec: np.ndarray, what: str) -> None:
    if np.any(vec < 0):
        raise InvalidDistribution(f"{what} has negative entries")
    mass = float(vec.sum())
    if abs(mass - 1.0) > MASS_TOL:
        raise InvalidDistribution(f"{what} has mass {mass!r}, not 1 within {MASS_TOL}")


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dist:
    """A probability vector over one alphabet."""

    alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != (self.alphabet.size,):
            raise InvalidDistribution(
                f"probs shape {probs.shape} does not match alphabet "
                f"{self.alphabet.name!r} of size {self.alphabet.size}")
        _check_probs(probs, f"distribution over {self.alphabet.name!r}")
        object.__setattr__(self, "probs", _freeze(probs))

    def __getitem__(self, label: str) -> float:
        return float(self.probs[self.alphabet.index(label)])


@dataclass(frozen=True)
class CondDist:
    """A stochastic matrix: one output distribution per input symbol."""

    input: Alphabet
    output: Alphabet
    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.shape != (self.input.size, self.output.size):
            raise InvalidDistribution(
                f"rows shape {rows.shape} does not match "
                f"{self.input.size}x{self.output.size} for "
                f"{self.output.name!r} given {self.input.name!r}")
        for i in range(rows.shape[0]):
            _check_probs(rows[i], f"row {self.input.labels[i]!r} of "
                                  f"P({self.output.name}|{self.input.name})")
        object.__setattr__(self, "rows", _freeze(rows))

    def renamed_output(self, name: str) -> "CondDist":
        return CondDist(self.input, self.output.renamed(name), self.rows)

    def renamed(self, input_name: str, output_name: str) -> "CondDist":
        return CondDist(self.input.renamed(input_name), self.output.renamed(output_name), self.rows)


AxisSpec = "str | Iterable[str]"


@dataclass(frozen=True)
class JointDist:
    """A dense joint pmf over an ordered tuple of named alphabets."""

    axes: tuple[Alphabet, ...]
    table: np.ndarray

    def __post_init__(self) -> None:
        axes = tuple(self.axes)
        object.__setattr__(self, "axes", axes)
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise ProbabilityError(f"duplicate axis names in joint: {names}")
        shape = tuple(a.size for a in axes)
        cells = int(np.prod([int(s) for s in shape], dtype=np.int64)) if shape else 1
        if cells > TABLE_CELL_CAP:
            raise TableTooLarge(
                f"joint over {names} needs {cells} cells, cap is {TABLE_CELL_CAP}")
        table = np.asarray(self.table, dtype=np.float64)
        if table.shape != shape:
            raise InvalidDistribution(
                f"table shape {table.shape} does not match axes {shape}")
        if np.any(table < 0):
            raise InvalidDistribution("joint table has negative entries")
        mass = float(table.sum())
        if abs(mass - 1.0) > MASS_TOL:
            raise InvalidDistribution(f"joint table mass {mass!r} is not 1 within {MASS_TOL}")
        object.__setattr__(self, "table", _freeze(table))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownAxis(f"axis {name!r} not in joint over {self.names}") from None

    def alphabet(self, name: str) -> Alphabet:
        return self.axes[self.axis(name)]

    def marginal(self, axes: AxisSpec) -> "JointDist":
        """Marginal joint on the named axes, kept in this joint's axis order.

        Dropped axes are reduced one at a time in descending position. Two
        marginals whose kept sets differ by one low-position axis then share
        every intermediate reduction bit-for-bit, so entropy differences of
        structurally equal marginals cancel exactly.
        """
        keep = _axis_tuple(self, axes)
        if not keep:
            raise ProbabilityError("marginal needs a nonempty axis set")
        drop = tuple(i for i, a in enumerate(self.axes) if a.name not in keep)
        kept_axes = tuple(a for a in self.axes if a.name in keep)
        table = self.table
        for i in sorted(drop, reverse=True):
            table = table.sum(axis=i)
        return JointDist(kept_axes, table)

    def reorder(self, names: Sequence[str]) -> "JointDist":
        names = tuple(names)
        if sorted(names) != sorted(self.names):
            raise ProbabilityError(f"reorder needs a permutation of {self.names}, got {names}")
        perm = tuple(self.axis(n) for n in names)
        return JointDist(tuple(self.axes[i] for i in perm), np.transpose(self.table, perm))

    def split(self, name: str) -> "JointDist":
        """Replace a product-alphabet axis with its component axes (pure reshape)."""
        i = self.axis(name)
        axis = self.axes[i]
        if not isinstance(axis, ProductAlphabet):
            raise ProbabilityError(f"axis {name!r} is not a product alphabet")
        new_axes = self.axes[:i] + axis.parts + self.axes[i + 1:]
        new_shape = tuple(a.size for a in new_axes)
        return JointDist(new_axes, self.table.reshape(new_shape))


def _axis_tuple(joint: JointDist, axes: AxisSpec) -> tuple[str, ...]:
    """Normalize an axis-set argument to joint order; rejects unknown names."""
    if isinstance(axes, str):
        axes = (axes,)
    wanted = set()
    for name in axes:
        if name not in joint.names:
            raise UnknownAxis(f"axis {name!r} not in joint over {joint.names}")
        wanted.add(name)
    return tuple(n for n in joint.names if n in wanted)


def _entropy_of_table(table: np.ndarray) -> float:
    # Sorted-nonzero summation: bit-identical across axis layouts of the same pmf.
    p = np.asarray(table, dtype=np.float64).reshape(-1)
    p = p[p >= LOG_ZERO_CUTOFF]
    if p.size == 0:
        return 0.0
    p = np.sort(p)
    return float(-np.sum(p * np.log2(p)))


def entropy(joint: JointDist, axes: AxisSpec) -> float:
    """Shannon entropy H(axes) in bits of the marginal on the named axes."""
    keep = _axis_tuple(joint, axes)
    if not keep:
        raise ProbabilityError("entropy needs a nonempty axis set")
    return _entropy_of_table(joint.marginal(keep).table)


def cond_entropy(joint: JointDist, axes: AxisSpec, given: AxisSpec = ()) -> float:
    """H(axes | given) = H(axes, given) - H(given)."""
    a = _axis_tuple(joint, axes)
    c = _axis_tuple(joint, given)
    if set(a) & set(c):
        raise OverlappingAxes(f"axes {a} overlap conditioning set {c}")
    if not c:
        return entropy(joint, a)
    return entropy(joint, a + c) - entropy(joint, c)


def cond_mutual_info(joint: JointDist, a: AxisSpec, b: AxisSpec, c: AxisSpec = ()) -> float:
    """I(A;B|C) in bits; C may be empty for plain mutual information.

    Computed as H(A,C) + H(B,C) - H(A,B,C) - H(C). The result is >= -1e-12
    up to rounding; no clamping is applied here.
    """
    ta = _axis_tuple(joint, a)
    tb = _axis_tuple(joint, b)
    tc = _axis_tuple(joint, c)
    for left, right in ((ta, tb), (ta, tc), (tb, tc)):
        if set(left) & set(right):
            raise OverlappingAxes(f"axis sets must be pairwise disjoint, {left} vs {right}")
    if not ta or not tb:
        raise ProbabilityError("mutual information needs nonempty axis sets on both sides")
    h_ac = entropy(joint, ta + tc)
    h_bc = entropy(joint, tb + tc)
    h_abc = entropy(joint, ta + tb + tc)
    h_c = entropy(joint, tc) if tc else 0.0
    return h_ac + h_bc - h_abc - h_c


def mutual_info(joint: JointDist, a: AxisSpec, b: AxisSpec) -> float:
    return cond_mutual_info(joint, a, b, ())


def binary_entropy(x: float) -> float:
    """H_b(x) in bits; H_b(0) = H_b(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ProbabilityError(f"binary_entropy needs x in [0,1], got {x!r}")
    if x < LOG_ZERO_CUTOFF or 1.0 - x < LOG_ZERO_CUTOFF:
        return 0.0
    return float(-x * np.log2(x) - (1.0 - x) * np.log2(1.0 - x))


def inv_binary_entropy(h: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """The unique x in [0, 0.5] with H_b(x) = h, found by bisection.

    Bisection is unconditionally safe here: H_b is strictly increasing on
    [0, 0.5]. Absolute tolerance 1e-12 on x, at most 200 iterations.
    """
    if not 0.0 <= h <= 1.0:
        raise ProbabilityError(f"inv_binary_entropy needs h in [0,1], got {h!r}")
    if h == 0.0:
        return 0.0
    if h == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < h:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def bsc_convolve(a: float, b: float) -> float:
    """Crossover of two cascaded binary symmetric channels: a + b - 2ab."""
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise ProbabilityError("bsc_convolve needs arguments in [0,1]")
    return a + b - 2.0 * a * b


def min_zero(a: float) -> float:
    """min(a, 0)."""
    return a if a < 0.0 else 0.0


def uniform(alphabet: Alphabet) -> Dist:
    return Dist(alphabet, np.full(alphabet.size, 1.0 / alphabet.size))


def point_mass(alphabet: Alphabet, label: str) -> Dist:
    probs = np.zeros(alphabet.size)
    probs[alphabet.index(label)] = 1.0
    return Dist(alphabet, probs)


def bsc(p: float, input: Alphabet, output: Alphabet) -> CondDist:
    """Binary symmetric channel with crossover p between two binary alphabets."""
    if not 0.0 <= p <= 1.0:
        raise ProbabilityError(f"bsc crossover must be in [0,1], got {p!r}")
    if input.size != 2 or output.size != 2:
        raise ProbabilityError("bsc needs binary alphabets on both sides")
    return CondDist(input, output, np.array([[1.0 - p, p], [p, 1.0 - p]]))


def constant_channel(input: Alphabet, output: Alphabet) -> CondDist:
    """Channel whose output is the first output symbol regardless of input."""
    rows = np.zeros((input.size, output.size))
    rows[:, 0] = 1.0
    return CondDist(input, output, rows)


def identity_channel(input: Alphabet, output_name: str) -> CondDist:
    """Noiseless copy of the input under a new axis name."""
    out = input.renamed(output_name)
    return CondDist(input, out, np.eye(input.size))


def compose(root: Dist, *steps: tuple[CondDist, str]) -> JointDist:
    """Joint pmf factorized along a declared chain of channels.

    Starts from the root distribution; each step attaches a channel fed by an
    axis already present (named by the second element). Output axes appear in
    declaration order: root first, then one new axis per step.
    """
    axes: list[Alphabet] = [root.alphabet]
    table = np.asarray(root.probs)
    for chan, feed in steps:
        names = [a.name for a in axes]
        if feed not in names:
            raise UnknownAxis(f"chain step feeds from {feed!r}, not among {names}")
        i = names.index(feed)
        if axes[i] != chan.input:
            raise ProbabilityError(
                f"channel input alphabet {chan.input.name!r} does not match axis {feed!r}")
        if chan.output.name in names:
            raise ProbabilityError(f"axis name {chan.output.name!r} already present")
        shape = [1] * (table.ndim + 1)
        shape[i] = chan.input.size
        shape[-1] = chan.output.size
        table = table[..., np.newaxis] * chan.rows.reshape(shape)
        axes.append(chan.output)
        cells = int(np.prod([a.size for a in axes], dtype=np.int64))
        if cells > TABLE_CELL_CAP:
            raise TableTooLarge(
                f"composition over {[a.name for a in axes]} needs {cells} cells")
    return JointDist(tuple(axes), table)


def mixture(weights: Dist, components: Sequence[JointDist]) -> JointDist:
    """Stack component joints under a new leading axis with the given weights."""
    if len(components) != weights.alphabet.size:
        raise ProbabilityError("one component joint per weight symbol required")
    first = components[0]
    for c in components[1:]:
        if c.axes != first.axes:
            raise ProbabilityError("mixture components must share identical axes")
    if weights.alphabet.name in first.names:
        raise ProbabilityError(f"axis name {weights.alphabet.name!r} already present")
    stacked = np.stack([c.table for c in components], axis=0)
    stacked = stacked * weights.probs.reshape((-1,) + (1,) * (stacked.ndim - 1))
    return JointDist((weights.alphabet,) + first.axes, stacked)


def push_function(joint: JointDist, arg_axes: Sequence[str], table: np.ndarray,
                  output: Alphabet) -> JointDist:
    """Append a deterministic axis computed from the named argument axes.

    `table` holds output symbol indices, indexed by the argument axes in the
    order given.
    """
    args = tuple(arg_axes)
    idx = tuple(joint.axis(n) for n in args)
    table = np.asarray(table, dtype=np.int64)
    expect = tuple(joint.axes[i].size for i in idx)
    if table.shape != expect:
        raise ProbabilityError(f"function table shape {table.shape}, expected {expect}")
    if table.min() < 0 or table.max() >= output.size:
        raise ProbabilityError(f"function table values outside alphabet {output.name!r}")
    onehot = np.eye(output.size)[table]  # args shape + (out,)
    shape = [1] * (joint.table.ndim + 1)
    for k, i in enumerate(idx):
        shape[i] = expect[k]
    shape[-1] = output.size
    # onehot axes follow arg order; align them with their joint positions
    order = np.argsort(idx)
    aligned = np.transpose(onehot, tuple(order) + (len(args),))
    new_table = joint.table[..., np.newaxis] * aligned.reshape(shape)
    return JointDist(joint.axes + (output,), new_table)
