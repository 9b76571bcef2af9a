"""Spectrum-level dynamics of the recursive swap test.

A successful swap test on two copies of a state keeps its eigenbasis and
reweights the eigenvalues, so the whole protocol can be followed on the
eigenvalue vector alone. This module holds that vector (``Spectrum``), the
generalized form with real-valued multiplicities (``GeneralizedSpectrum``),
and the maps and progress measures defined on them.

Indices passed to :func:`gamma` follow the mathematical convention: the
principal eigenvalue is ``j = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

SUM_TOL = 1e-12
INVARIANT_TOL = 1e-9


class SpectrumError(ValueError):
    """Raised when a vector does not describe a valid (generalized) spectrum."""


class PureTailError(SpectrumError):
    """Raised when an operation needs a non-zero second eigenvalue."""


def _as_float_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    if arr.size < 2:
        raise SpectrumError(f"{name} needs at least two entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise SpectrumError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Descending eigenvalue vector of a state with a unique principal eigenvalue.

    The input is sorted on construction (stable, so equal values keep their
    relative order). Raises :class:`SpectrumError` if the entries are
    negative, do not sum to one, or the top two entries are equal.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = _as_float_vector(self.values, "spectrum")
        arr = arr[np.argsort(-arr, kind="stable")]
        if arr[-1] < 0:
            raise SpectrumError(f"negative eigenvalue {arr[-1]!r}")
        total = arr.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise SpectrumError(f"eigenvalues sum to {total!r}, not 1")
        if not arr[0] > arr[1]:
            raise SpectrumError(
                "principal eigenvalue is degenerate "
                f"(lambda1 = lambda2 = {arr[0]!r})"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def _trusted(cls, arr: np.ndarray) -> "Spectrum":
        # Skips validation; only for outputs of maps that preserve validity.
        obj = object.__new__(cls)
        arr = np.array(arr, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(obj, "values", arr)
        return obj

    @classmethod
    def depolarized(cls, d: int, delta: float) -> "Spectrum":
        """Spectrum of ``(1 - delta) |psi><psi| + delta I / d``."""
        if int(d) != d or d < 2:
            raise SpectrumError(f"dimension must be an integer >= 2, got {d!r}")
        if not 0 <= delta < 1:
            raise SpectrumError(f"delta must lie in [0, 1), got {delta!r}")
        d = int(d)
        vals = np.full(d, delta / d)
        vals[0] = 1.0 - delta + delta / d
        return cls(vals)

    @classmethod
    def general_noisy(cls, eta: float, tail: Sequence[float]) -> "Spectrum":
        """Spectrum of ``(1 - eta) |psi><psi| + eta * tail_state``.

        ``tail`` is the spectrum of the noise state on the orthogonal
        complement of the principal eigenvector.
        """
        tail = np.array(tail, dtype=float).ravel()
        if not 0 <= eta < 1:
            raise SpectrumError(f"eta must lie in [0, 1), got {eta!r}")
        if tail.size == 0 or tail.min() < 0 or abs(tail.sum() - 1) > SUM_TOL:
            raise SpectrumError("tail must be a probability vector")
        if not 1 - eta > eta * tail.max():
            raise SpectrumError("principal eigenvalue is not unique")
        return cls(np.concatenate([[1 - eta], eta * tail]))

    @property
    def dim(self) -> int:
        return self.values.size

    @property
    def lambda1(self) -> float:
        return float(self.values[0])

    @property
    def lambda2(self) -> float:
        return float(self.values[1])

    @property
    def gap(self) -> float:
        return float(self.values[0] - self.values[1])

    @property
    def eta(self) -> float:
        """Distance ``1 - lambda1`` to the principal eigenvector."""
        return float(1.0 - self.values[0])

    @property
    def purity(self) -> float:
        return float(np.dot(self.values, self.values))

    @property
    def is_pure(self) -> bool:
        return self.values[0] == 1.0

    def as_generalized(self) -> "GeneralizedSpectrum":
        return GeneralizedSpectrum(np.ones(self.dim), self.values)

    def __eq__(self, other):
        if not isinstance(other, Spectrum):
            return NotImplemented
        return _same_padded(self.values, other.values)

    def __hash__(self):
        return hash(tuple(np.trim_zeros(self.values, "b")))

    def __repr__(self):
        return f"Spectrum({np.array2string(self.values, precision=6)})"


def _same_padded(a: np.ndarray, b: np.ndarray) -> bool:
    n = max(a.size, b.size)
    return np.array_equal(np.pad(a, (0, n - a.size)), np.pad(b, (0, n - b.size)))


def _f_values(vals: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    if weights is None:
        z = 1.0 + np.dot(vals, vals)
        out = vals * (vals + 1.0) / z
        total = out.sum()
    else:
        z = 1.0 + np.dot(weights, vals * vals)
        out = vals * (vals + 1.0) / z
        total = np.dot(weights, out)
    if abs(total - 1.0) > SUM_TOL:
        raise ArithmeticError(f"normalization drift {total - 1.0:.3e} in F map")
    return out / total


def f_map(s: Spectrum) -> Spectrum:
    """Spectrum left behind by one successful swap test on ``s``."""
    return Spectrum._trusted(_f_values(s.values))


def f_orbit(s: Spectrum, n: int) -> list[Spectrum]:
    """Return ``[s, F(s), ..., F^n(s)]``."""
    out = [s]
    for _ in range(n):
        out.append(f_map(out[-1]))
    return out


def iterate_f(s: Spectrum) -> Iterator[Spectrum]:
    """Yield ``s, F(s), F(F(s)), ...`` forever."""
    while True:
        yield s
        s = f_map(s)


def success_probability(s: Spectrum) -> float:
    """Probability that a swap test on two copies of ``s`` returns ``a = 0``."""
    return 0.5 * (1.0 + s.purity)


def eigen_delta_recurrence(delta: float, d: float) -> tuple[float, float]:
    """One step of the depolarized-noise recurrence.

    Returns ``(delta_next, p)`` where ``p`` is the swap-test success
    probability at noise ``delta`` and ``delta_next`` the noise of the output.
    ``d`` may be any real number >= 2 (an effective dimension).
    """
    if not 0 < delta < 1:
        raise SpectrumError(f"delta must lie in (0, 1), got {delta!r}")
    if not d >= 2:
        raise SpectrumError(f"dimension must be >= 2, got {d!r}")
    c = 1.0 - 1.0 / d
    p = 1.0 - c * delta + 0.5 * c * delta * delta
    return (delta + delta * delta / d) / (2.0 * p), p


def progress_measure(s: Spectrum) -> float:
    """Sum over the non-principal eigenvalues of ``l_j / (l_1 - l_j)``."""
    tail = s.values[1:]
    return float(np.sum(tail / (s.values[0] - tail)))


def gamma(s: Spectrum, j: int) -> float:
    """Single term ``l_j / (l_1 - l_j)`` of the progress measure (``2 <= j <= d``)."""
    if not 2 <= j <= s.dim:
        raise IndexError(f"j must satisfy 2 <= j <= {s.dim}, got {j}")
    lj = s.values[j - 1]
    return float(lj / (s.values[0] - lj))


def gammas(s: Spectrum) -> np.ndarray:
    tail = s.values[1:]
    return tail / (s.values[0] - tail)


def stage_of(s: Spectrum, initial_lambda1: float) -> int:
    """Analysis stage (1, 2 or 3) that a state belongs to.

    Stage 1 lasts while the progress measure exceeds ``1 / initial_lambda1``,
    stage 2 while it exceeds ``1/2``.
    """
    e = progress_measure(s)
    if e > 1.0 / initial_lambda1:
        return 1
    if e > 0.5:
        return 2
    return 3


def random_spectrum(d: int, rng: np.random.Generator, concentration: float = 1.0,
                    min_gap: float = 1e-4) -> Spectrum:
    """Dirichlet-distributed spectrum with a principal gap of at least ``min_gap``."""
    while True:
        v = rng.dirichlet(np.full(d, concentration))
        v = np.sort(v)[::-1]
        if v[0] - v[1] >= min_gap:
            try:
                return Spectrum(v / v.sum())
            except SpectrumError:
                continue


@dataclass(frozen=True, eq=False)
class GeneralizedSpectrum:
    """Eigenvalues ``lam`` with non-negative real multiplicities ``q``.

    ``q[0]`` must be exactly 1, ``lam`` must be non-increasing with a strict
    gap after the first entry, and ``sum(q * lam)`` must equal one.
    """

    q: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        q = _as_float_vector(self.q, "q")
        lam = _as_float_vector(self.lam, "lambda")
        if q.size != lam.size:
            raise SpectrumError("q and lambda must have the same length")
        if q[0] != 1.0:
            raise SpectrumError(f"q[0] must be 1, got {q[0]!r}")
        if q.min() < 0:
            raise SpectrumError("multiplicities must be non-negative")
        if lam[-1] < 0 or np.any(np.diff(lam[1:]) > 0):
            raise SpectrumError("lambda must be non-negative and non-increasing")
        if not lam[0] > lam[1]:
            raise SpectrumError("lambda1 must strictly exceed lambda2")
        total = float(np.dot(q, lam))
        if abs(total - 1.0) > SUM_TOL:
            raise SpectrumError(f"sum(q * lambda) = {total!r}, not 1")
        q.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "lam", lam)

    @property
    def lambda1(self) -> float:
        return float(self.lam[0])

    @property
    def lambda2(self) -> float:
        return float(self.lam[1])

    @property
    def gap(self) -> float:
        return float(self.lam[0] - self.lam[1])

    @property
    def q2(self) -> float:
        return float(self.q[1])

    def __len__(self):
        return self.lam.size

    def _trimmed(self) -> tuple[np.ndarray, np.ndarray]:
        keep = self.lam.size
        while keep > 2 and self.lam[keep - 1] == 0 and self.q[keep - 1] == 0:
            keep -= 1
        return self.q[:keep], self.lam[:keep]

    def __eq__(self, other):
        if not isinstance(other, GeneralizedSpectrum):
            return NotImplemented
        qa, la = self._trimmed()
        qb, lb = other._trimmed()
        return _same_padded(qa, qb) and _same_padded(la, lb)

    def __repr__(self):
        return (
            f"GeneralizedSpectrum(q={np.array2string(self.q, precision=6)}, "
            f"lam={np.array2string(self.lam, precision=6)})"
        )


def s_projection(g: GeneralizedSpectrum) -> GeneralizedSpectrum:
    """Depolarized-form generalized spectrum with the same top two eigenvalues."""
    l1, l2 = g.lambda1, g.lambda2
    if l2 == 0:
        if l1 == 1.0:
            return GeneralizedSpectrum([1.0, 0.0], [1.0, 0.0])
        raise PureTailError("cannot project a spectrum with lambda2 = 0 and lambda1 < 1")
    q2 = (1.0 - l1) / l2
    q, lam = g._trimmed()
    if lam.size == 2 and abs(q[1] - q2) <= SUM_TOL * max(1.0, q2):
        # Already projected; keep it bit-for-bit instead of recomputing q2.
        return g
    return GeneralizedSpectrum([1.0, q2], [l1, l2])


def f_map_generalized(g: GeneralizedSpectrum) -> GeneralizedSpectrum:
    """Successful-swap-test map on a generalized spectrum; ``q`` is unchanged."""
    obj = object.__new__(GeneralizedSpectrum)
    lam = _f_values(g.lam, g.q)
    lam.setflags(write=False)
    object.__setattr__(obj, "q", g.q)
    object.__setattr__(obj, "lam", lam)
    return obj


def dominates(a: GeneralizedSpectrum, b: GeneralizedSpectrum, tol: float = 0.0) -> bool:
    """True if ``a`` is at least as pure as ``b`` in both lambda1 and gap.

    ``tol`` relaxes both comparisons in favour of ``a``.
    """
    return a.lambda1 >= b.lambda1 - tol and a.gap >= b.gap - tol


@dataclass(frozen=True)
class DepolarizedParams:
    """Effective dimension and noise level of a two-entry generalized spectrum."""

    d_eff: float
    delta: float

    def __post_init__(self):
        if not self.d_eff >= 2:
            raise SpectrumError(f"d_eff must be >= 2, got {self.d_eff!r}")
        if not 0 < self.delta < 1:
            raise SpectrumError(f"delta must lie in (0, 1), got {self.delta!r}")

    def to_generalized(self) -> GeneralizedSpectrum:
        l2 = self.delta / self.d_eff
        q2 = self.d_eff - 1.0
        # Equal to 1 - delta + l2; written this way so the sum closes exactly.
        l1 = 1.0 - q2 * l2
        return GeneralizedSpectrum([1.0, q2], [l1, l2])


def to_depolarized_params(g: GeneralizedSpectrum) -> DepolarizedParams:
    """Change of variables ``d_eff = 1 + (1 - l1)/l2``, ``delta = 1 - gap``."""
    q, lam = g._trimmed()
    if lam.size != 2:
        raise SpectrumError("only two-entry (projected) generalized spectra are supported")
    if lam[1] == 0:
        raise PureTailError("d_eff is undefined when lambda2 = 0")
    gap = lam[0] - lam[1]
    return DepolarizedParams(d_eff=(1.0 - gap) / (lam[0] - gap), delta=1.0 - gap)


def s_restricted_step(lambda1: float, gap: float) -> tuple[float, float]:
    """``(lambda1, gap)`` after one F step, for a spectrum in the image of S."""
    z = 1.0 + lambda1 - (1.0 - lambda1) * gap
    return (lambda1 + lambda1 * lambda1) / z, gap * (1.0 + 2.0 * lambda1 - gap) / z


def s_restricted_partials(lambda1: float, gap: float) -> np.ndarray:
    """Closed-form Jacobian of :func:`s_restricted_step`.

    Rows are (lambda1', gap'), columns (d/d lambda1, d/d gap).
    """
    l, g = lambda1, gap
    z2 = (1.0 + l - (1.0 - l) * g) ** 2
    return np.array([
        [((1 - g) * (1 + 2 * l) + (1 + g) * l * l) / z2, l * (1 - l * l) / z2],
        [(1 - g) ** 2 * g / z2, ((1 - g) ** 2 + (3 - 2 * g - g * g) * l + 2 * l * l) / z2],
    ])


def random_generalized_spectrum(rng: np.random.Generator, max_len: int = 8,
                                min_gap: float = 1e-4) -> GeneralizedSpectrum:
    """Random ``(q, lam)`` with real multiplicities in ``[0.1, 10)`` after the first."""
    while True:
        m = int(rng.integers(2, max_len + 1))
        q = np.concatenate(([1.0], rng.uniform(0.1, 10.0, m - 1)))
        lam = np.sort(rng.exponential(1.0, m))[::-1]
        lam = lam / np.dot(q, lam)
        if lam[0] - lam[1] < min_gap:
            continue
        try:
            return GeneralizedSpectrum(q, lam)
        except SpectrumError:
            continue


def flat_tail_spectrum(lambda1: float, lambda2: float) -> Spectrum:
    """Spectrum with top eigenvalues ``lambda1 > lambda2`` and as many copies
    of ``lambda2`` as fit below them, plus one smaller remainder entry."""
    if not 0 < lambda2 < lambda1 <= 1:
        raise SpectrumError(f"need 0 < lambda2 < lambda1 <= 1, got {lambda1!r}, {lambda2!r}")
    m = int(math.floor((1.0 - lambda1) / lambda2 + 1e-9))
    rest = 1.0 - lambda1 - m * lambda2
    vals = np.array([lambda1] + [lambda2] * m + ([rest] if rest > 1e-12 else []))
    return Spectrum(vals / vals.sum())
