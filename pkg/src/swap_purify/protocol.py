"""Stochastic simulation of the recursive swap-test purification protocol.

``Purify(0)`` takes one fresh copy of the input state. ``Purify(k)`` keeps
running swap tests on pairs of ``Purify(k - 1)`` outputs until one succeeds,
and each failed test throws both inputs away. Conditioned on success the
level-k state is deterministic, so in exact mode only the retry counts are
random. A level-k call makes ``Geometric(p_{k-1})`` attempts, and each attempt
spawns two level-(k - 1) calls.

Randomness for a level-k call comes from :func:`swap_purify.rng.uniform` keyed
by ``(seed, replica, k, call_index)``. ``call_index`` counts the level-k calls
of one replica from left to right in the attempt tree. Depth-first recursion
creates the level-k calls in exactly that order, so the vectorized
level-by-level expansion (:func:`attempt_tree`) and the literal recursion
(:func:`replay_depth_first`) draw identical trees.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import density_oracle as dm
from .rng import geometric, uniform, validate_seed
from .spectrum import (
    Spectrum,
    SpectrumError,
    _f_values,
    f_orbit,
    progress_measure,
    stage_of,
    success_probability,
)

EXACT = "exact"
ORACLE = "oracle"
_MODE_ALIASES = {
    "exact": EXACT,
    "exact-spectrum": EXACT,
    "oracle": ORACLE,
    "density": ORACLE,
    "density-oracle": ORACLE,
}
MAX_ORACLE_LEVELS = 4
MAX_LEVELS = 100_000
# Upper bound on calls materialized at once by the vectorized expansion.
_CHUNK_CALLS = 4_000_000


class ProtocolError(ValueError):
    pass


def _initial_spectrum(initial) -> Spectrum:
    if isinstance(initial, Spectrum):
        return initial
    if isinstance(initial, dm.DensityMatrix):
        return dm.spectrum_of(initial)
    raise ProtocolError(f"unsupported initial state type {type(initial).__name__}")


def levels_to_epsilon(s: Spectrum, epsilon: float, max_levels: int = MAX_LEVELS) -> int:
    """Smallest ``n`` with ``1 - F^n(s)[0] <= epsilon``."""
    if not 0 < epsilon < 1:
        raise ProtocolError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    vals = s.values
    n = 0
    while 1.0 - vals[0] > epsilon:
        if n >= max_levels:
            raise ProtocolError(f"epsilon not reached within {max_levels} levels")
        vals = _f_values(vals)
        n += 1
    return n


def p_sequence(s: Spectrum, n: int) -> np.ndarray:
    """Success probabilities ``p_0, ..., p_{n-1}`` along the F-orbit of ``s``."""
    return np.array([success_probability(x) for x in f_orbit(s, n)[:n]])


def expected_samples_closed_form(initial, n: int) -> float:
    """Expected base copies for ``n`` levels, ``2**n / prod(p_k)``."""
    if n < 0:
        raise ProtocolError(f"levels must be non-negative, got {n}")
    return float(2.0 ** n / np.prod(p_sequence(_initial_spectrum(initial), n)))


@dataclass(frozen=True)
class ProtocolConfig:
    """One protocol run. Give either ``levels`` or ``target_epsilon``."""

    initial: Spectrum | dm.DensityMatrix
    levels: int | None = None
    mode: str = EXACT
    seed: int = 0
    target_epsilon: float | None = None
    replica: int = 0

    def __post_init__(self):
        mode = _MODE_ALIASES.get(self.mode)
        if mode is None:
            raise ProtocolError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "seed", validate_seed(self.seed))
        if self.replica < 0:
            raise ProtocolError("replica index must be non-negative")
        if self.target_epsilon is not None:
            if self.levels is not None:
                raise ProtocolError("levels is derived when target_epsilon is set")
            levels = levels_to_epsilon(self.spectrum, self.target_epsilon)
            object.__setattr__(self, "levels", levels)
        if self.levels is None or int(self.levels) != self.levels or self.levels < 0:
            raise ProtocolError(f"levels must be a non-negative integer, got {self.levels!r}")
        object.__setattr__(self, "levels", int(self.levels))

    @property
    def spectrum(self) -> Spectrum:
        return _initial_spectrum(self.initial)


@dataclass(frozen=True)
class LevelRecord:
    k: int
    spectrum: Spectrum
    p: float
    e: float
    gap: float
    eta: float
    stage: int
    delta: float | None = None


@dataclass(frozen=True)
class TrajectoryRecord:
    levels: tuple[LevelRecord, ...]
    states: tuple[dm.DensityMatrix, ...] | None = None

    @property
    def final(self) -> LevelRecord:
        return self.levels[-1]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def stage_counts(self) -> tuple[int, int, int]:
        """Number of swap-test levels applied while in stage 1, 2 and 3."""
        counts = [0, 0, 0]
        for rec in self.levels[:-1]:
            counts[rec.stage - 1] += 1
        return counts[0], counts[1], counts[2]


def _flat_tail_delta(s: Spectrum) -> float | None:
    tail = s.values[1:]
    if np.all(tail == tail[0]):
        return 1.0 - s.gap
    return None


def build_trajectory(spectra: Sequence[Spectrum], ps: Sequence[float] | None = None,
                     states=None) -> TrajectoryRecord:
    l1_0 = spectra[0].lambda1
    recs = []
    for k, s in enumerate(spectra):
        p = success_probability(s) if ps is None else float(ps[k])
        recs.append(LevelRecord(
            k=k, spectrum=s, p=p, e=progress_measure(s), gap=s.gap, eta=s.eta,
            stage=stage_of(s, l1_0), delta=_flat_tail_delta(s),
        ))
    return TrajectoryRecord(tuple(recs), None if states is None else tuple(states))


def trajectory(initial, n: int) -> TrajectoryRecord:
    """Deterministic F-orbit of ``initial`` over ``n`` levels."""
    return build_trajectory(f_orbit(_initial_spectrum(initial), n))


@dataclass(frozen=True)
class SampleLedger:
    """Copy accounting of one run.

    ``attempts_per_level[k - 1]`` and ``calls_per_level[k - 1]`` refer to
    level ``k`` (``1 <= k <= n``); ``restarts`` counts failed swap tests.
    """

    base_copies_consumed: int
    attempts_per_level: tuple[int, ...] = ()
    calls_per_level: tuple[int, ...] = ()
    restarts: int = 0

    @property
    def retry_factors(self) -> tuple[float, ...]:
        return tuple(a / c for a, c in zip(self.attempts_per_level, self.calls_per_level))

    def consistent(self) -> bool:
        """Leaf count and call counts agree with the attempt counts."""
        n = len(self.attempts_per_level)
        if n == 0:
            return self.base_copies_consumed == 1 and self.restarts == 0
        if self.calls_per_level[-1] != 1 or self.base_copies_consumed != 2 * self.attempts_per_level[0]:
            return False
        for k in range(1, n):
            if self.calls_per_level[k - 1] != 2 * self.attempts_per_level[k]:
                return False
        return self.restarts == sum(self.attempts_per_level) - sum(self.calls_per_level)


@dataclass
class AttemptTree:
    """Per-replica totals of a batch of attempt trees.

    ``attempts[r, k - 1]`` / ``calls[r, k - 1]`` are totals at level ``k``.
    With ``keep=True`` the individual draws are kept: ``draws[k]`` holds the
    attempts of every level-k call (replica-major, then call index) and
    ``offsets[k][r]`` the position of replica ``r``'s first call.
    """

    replicas: np.ndarray
    attempts: np.ndarray
    calls: np.ndarray
    draws: dict = field(default_factory=dict)
    offsets: dict = field(default_factory=dict)

    @property
    def base_copies(self) -> np.ndarray:
        if self.attempts.shape[1] == 0:
            return np.ones(self.replicas.size, dtype=np.int64)
        return 2 * self.attempts[:, 0]

    def ledger(self, i: int = 0) -> SampleLedger:
        att = tuple(int(a) for a in self.attempts[i])
        calls = tuple(int(c) for c in self.calls[i])
        return SampleLedger(int(self.base_copies[i]), att, calls, sum(att) - sum(calls))


def attempt_tree(ps: Sequence[float], seed: int, replicas, keep: bool = False) -> AttemptTree:
    """Expand the attempt trees of ``replicas`` level by level (vectorized).

    ``ps[k]`` is the success probability of a swap test on two level-k states.
    """
    ps = np.asarray(ps, dtype=float)
    n = ps.size
    reps = np.asarray(replicas, dtype=np.int64).ravel()
    r = reps.size
    attempts = np.zeros((r, n), dtype=np.int64)
    calls = np.zeros((r, n), dtype=np.int64)
    out = AttemptTree(reps, attempts, calls)
    call_rep = np.arange(r)
    call_idx = np.zeros(r, dtype=np.int64)
    for k in range(n, 0, -1):
        calls[:, k - 1] = np.bincount(call_rep, minlength=r)
        g = geometric(uniform(seed, reps[call_rep], k, call_idx), ps[k - 1])
        per_rep = np.bincount(call_rep, weights=g, minlength=r).astype(np.int64)
        attempts[:, k - 1] = per_rep
        if keep:
            out.draws[k] = g
            out.offsets[k] = np.cumsum(calls[:, k - 1]) - calls[:, k - 1]
        if k > 1:
            children = 2 * per_rep
            child_rep = np.repeat(call_rep, 2 * g)
            start = np.cumsum(children) - children
            call_idx = np.arange(child_rep.size) - start[child_rep]
            call_rep = child_rep
    return out


@dataclass(frozen=True)
class DepthFirstResult:
    base_copies: int
    attempts: tuple[int, ...]
    calls: tuple[int, ...]
    max_registers: int

    def ledger(self) -> SampleLedger:
        return SampleLedger(self.base_copies, self.attempts, self.calls,
                            sum(self.attempts) - sum(self.calls))


def replay_depth_first(n: int, draw: Callable[[int, int], int]) -> DepthFirstResult:
    """Run ``Purify(n)`` as literal depth-first recursion.

    ``draw(k, call_index)`` gives the number of swap tests made by a level-k
    call. Quantum registers are tracked as a stack: a finished ``Purify(k-1)``
    output waits in one register for its partner, a swap test releases the
    traced-out register, and a failed test also releases the output. The
    ancilla qubit is not counted.
    """
    counters = [0] * (n + 1)
    attempts = [0] * n
    calls = [0] * n
    state = {"live": 0, "peak": 0, "copies": 0}

    def purify(k: int) -> None:
        idx = counters[k]
        counters[k] += 1
        if k == 0:
            state["copies"] += 1
            state["live"] += 1
            if state["live"] > state["peak"]:
                state["peak"] = state["live"]
            return
        g = int(draw(k, idx))
        calls[k - 1] += 1
        attempts[k - 1] += g
        for t in range(g):
            purify(k - 1)
            purify(k - 1)
            state["live"] -= 1
            if t < g - 1:
                state["live"] -= 1

    purify(n)
    return DepthFirstResult(state["copies"], tuple(attempts), tuple(calls), state["peak"])


def hashed_draw(ps: Sequence[float], seed: int, replica: int) -> Callable[[int, int], int]:
    """Per-call draw straight from the counter-based generator (slow, scalar)."""
    return lambda k, idx: int(geometric(uniform(seed, replica, k, idx), ps[k - 1])[()])


def tree_draw(tree: AttemptTree, i: int) -> Callable[[int, int], int]:
    """Per-call draw looked up in a kept :class:`AttemptTree` for replica ``i``."""
    return lambda k, idx: tree.draws[k][tree.offsets[k][i] + idx]


def run_exact(config: ProtocolConfig) -> tuple[TrajectoryRecord, SampleLedger]:
    """Exact-spectrum run: deterministic orbit plus one sampled attempt tree."""
    if config.mode != EXACT:
        raise ProtocolError("run_exact needs mode='exact'")
    spectra = f_orbit(config.spectrum, config.levels)
    ps = [success_probability(s) for s in spectra]
    tree = attempt_tree(ps[:-1], config.seed, [config.replica])
    return build_trajectory(spectra, ps), tree.ledger(0)


def run_density(config: ProtocolConfig) -> tuple[TrajectoryRecord, SampleLedger]:
    """Run the protocol on explicit density matrices.

    Every swap test goes through :func:`density_oracle.swap_test_channel` and
    its outcome bit is drawn from the channel's branch probability, keyed by
    ``(seed, replica, k, call_index, attempt)``.
    """
    if config.mode != ORACLE:
        raise ProtocolError("run_density needs mode='oracle'")
    n = config.levels
    rho0 = config.initial
    if isinstance(rho0, Spectrum):
        rho0 = dm.diagonal_state(rho0)
    if rho0.dim > dm.MAX_DIM or n > MAX_ORACLE_LEVELS:
        raise ProtocolError(
            f"oracle mode supports d <= {dm.MAX_DIM} and n <= {MAX_ORACLE_LEVELS}, "
            f"got d={rho0.dim}, n={n}"
        )
    seed, replica = config.seed, config.replica
    counters = [0] * (n + 1)
    attempts = [0] * n
    calls = [0] * n
    states: list = [rho0] + [None] * n
    probs: list = [None] * (n + 1)
    copies = 0

    def purify(k: int) -> dm.DensityMatrix:
        nonlocal copies
        idx = counters[k]
        counters[k] += 1
        if k == 0:
            copies += 1
            return rho0
        calls[k - 1] += 1
        t = 0
        while True:
            a = purify(k - 1)
            b = purify(k - 1)
            good, _ = dm.swap_test_channel(a, b)
            attempts[k - 1] += 1
            if probs[k - 1] is None:
                probs[k - 1] = good.probability
            if uniform(seed, replica, k, idx, t)[()] < good.probability:
                out = good.post_state
                if states[k] is None:
                    states[k] = out
                return out
            t += 1

    purify(n)
    probs[n] = 0.5 * (1.0 + states[n].purity())
    spectra = [dm.spectrum_of(s) for s in states]
    ledger = SampleLedger(copies, tuple(attempts), tuple(calls), sum(attempts) - sum(calls))
    return build_trajectory(spectra, probs, states), ledger


def run(config: ProtocolConfig) -> tuple[TrajectoryRecord, SampleLedger]:
    return run_exact(config) if config.mode == EXACT else run_density(config)


def run_to_epsilon(initial, epsilon: float, seed: int = 0, replica: int = 0):
    """Recurse just deep enough that ``1 - lambda1 <= epsilon``.

    Returns ``(levels_used, trajectory, ledger)``; zero levels when the input
    already meets the target.
    """
    s = _initial_spectrum(initial)
    config = ProtocolConfig(s, mode=EXACT, seed=seed, target_epsilon=epsilon, replica=replica)
    traj, ledger = run_exact(config)
    return config.levels, traj, ledger


def streaming_memory_trace(config: ProtocolConfig) -> int:
    """Peak number of d-dimensional registers held by the depth-first schedule.

    The single ancilla qubit of the swap test is not included.
    """
    if config.mode != EXACT:
        raise ProtocolError("streaming_memory_trace needs mode='exact'")
    ps = p_sequence(config.spectrum, config.levels)
    tree = attempt_tree(ps, config.seed, [config.replica], keep=True)
    return replay_depth_first(config.levels, tree_draw(tree, 0)).max_registers


@dataclass(frozen=True)
class MonteCarloResult:
    p_sequence: np.ndarray
    copies: np.ndarray
    attempts: np.ndarray
    calls: np.ndarray

    @property
    def replicas(self) -> int:
        return self.copies.size

    @property
    def mean(self) -> float:
        return float(self.copies.mean())

    @property
    def std(self) -> float:
        return float(self.copies.std(ddof=1)) if self.replicas > 1 else 0.0

    @property
    def stderr(self) -> float:
        return self.std / np.sqrt(self.replicas)

    def retry_factor_means(self) -> np.ndarray:
        """Mean swap tests per call at each level, pooled over replicas."""
        return self.attempts.sum(axis=0) / self.calls.sum(axis=0)

    def retry_factor_stderr(self) -> np.ndarray:
        ratio = self.attempts / self.calls
        return ratio.std(axis=0, ddof=1) / np.sqrt(self.replicas)


def monte_carlo(initial, n: int, replicas: int, seed: int = 0, first_replica: int = 0) -> MonteCarloResult:
    """Sample the base-copy count of ``replicas`` independent exact-mode runs."""
    s = _initial_spectrum(initial)
    seed = validate_seed(seed)
    ps = p_sequence(s, n)
    per_replica = 2.0 ** n / np.prod(ps)
    chunk = max(1, int(_CHUNK_CALLS / max(per_replica / 2.0, 1.0)))
    copies, att, calls = [], [], []
    for start in range(first_replica, first_replica + replicas, chunk):
        stop = min(start + chunk, first_replica + replicas)
        tree = attempt_tree(ps, seed, np.arange(start, stop))
        copies.append(tree.base_copies)
        att.append(tree.attempts)
        calls.append(tree.calls)
    if not copies:
        raise SpectrumError("replicas must be positive")
    return MonteCarloResult(ps, np.concatenate(copies), np.vstack(att), np.vstack(calls))


def density_monte_carlo(initial, n: int, replicas: int, seed: int = 0,
                        first_replica: int = 0) -> MonteCarloResult:
    """Same as :func:`monte_carlo` but every run goes through the density oracle."""
    copies, att, calls = [], [], []
    ps = None
    for r in range(first_replica, first_replica + replicas):
        traj, ledger = run_density(ProtocolConfig(initial, n, ORACLE, seed, replica=r))
        if ps is None:
            ps = np.array([rec.p for rec in traj.levels[:-1]])
        copies.append(ledger.base_copies_consumed)
        att.append(ledger.attempts_per_level)
        calls.append(ledger.calls_per_level)
    return MonteCarloResult(
        ps, np.array(copies), np.array(att, dtype=np.int64).reshape(replicas, n),
        np.array(calls, dtype=np.int64).reshape(replicas, n),
    )
