"""Closed-form bounds on levels and sample counts for recursive swap-test purification.

Everything here is a pure formula of ``(lambda1, lambda2)`` or
``(lambda1, gap)`` and a target infidelity ``epsilon``. Piecewise bounds
record which branch fired in ``BoundReport.case_taken``. Region boundaries
follow the literal inequalities (``gap >= 2/3`` goes to the first branch, and
so on) with no tolerance, so inputs just either side of a boundary select
adjacent cases.

Asymptotic constants are pinned to explicit values so the bounds can be
checked against simulation. Reports built that way carry
``constants_instantiated=True``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

from .spectrum import Spectrum, progress_measure

LN2 = math.log(2.0)
E4 = math.e ** 4
# Floors of ratios such as 0.1/0.05 must not lose an integer to rounding.
_FLOOR_SNAP = 1e-9


class BoundDomainError(ValueError):
    pass


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound.

    ``integral_value`` is what the bound becomes once the level count it is
    built on is rounded up to an integer (for level bounds, ``ceil(value)``).
    It equals ``value`` when no such rounding is involved.
    """

    name: str
    value: float
    case_taken: str
    inputs: dict
    integral_value: float | None = None
    caveats: tuple[str, ...] = ()
    constants_instantiated: bool = False
    loose: bool = False
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.integral_value is None:
            object.__setattr__(self, "integral_value", self.value)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["caveats"] = list(self.caveats)
        return out


def _check_pair(lambda1: float, lambda2: float, epsilon: float | None) -> None:
    if not 0 < lambda2 < lambda1:
        raise BoundDomainError(f"need 0 < lambda2 < lambda1, got {lambda1!r}, {lambda2!r}")
    if lambda1 + lambda2 > 1 + 1e-12:
        raise BoundDomainError(f"lambda1 + lambda2 = {lambda1 + lambda2!r} exceeds 1")
    if epsilon is not None and not 0 < epsilon < 1 - lambda1:
        raise BoundDomainError(f"need 0 < epsilon < 1 - lambda1 = {1 - lambda1!r}, got {epsilon!r}")


def f_penalty(lambda1: float, lambda2: float) -> float:
    """Extra levels needed when the gap is small.

    Minimum of ``1/D + 2 ln(1/D)`` and
    ``((1 - l1)/l2 + 3) ln(1 + l2/(D (1 - D))) + 5 ln((1 - D)/l2)`` with
    ``D = l1 - l2``.
    """
    _check_pair(lambda1, lambda2, None)
    gap = lambda1 - lambda2
    first = 1.0 / gap + 2.0 * math.log(1.0 / gap)
    second = ((1.0 - lambda1) / lambda2 + 3.0) * math.log1p(lambda2 / (gap * (1.0 - gap))) \
        + 5.0 * math.log((1.0 - gap) / lambda2)
    return min(first, second)


def levels_upper_bound(lambda1: float, lambda2: float, epsilon: float) -> BoundReport:
    """Number of levels after which ``1 - lambda1 <= epsilon`` is guaranteed."""
    _check_pair(lambda1, lambda2, epsilon)
    gap = lambda1 - lambda2
    inputs = {"lambda1": lambda1, "lambda2": lambda2, "gap": gap, "epsilon": epsilon}
    details = {}
    if gap >= 2.0 / 3.0:
        case = "gap>=2/3"
        value = math.log2((1.0 - lambda1) / ((2.0 * gap - 1.0) * epsilon))
    else:
        value = math.log2((1.0 - lambda1) / ((1.0 - gap) * epsilon)) + 5.0
        if gap >= 1.0 / 3.0:
            case = "1/3<=gap<2/3"
        else:
            case = "gap<1/3"
            f = f_penalty(lambda1, lambda2)
            details["f"] = f
            value += f
    return BoundReport("levels_upper_bound", value, case, inputs,
                       integral_value=float(max(0, math.ceil(value))), details=details)


def sample_upper_bound_proof1(lambda1: float, lambda2: float, epsilon: float) -> BoundReport:
    """Expected-copies bound built on the depolarized reduction.

    The high-gap branch is ``9 (1 - l1)/eps``; otherwise
    ``9 (1 - l1) 4**(5 + f)/eps``. Both come from ``C(n)`` at the real-valued
    level count ``L`` of :func:`levels_upper_bound`. Since the protocol runs
    ``ceil(L)`` levels, each extra fractional level can double the cost, and
    ``integral_value`` carries that factor ``2**(ceil(L) - L)``.
    """
    _check_pair(lambda1, lambda2, epsilon)
    gap = lambda1 - lambda2
    inputs = {"lambda1": lambda1, "lambda2": lambda2, "gap": gap, "epsilon": epsilon}
    levels = levels_upper_bound(lambda1, lambda2, epsilon).value
    rounding = 2.0 ** (math.ceil(levels) - levels) if levels > 0 else 1.0
    if gap >= 2.0 / 3.0:
        case = "gap>=2/3"
        value = 9.0 * (1.0 - lambda1) / epsilon
        details = {}
    else:
        case = "gap<2/3"
        f = f_penalty(lambda1, lambda2)
        value = 9.0 * (1.0 - lambda1) * 4.0 ** (5.0 + f) / epsilon
        details = {"f": f}
    details["levels_real"] = levels
    return BoundReport(
        "sample_upper_bound_proof1", value, case, inputs,
        integral_value=value * rounding,
        caveats=("value assumes a real-valued level count",),
        constants_instantiated=True, details=details,
    )


def sample_upper_bound_proof2(lambda1: float, delta_gap: float, epsilon: float) -> BoundReport:
    """Expected-copies bound from the three-stage analysis.

    With ``X = (1 - l1)/gap``:

    * ``l1 >= 2/3``: ``2 e**4 X / eps``;
    * ``X <= 1/l1``: ``(e**4/eps) 4**(2 ln2 X + (5/2 + 1/ln2) ln X + 2 + 5 ln2)``;
    * otherwise ``(e**4/eps) 4**((1/l1 - 1)(ln(X l1) + 2 ln2) + (5/2) ln X
      + log2(1/l1) + 3 + 7 ln2)``.

    The additive constants come from the ceilings in the stage-length
    bounds. The analysis assumes the run finishes in stage three, which
    ``eps <= 1/3`` guarantees; above that the report is flagged ``loose``.
    """
    _check_pair(lambda1, lambda1 - delta_gap, epsilon)
    x = (1.0 - lambda1) / delta_gap
    inputs = {"lambda1": lambda1, "lambda2": lambda1 - delta_gap, "gap": delta_gap, "epsilon": epsilon}
    caveats = ["additive level constants instantiated from stage-length ceilings"]
    loose = epsilon > 1.0 / 3.0
    if loose:
        caveats.append("epsilon > 1/3: run may not reach stage three, bound is loose")
    if lambda1 >= 2.0 / 3.0:
        case = "lambda1>=2/3"
        exponent = None
        value = 2.0 * E4 * x / epsilon
    elif x <= 1.0 / lambda1:
        case = "X<=1/lambda1"
        exponent = 2.0 * LN2 * x + (2.5 + 1.0 / LN2) * math.log(x) + (2.0 + 5.0 * LN2)
        value = E4 / epsilon * 4.0 ** exponent
    else:
        case = "X>1/lambda1"
        exponent = (1.0 / lambda1 - 1.0) * (math.log(x * lambda1) + 2.0 * LN2) \
            + 2.5 * math.log(x) + math.log2(1.0 / lambda1) + (3.0 + 7.0 * LN2)
        value = E4 / epsilon * 4.0 ** exponent
    return BoundReport(
        "sample_upper_bound_proof2", value, case, inputs, caveats=tuple(caveats),
        constants_instantiated=True, loose=loose, details={"X": x, "exponent": exponent},
    )


class StageLengths(NamedTuple):
    l1: int
    l2: float
    t3: int


def stage_lengths(initial: Spectrum, epsilon: float) -> StageLengths:
    """Bounds on the levels spent in each stage of the progress measure.

    Stage one ends once ``E <= 1/lambda1`` of the input, stage two once
    ``E <= 1/2``. A stage whose exit condition already holds gets 0. Stage
    two starts from ``E = 1/lambda1`` when stage one ran, and stage three
    from ``E = 1/2`` when stage two ran.
    """
    if not 0 < epsilon < 1:
        raise BoundDomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    e = progress_measure(initial)
    l1_0 = initial.lambda1
    if e > 1.0 / l1_0:
        l1 = math.ceil((1.0 / l1_0 + 1.5) * math.log(e * l1_0))
        e2 = 1.0 / l1_0
    else:
        l1 = 0
        e2 = e
    if e2 > 0.5:
        l2 = 2.0 * e2 * LN2 + (1.0 + 2.5 * LN2) * math.ceil(1.0 + math.log(e2) / LN2)
        e3 = 0.5
    else:
        l2 = 0.0
        e3 = e2
    t3 = max(0, math.ceil(math.log2(math.e ** 2 * e3 / epsilon))) if e3 > 0 else 0
    return StageLengths(int(l1), float(l2), int(t3))


_LEADING_ONLY = ("leading term only; o(1/epsilon) correction omitted",)


def lower_bound_lambda1(lambda1: float, epsilon: float) -> BoundReport:
    """Worst-case copies over states with principal eigenvalue ``lambda1``."""
    if not 0.5 < lambda1 <= 1:
        raise BoundDomainError(f"needs lambda1 > 1/2, got {lambda1!r}")
    if not epsilon > 0:
        raise BoundDomainError("epsilon must be positive")
    value = (1.0 - lambda1) / ((2.0 * lambda1 - 1.0) ** 2 * epsilon)
    return BoundReport("lower_bound_lambda1", value, "lambda1>1/2",
                       {"lambda1": lambda1, "epsilon": epsilon}, caveats=_LEADING_ONLY)


def lower_bound_gap(delta_gap: float, epsilon: float) -> BoundReport:
    """Worst-case copies over states with spectral gap ``delta_gap``."""
    if not 0 < delta_gap <= 1:
        raise BoundDomainError(f"gap must lie in (0, 1], got {delta_gap!r}")
    if not epsilon > 0:
        raise BoundDomainError("epsilon must be positive")
    value = (1.0 - delta_gap) / (2.0 * delta_gap ** 2 * epsilon)
    return BoundReport("lower_bound_gap", value, "gap>0",
                       {"gap": delta_gap, "epsilon": epsilon}, caveats=_LEADING_ONLY)


def embedding_condition(lambda1: float, lambda2: float, dim: int | None = None) -> bool:
    """``lambda1 + (d - 1) lambda2 >= 1`` for a flat tail of size ``d - 1``.

    ``dim`` defaults to the smallest integer size ``ceil(1 + (1 - l1)/l2)``.
    """
    if dim is None:
        dim = math.ceil(1.0 + (1.0 - lambda1) / lambda2 - _FLOOR_SNAP)
    return lambda1 + (dim - 1) * lambda2 >= 1.0 - 1e-12


def lower_bound_two_eigs(lambda1: float, lambda2: float, epsilon: float) -> BoundReport:
    """Worst-case copies over states with the given top two eigenvalues.

    ``details`` holds the embedding dimension ``d'``, depolarizing strength
    ``delta`` and weight ``mu`` of the hard instance.
    """
    if not 0 < lambda2 < lambda1:
        raise BoundDomainError(f"need 0 < lambda2 < lambda1, got {lambda1!r}, {lambda2!r}")
    if lambda1 + lambda2 > 1 + 1e-12:
        raise BoundDomainError(f"lambda1 + lambda2 = {lambda1 + lambda2!r} exceeds 1")
    if not epsilon > 0:
        raise BoundDomainError("epsilon must be positive")
    gap = lambda1 - lambda2
    d_prime = math.floor((1.0 - lambda1) / lambda2 + _FLOOR_SNAP) + 1
    mu = lambda1 + (d_prime - 1) * lambda2
    delta = d_prime * lambda2 / mu
    if not (0.0 <= mu <= 1.0 + 1e-12 and 0.0 <= delta <= 1.0 + 1e-12):
        raise ArithmeticError(f"embedding parameters out of range: mu={mu!r}, delta={delta!r}")
    d_min = math.ceil(1.0 + (1.0 - lambda1) / lambda2 - _FLOOR_SNAP)
    if d_prime > d_min or not embedding_condition(lambda1, lambda2, d_min):
        raise ArithmeticError("embedding dimension condition violated")
    value = (1.0 - lambda1) / (4.0 * gap ** 2 * epsilon)
    return BoundReport(
        "lower_bound_two_eigs", value, "lambda2>0",
        {"lambda1": lambda1, "lambda2": lambda2, "gap": gap, "epsilon": epsilon},
        caveats=_LEADING_ONLY,
        details={"d_prime": d_prime, "delta": delta, "mu": mu, "d_min": d_min},
    )


def all_bounds(s: Spectrum, epsilon: float) -> dict[str, BoundReport | None]:
    """Every bound that applies to ``s``; inapplicable ones map to ``None``."""
    l1, l2 = s.lambda1, s.lambda2
    out: dict[str, BoundReport | None] = {}

    def attempt(name, fn, *args):
        try:
            out[name] = fn(*args)
        except BoundDomainError:
            out[name] = None

    attempt("levels_upper_bound", levels_upper_bound, l1, l2, epsilon)
    attempt("sample_upper_bound_proof1", sample_upper_bound_proof1, l1, l2, epsilon)
    attempt("sample_upper_bound_proof2", sample_upper_bound_proof2, l1, l1 - l2, epsilon)
    attempt("lower_bound_lambda1", lower_bound_lambda1, l1, epsilon)
    attempt("lower_bound_gap", lower_bound_gap, l1 - l2, epsilon)
    attempt("lower_bound_two_eigs", lower_bound_two_eigs, l1, l2, epsilon)
    return out
