"""Moments and distribution of the elapsed time ``T`` between observing the
chain in transient state ``i`` and later in transient state ``j``.

``T`` is modelled as the first conditional passage ``i -> j`` followed by
``N - 1`` conditional returns to ``j``, where the total number of visits
``N`` is geometric: ``P(N = n) = Hjj**(n-1) * (1 - Hjj)``. Equivalently the
observation of ``j`` is the chain's last visit there, which gives the
distribution ``P(T = t) = (Q^t)_ij (1 - Hjj) / H_ij``.

Three variance modes are offered:

``"paper"``
    the published closed forms, evaluated verbatim (including the
    ``(n-1)**2`` weight on the return-time variance). Known to disagree with
    the distribution and with simulation.
``"series"``
    the law-of-total-variance sums evaluated term by term and truncated once
    ``Hjj**n < series_epsilon``. The headline value uses the ``(n-1)`` weight
    on the return-time variance; the ``(n-1)**2`` variant is kept alongside.
``"corrected"``
    ``v_ij + v_jj h/(1-h) + tau_jj**2 h/(1-h)**2`` with ``h = Hjj``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import ChainStructure
from .errors import ChainValidationError, ImpossibleObservationError, TruncationError
from .passage import PassageSummary

__all__ = [
    "VARIANCE_MODES",
    "SERIES_CAP",
    "ElapsedQuery",
    "ElapsedMoments",
    "expected_elapsed",
    "variance_elapsed",
    "distribution_of_elapsed",
    "distribution_moments",
    "series_terms",
    "paper_closed_variance",
]

VARIANCE_MODES = ("paper", "series", "corrected")
_ALIASES = {"paper-closed": "paper", "corrected-closed": "corrected"}
SERIES_CAP = 10_000_000
DIST_CAP = 10_000_000


def _mode(name: str) -> str:
    mode = _ALIASES.get(name, name)
    if mode not in VARIANCE_MODES:
        raise ChainValidationError(
            f"unknown variance mode {name!r}; choose from {', '.join(VARIANCE_MODES)}"
        )
    return mode


@dataclass(frozen=True)
class ElapsedQuery:
    """Observation pair ``(i, j)`` plus computation options."""

    i: int
    j: int
    variance_mode: str = "corrected"
    series_epsilon: float = 1e-14
    tmax: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "variance_mode", _mode(self.variance_mode))
        if not 0.0 < self.series_epsilon < 1.0:
            raise ChainValidationError("series_epsilon must lie in (0, 1)")
        if self.tmax is not None and self.tmax < 1:
            raise ChainValidationError("tmax must be >= 1")


@dataclass(frozen=True)
class ElapsedMoments:
    """E(T) and V(T) for one query.

    ``defined`` is False when the observation pair is impossible; ``reason``
    then says why and the numeric fields are None. ``variance`` is None for
    results of :func:`expected_elapsed`.
    """

    expectation: float | None
    variance: float | None
    mode: str
    defined: bool = True
    reason: str | None = None
    truncation_n: int | None = None
    variance_as_printed: float | None = None


def _segments(ps: PassageSummary, q: ElapsedQuery, recurrence_mode: str):
    if q.j != ps.j:
        raise ChainValidationError(
            f"query targets state {q.j} but the passage summary is for state {ps.j}"
        )
    if q.i not in ps.transient:
        raise ChainValidationError(
            f"state {q.i} is not transient; both observed states must be transient"
        )
    first = ps.first_segment(q.i, recurrence_mode)
    if first is None:
        return None
    h = ps.Hjj
    rec = ps.recurrence[recurrence_mode]
    tjj, vjj = (rec.tau, rec.var) if rec is not None else (0.0, 0.0)
    return first[0], first[1], tjj, vjj, h


def _undefined(ps, q, mode):
    if q.i == q.j:
        reason = "no-return: state j can never be revisited"
    else:
        reason = "unreachable: state j cannot be reached from state i"
    return ElapsedMoments(None, None, mode, defined=False, reason=reason)


def _expectation(tij, tjj, h):
    return tij + tjj * h / (1.0 - h)


def expected_elapsed(ps: PassageSummary, q: ElapsedQuery) -> ElapsedMoments:
    """``E(T) = tau_ij + tau_jj Hjj / (1 - Hjj)``.

    The paper variance mode uses the published return-time mean; the others
    use the corrected one. For ``i == j`` the first segment is itself a
    return, so ``E(T) = tau_jj / (1 - Hjj)``.
    """
    rmode = "paper" if q.variance_mode == "paper" else "corrected"
    seg = _segments(ps, q, rmode)
    if seg is None:
        return _undefined(ps, q, q.variance_mode)
    tij, _, tjj, _, h = seg
    return ElapsedMoments(_expectation(tij, tjj, h), None, q.variance_mode)


def paper_closed_variance(tij, vij, tjj, vjj, h):
    """The three published closed-form sums, transcribed term for term."""
    first = vij + vjj * ((3 * h - 1) / (h - 1) ** 2 + 1)
    second = (
        (tij**2 - 2 * tij * tjj + tjj**2) * (2 * h / (h + 1))
        + (2 * tij * tjj - 2 * tij**2) * ((-(h**2) - 3 * h) / ((h - 1) * (h + 1) ** 2))
        + tjj**2 * ((h**4 + 5 * h**3 + 5 * h**2 + 5 * h) / ((h - 1) ** 2 * (h + 1) ** 3))
    )
    third = (
        -2
        * h
        * (
            tij**2 * h**4
            - 2 * tij**2 * h**2
            + tij**2
            - 2 * tij * tjj * h**4
            - tij * tjj * h**3
            + 3 * tij * tjj * h**2
            + tij * tjj * h
            - tij * tjj
            + tjj**2 * h**4
            + tjj**2 * h**3
            - 2 * tjj**2 * h**2
            - 2 * tjj**2 * h
            - 2 * tjj**2
        )
        / ((h - 1) ** 2 * (h + 1) ** 3)
    )
    return first + second + third


def series_terms(h: float, epsilon: float) -> int:
    """Smallest ``n`` with ``h**n < epsilon`` (1 when ``h == 0``)."""
    if h <= 0.0:
        return 1
    n = max(1, math.ceil(math.log(epsilon) / math.log(h)))
    while h**n >= epsilon:
        n += 1
    while n > 1 and h ** (n - 1) < epsilon:
        n -= 1
    if n > SERIES_CAP:
        raise TruncationError(
            f"variance series needs {n} terms for Hjj={h!r}, above the cap of {SERIES_CAP}"
        )
    return n


def _series_variance(tij, vij, tjj, vjj, h, epsilon):
    nmax = series_terms(h, epsilon)
    m = np.arange(nmax, dtype=float)  # n - 1
    p = h**m * (1.0 - h)
    e = tij + m * tjj
    ep = e * p
    cross = -2.0 * np.sum(ep * (np.cumsum(ep) - ep))
    spread = np.sum(e * e * (1.0 - p) * p)
    printed = np.sum((vij + m * m * vjj) * p) + spread + cross
    corrected = np.sum((vij + m * vjj) * p) + spread + cross
    return float(corrected), float(printed), nmax


def variance_elapsed(ps: PassageSummary, q: ElapsedQuery) -> ElapsedMoments:
    """E(T) and V(T) in the query's variance mode."""
    mode = q.variance_mode
    rmode = "paper" if mode == "paper" else "corrected"
    seg = _segments(ps, q, rmode)
    if seg is None:
        return _undefined(ps, q, mode)
    tij, vij, tjj, vjj, h = seg
    mean = _expectation(tij, tjj, h)
    if mode == "paper":
        return ElapsedMoments(mean, paper_closed_variance(tij, vij, tjj, vjj, h), mode)
    if mode == "series":
        var, printed, n = _series_variance(tij, vij, tjj, vjj, h, q.series_epsilon)
        return ElapsedMoments(mean, var, mode, truncation_n=n, variance_as_printed=printed)
    g = h / (1.0 - h)
    var = vij + vjj * g + tjj**2 * g / (1.0 - h)
    return ElapsedMoments(mean, var, mode)


def distribution_of_elapsed(
    cs: ChainStructure, ps: PassageSummary, q: ElapsedQuery, tail: float = 1e-10
) -> np.ndarray:
    """``P(T = t)`` for ``t = 1 .. tmax`` under the last-visit law.

    Without ``q.tmax`` the horizon grows until the remaining mass is
    provably below ``tail``. ``cs`` must describe the original chain.
    """
    _segments(ps, q, "corrected")
    hit = ps.hit(q.i)
    if hit <= 0.0:
        raise ImpossibleObservationError(_undefined(ps, q, q.variance_mode).reason)
    a = cs.transient_pos(q.i)
    b = cs.transient_pos(q.j)
    scale = (1.0 - ps.Hjj) / hit
    x = np.zeros(cs.t)
    x[a] = 1.0
    out = []
    horizon = q.tmax if q.tmax is not None else DIST_CAP
    Q = cs.Q
    for _ in range(horizon):
        x = x @ Q
        out.append(x[b] * scale)
        # P(T > t) <= P(still transient at t) / H_ij
        if q.tmax is None and x.sum() / hit < tail:
            break
    else:
        if q.tmax is None:
            raise TruncationError(f"distribution did not reach tail {tail} in {DIST_CAP} steps")
    return np.array(out)


def distribution_moments(pmf: np.ndarray):
    """Mean and variance of a pmf over ``t = 1 .. len(pmf)``."""
    t = np.arange(1, len(pmf) + 1, dtype=float)
    mass = pmf.sum()
    mean = float(np.dot(t, pmf) / mass)
    var = float(np.dot((t - mean) ** 2, pmf) / mass)
    return mean, var
