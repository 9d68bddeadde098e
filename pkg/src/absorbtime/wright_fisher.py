"""Wright-Fisher chains with selection, dominance and mutation, and the
age of an allele observed at a given count.

States are allele counts ``0 .. 2N`` in a diploid population. Genotype
fitnesses are ``AA: 1+s``, ``Aa: 1+hs``, ``aa: 1`` for the focal allele A.
Each generation applies selection, then mutation (``u``: A -> a,
``v``: a -> A), then binomial sampling of ``2N`` gene copies.

The allele is assumed to have arisen as a single copy, so its age given
an observed count ``j`` is the elapsed time between states 1 and ``j``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from .chain import TransitionMatrix, classify
from .elapsed import ElapsedQuery, distribution_of_elapsed, variance_elapsed
from .errors import ChainValidationError, ImpossibleObservationError, NotAbsorbingError
from .passage import passage_summary

__all__ = [
    "MAX_COPIES",
    "WrightFisherParams",
    "AlleleAgeResult",
    "build_wf_matrix",
    "allele_age",
    "load_params",
]

MAX_COPIES = 4000
_RENORMALISE_ATOL = 1e-9


@dataclass(frozen=True)
class WrightFisherParams:
    N: int
    s: float = 0.0
    h: float = 0.5
    u: float = 0.0
    v: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ChainValidationError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if 2 * self.N > MAX_COPIES:
            raise ChainValidationError(
                f"2N = {2 * self.N} exceeds the dense-matrix limit of {MAX_COPIES} copies"
            )
        if self.s < -1:
            raise ChainValidationError("selection coefficient must be >= -1")
        if not (1 + self.s > 0 and 1 + self.h * self.s > 0):
            raise ChainValidationError(
                f"fitnesses must be positive: 1+s = {1 + self.s}, 1+hs = {1 + self.h * self.s}"
            )
        for name in ("u", "v"):
            rate = getattr(self, name)
            if not 0.0 <= rate < 1.0:
                raise ChainValidationError(f"mutation rate {name} must lie in [0, 1)")

    @property
    def copies(self) -> int:
        return 2 * self.N


@dataclass(frozen=True)
class AlleleAgeResult:
    observed_count: int
    expected_age: float
    age_variance: float
    variance_mode: str
    distribution: np.ndarray | None = None


def _next_frequency(x, p: WrightFisherParams):
    s, h = p.s, p.h
    num = x * x * (1 + s) + x * (1 - x) * (1 + h * s)
    den = x * x * (1 + s) + 2 * x * (1 - x) * (1 + h * s) + (1 - x) ** 2
    x_sel = num / den
    return x_sel * (1 - p.u) + (1 - x_sel) * p.v


def build_wf_matrix(p: WrightFisherParams) -> TransitionMatrix:
    """Transition matrix over allele counts ``0 .. 2N``."""
    M = p.copies
    a = np.arange(M + 1)
    psi = _next_frequency(a / M, p)
    b = np.arange(M + 1)
    logc = gammaln(M + 1) - gammaln(b + 1) - gammaln(M - b + 1)
    logp = logc[None, :] + xlogy(b[None, :], psi[:, None]) + xlog1py(M - b[None, :], -psi[:, None])
    T = np.exp(logp)
    sums = T.sum(axis=1)
    off = np.abs(sums - 1.0)
    if off.max() >= _RENORMALISE_ATOL:
        row = int(off.argmax())
        raise ChainValidationError(f"binomial row {row} sums to {sums[row]!r}")
    T /= sums[:, None]
    return TransitionMatrix(T, tuple(str(k) for k in a))


def allele_age(
    p: WrightFisherParams,
    observed_count: int,
    variance_mode: str = "corrected",
    distribution: bool = False,
    tail: float = 1e-10,
) -> AlleleAgeResult:
    """Expected age (generations) and its variance for an allele that arose
    as one copy and is now seen at ``observed_count`` copies."""
    j = int(observed_count)
    if not 1 <= j <= p.copies - 1:
        raise ChainValidationError(
            f"observed count {j} must lie in 1..{p.copies - 1}; the boundary states are absorbing"
        )
    P = build_wf_matrix(p)
    try:
        cs = classify(P)
    except NotAbsorbingError as e:
        hint = " (both u > 0 and v > 0 make every count recurrent; set v = 0)" if p.u > 0 and p.v > 0 else ""
        raise NotAbsorbingError(f"{e}{hint}", e.states) from None
    if P.is_absorbing(j) or P.is_absorbing(1):
        raise ChainValidationError(f"count {j if P.is_absorbing(j) else 1} is absorbing")
    ps = passage_summary(P, j)
    q = ElapsedQuery(1, j, variance_mode=variance_mode)
    m = variance_elapsed(ps, q)
    if not m.defined:
        raise ImpossibleObservationError(f"count {j} is unreachable from a single copy")
    dist = distribution_of_elapsed(cs, ps, q, tail=tail) if distribution else None
    return AlleleAgeResult(j, m.expectation, m.variance, m.mode, dist)


def load_params(source):
    """Read ``{"N", "s", "h", "u", "v", "observed_count"}`` from a JSON file.

    Returns ``(params, observed_count)``; the count may be None.
    """
    with open(source) as fh:
        doc = json.load(fh)
    count = doc.pop("observed_count", None)
    unknown = set(doc) - {"N", "s", "h", "u", "v"}
    if unknown:
        raise ChainValidationError(f"unknown Wright-Fisher parameters: {sorted(unknown)}")
    return WrightFisherParams(**doc), count
