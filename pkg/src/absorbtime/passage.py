"""Hitting probabilities and conditional first-passage moments for a fixed
target transient state ``j``.

The target is made absorbing (the "modified chain"); first passage to ``j``
is then absorption in ``j``, and the Kemeny-Snell conditioning on the
absorbing column gives the mean and variance of the passage time given that
it happens. Recurrence moments for ``j`` itself come from a first-step
analysis, in two flavours:

``"paper"``
    the published recipe: renormalise by the one-step probability of not
    being absorbed in an original absorbing state, and weight variances by
    squared transition probabilities.
``"corrected"``
    first-step analysis conditioned on actually returning, with weights
    ``p_jk H_kj / H_jj``. This is the version that agrees with simulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import (
    ChainStructure,
    TransitionMatrix,
    absorption_probabilities,
    classify,
    reachable_from,
)
from .errors import ChainValidationError

__all__ = [
    "RECURRENCE_MODES",
    "HJJ_MAX",
    "Recurrence",
    "PassageSummary",
    "modify_chain",
    "hitting_probabilities",
    "conditional_passage_moments",
    "recurrence_moments",
    "passage_summary",
]

RECURRENCE_MODES = ("paper", "corrected")
#: Largest admissible recurrence probability; E(T) diverges as H_jj -> 1.
HJJ_MAX = 1.0 - 1e-12


@dataclass(frozen=True)
class Recurrence:
    """Mean and variance of the return time to ``j`` given that it returns."""

    tau: float
    var: float


@dataclass(frozen=True)
class PassageSummary:
    """Everything about first passage into transient state ``j``.

    ``H``, ``tau`` and ``var`` are keyed by original state index and cover
    transient states ``i != j``. ``tau`` and ``var`` only contain states with
    ``H[i] > 0``; a missing key means the conditional moment is undefined.
    ``recurrence[mode]`` is ``None`` when ``Hjj == 0``.
    """

    j: int
    transient: tuple[int, ...]
    H: dict
    Hjj: float
    tau: dict
    var: dict
    recurrence: dict
    weights: dict | None
    Hjj_identity: float

    @property
    def tau_jj(self):
        rec = self.recurrence["corrected"]
        return None if rec is None else rec.tau

    @property
    def v_jj(self):
        rec = self.recurrence["corrected"]
        return None if rec is None else rec.var

    def hit(self, i: int) -> float:
        """Probability of reaching ``j`` at some step >= 1 from ``i``."""
        return self.Hjj if i == self.j else self.H[i]

    def first_segment(self, i: int, mode: str = "corrected"):
        """``(mean, variance)`` of the first conditional passage ``i -> j``,
        or ``None`` if it never happens. For ``i == j`` this is a return."""
        if i == self.j:
            rec = self.recurrence[mode]
            return None if rec is None else (rec.tau, rec.var)
        if i not in self.tau:
            return None
        return self.tau[i], self.var[i]


def _check_target(P: TransitionMatrix, j) -> int:
    j = P.index(j)
    if P.is_absorbing(j):
        raise ChainValidationError(
            f"state {P.labels[j]} is absorbing; both observed states must be transient"
        )
    return j


def modify_chain(P: TransitionMatrix, j) -> ChainStructure:
    """Classify the chain obtained by making transient state ``j`` absorbing."""
    j = _check_target(P, j)
    return classify(P.with_absorbing(j))


def _first_passage(P, j):
    full = classify(P)  # the original chain must itself be absorbing
    cs = modify_chain(P, j)
    Pm = P.with_absorbing(j)
    B = absorption_probabilities(cs).B if cs.t else np.zeros((0, cs.r))
    col = B[:, cs.absorbing_pos(j)].copy() if cs.t else np.zeros(0)
    # exact zeros where j is structurally unreachable
    reach = reachable_from(Pm.entries.T, [j])
    hit = np.array([reach[k] for k in cs.transient], dtype=bool)
    col[~hit] = 0.0
    H = {k: float(col[a]) for a, k in enumerate(cs.transient)}

    Pe = P.entries
    Hjj = float(Pe[j, j] + sum(Pe[j, k] * H[k] for k in cs.transient))
    return full, cs, H, hit, col, Hjj


def hitting_probabilities(P: TransitionMatrix, j):
    """``(H, Hjj)``: hitting probabilities ``H[i]`` of ``j`` from every other
    transient state, and the recurrence probability of ``j``."""
    _, _, H, _, _, Hjj = _first_passage(P, j)
    return H, Hjj


def _conditional_moments(cs, hit, col):
    d = np.flatnonzero(hit)
    if d.size == 0:
        return {}, {}
    b = col[d]
    # D^{-1} N D restricted to states that can reach j
    M = cs.fundamental[np.ix_(d, d)] * b[None, :] / b[:, None]
    t = M.sum(axis=1)
    v = (2.0 * M - np.eye(d.size)) @ t - t * t
    v = np.maximum(v, 0.0)
    tau = {cs.transient[a]: float(x) for a, x in zip(d, t)}
    var = {cs.transient[a]: float(x) for a, x in zip(d, v)}
    return tau, var


def conditional_passage_moments(P: TransitionMatrix, j):
    """``(tau, var)``: mean and variance of the first-passage time to ``j``
    conditioned on passage, keyed by start state (only where defined)."""
    _, cs, _, hit, col, _ = _first_passage(P, j)
    return _conditional_moments(cs, hit, col)


def _recurrence(P, j, S, H, Hjj, tau, var, mode):
    if Hjj <= 0.0:
        return None, None
    p = P.entries[j]
    others = [k for k in S if k != j and k in tau]
    if mode == "paper":
        absorbed = sum(p[k] for k in range(P.n) if k not in S)
        denom = 1.0 - absorbed
        t = (p[j] + sum(p[k] * (tau[k] + 1.0) for k in others)) / denom
        v = sum(p[k] ** 2 * var[k] for k in others) / denom**2
        return Recurrence(float(t), float(v)), None
    if mode != "corrected":
        raise ChainValidationError(f"unknown recurrence mode {mode!r}")
    weights = {j: p[j] / Hjj}
    weights.update({k: p[k] * H[k] / Hjj for k in others})
    t = weights[j] + sum(weights[k] * (1.0 + tau[k]) for k in others)
    m2 = weights[j] + sum(
        weights[k] * (1.0 + 2.0 * tau[k] + var[k] + tau[k] ** 2) for k in others
    )
    v = max(m2 - t * t, 0.0)
    return Recurrence(float(t), float(v)), {k: float(w) for k, w in weights.items()}


def recurrence_moments(P: TransitionMatrix, j, mode: str = "corrected"):
    """Conditional mean and variance of the return time to ``j``.

    Returns ``None`` when ``j`` can never be revisited.
    """
    return passage_summary(P, j).recurrence[mode]


def passage_summary(P: TransitionMatrix, j) -> PassageSummary:
    """Compute all first-passage and recurrence quantities for target ``j``."""
    j = _check_target(P, j)
    full, cs, H, hit, col, Hjj = _first_passage(P, j)
    if Hjj > HJJ_MAX:
        raise ChainValidationError(
            f"recurrence probability of {P.labels[j]} is {Hjj!r}; "
            "a transient state cannot return with certainty"
        )
    tau, var = _conditional_moments(cs, hit, col)
    S = tuple(sorted(cs.transient + (j,)))
    recurrence = {}
    weights = None
    for mode in RECURRENCE_MODES:
        rec, w = _recurrence(P, j, S, H, Hjj, tau, var, mode)
        recurrence[mode] = rec
        weights = weights or w

    # redundancy check through the original chain: H_jj = 1 - 1/N_jj
    Njj = full.fundamental[full.transient_pos(j), full.transient_pos(j)]
    return PassageSummary(
        j=j,
        transient=S,
        H=H,
        Hjj=Hjj,
        tau=tau,
        var=var,
        recurrence=recurrence,
        weights=weights,
        Hjj_identity=float(1.0 - 1.0 / Njj),
    )
