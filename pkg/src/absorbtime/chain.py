"""Absorbing discrete-time Markov chains: validation, canonical form, and
the fundamental matrix.

States are 0-based indices into the rows of the transition matrix. The
canonical ordering puts transient states first (ascending original index),
followed by absorbing states (ascending original index), so that

    P = [[Q, R],
         [0, I]]

and the fundamental matrix is ``N = (I - Q)^{-1}``.
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ChainValidationError, NotAbsorbingError

__all__ = [
    "ABSORBING_ATOL",
    "ROW_SUM_ATOL",
    "TransitionMatrix",
    "ChainStructure",
    "AbsorptionProbabilities",
    "parse_matrix",
    "load_matrix",
    "classify",
    "absorption_probabilities",
    "reachable_from",
]

#: p_ii >= 1 - ABSORBING_ATOL (and the rest of the row ~0) marks an absorbing state.
ABSORBING_ATOL = 1e-12
#: Maximum tolerated |row sum - 1| for input matrices. Never repaired.
ROW_SUM_ATOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TransitionMatrix:
    """A validated row-stochastic matrix with optional state labels."""

    entries: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        P = np.array(self.entries, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise ChainValidationError(
                f"transition matrix must be square and non-empty, got shape {P.shape}"
            )
        if not np.all(np.isfinite(P)):
            raise ChainValidationError("transition matrix has non-finite entries")
        n = P.shape[0]
        neg = np.argwhere(P < 0)
        if neg.size:
            r, c = neg[0]
            raise ChainValidationError(f"negative entry {P[r, c]!r} at row {r}, column {c}")
        big = np.argwhere(P > 1)
        if big.size:
            r, c = big[0]
            raise ChainValidationError(f"entry {P[r, c]!r} > 1 at row {r}, column {c}")
        deficit = 1.0 - P.sum(axis=1)
        bad = np.flatnonzero(np.abs(deficit) > ROW_SUM_ATOL)
        if bad.size:
            r = int(bad[0])
            raise ChainValidationError(
                f"row {r} sums to {P[r].sum()!r} (deficit {deficit[r]:.3g}); "
                "rows must sum to 1"
            )
        labels = tuple(self.labels) if self.labels else tuple(f"s{k}" for k in range(n))
        if len(labels) != n:
            raise ChainValidationError(f"got {len(labels)} labels for {n} states")
        if len(set(labels)) != n:
            raise ChainValidationError("state labels must be unique")
        object.__setattr__(self, "entries", _frozen(P))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def index(self, state) -> int:
        """Resolve a state given as an integer index or a label."""
        if isinstance(state, (int, np.integer)) and not isinstance(state, bool):
            k = int(state)
        elif isinstance(state, str) and state in self.labels:
            return self.labels.index(state)
        elif isinstance(state, str) and state.lstrip("-").isdigit():
            k = int(state)
        else:
            raise ChainValidationError(f"unknown state {state!r}")
        if not 0 <= k < self.n:
            raise ChainValidationError(f"state index {k} out of range 0..{self.n - 1}")
        return k

    def is_absorbing(self, k: int) -> bool:
        row = self.entries[k]
        return bool(row[k] >= 1.0 - ABSORBING_ATOL and row.sum() - row[k] <= ABSORBING_ATOL)

    def with_absorbing(self, j: int) -> TransitionMatrix:
        """Copy of the chain with row ``j`` replaced by the unit row at ``j``."""
        P = self.entries.copy()
        P[j] = 0.0
        P[j, j] = 1.0
        return TransitionMatrix(P, self.labels)


@dataclass(frozen=True)
class ChainStructure:
    """Canonical decomposition of an absorbing chain.

    ``order[c]`` is the original index of canonical position ``c`` and
    ``position[k]`` is the canonical position of original state ``k``.
    ``Q``, ``R`` and ``fundamental`` are indexed in canonical order.
    """

    transient: tuple[int, ...]
    absorbing: tuple[int, ...]
    order: np.ndarray
    position: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    fundamental: np.ndarray
    labels: tuple[str, ...] = field(default=())

    @property
    def t(self) -> int:
        return len(self.transient)

    @property
    def r(self) -> int:
        return len(self.absorbing)

    @property
    def perm(self) -> np.ndarray:
        return self.order

    def transient_pos(self, k: int) -> int:
        """Row of original state ``k`` in ``Q``/``R``/``fundamental``."""
        if k not in self.transient:
            raise ChainValidationError(f"state {self._name(k)} is not transient")
        return int(self.position[k])

    def absorbing_pos(self, k: int) -> int:
        """Column of original absorbing state ``k`` in ``R``."""
        if k not in self.absorbing:
            raise ChainValidationError(f"state {self._name(k)} is not absorbing")
        return int(self.position[k]) - self.t

    def _name(self, k):
        return self.labels[k] if self.labels else f"s{k}"


@dataclass(frozen=True)
class AbsorptionProbabilities:
    """``B[a, l]``: probability that transient state ``transient[a]`` is
    absorbed in ``absorbing[l]``."""

    B: np.ndarray
    transient: tuple[int, ...]
    absorbing: tuple[int, ...]

    def __call__(self, i: int, l: int) -> float:
        return float(self.B[self.transient.index(i), self.absorbing.index(l)])


def parse_matrix(text: str) -> TransitionMatrix:
    """Parse CSV (no header) or JSON ``{"labels": [...], "rows": [[...]]}``."""
    stripped = text.lstrip()
    if not stripped:
        raise ChainValidationError("empty matrix document")
    labels = ()
    if stripped[0] == "{":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ChainValidationError(f"cannot parse JSON matrix: {e}") from None
        if "rows" not in doc:
            raise ChainValidationError('JSON matrix document needs a "rows" field')
        rows = doc["rows"]
        labels = tuple(doc.get("labels") or ())
    else:
        rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    try:
        rows = [[float(x) for x in row] for row in rows]
    except (TypeError, ValueError) as e:
        raise ChainValidationError(f"non-numeric matrix entry: {e}") from None
    n = len(rows)
    for r, row in enumerate(rows):
        if len(row) != n:
            raise ChainValidationError(
                f"matrix is not square: row {r} has {len(row)} entries, expected {n}"
            )
    return TransitionMatrix(np.array(rows, dtype=float).reshape(n, n), labels)


def load_matrix(source) -> TransitionMatrix:
    """Load a transition matrix from a path or an open text file."""
    if hasattr(source, "read"):
        return parse_matrix(source.read())
    if not os.path.exists(source):
        raise ChainValidationError(f"no such file: {source}")
    with open(source) as fh:
        return parse_matrix(fh.read())


def reachable_from(adjacency: np.ndarray, sources, allowed=None) -> np.ndarray:
    """Boolean mask of states reachable (in >= 0 steps) from ``sources``
    along positive entries of ``adjacency``.

    If ``allowed`` is given, paths may only pass *through* allowed states,
    though they may end anywhere.
    """
    n = adjacency.shape[0]
    seen = np.zeros(n, dtype=bool)
    queue = deque(int(s) for s in sources)
    for s in queue:
        seen[s] = True
    while queue:
        a = queue.popleft()
        if allowed is not None and not allowed[a]:
            continue
        for b in np.flatnonzero(adjacency[a] > 0):
            if not seen[b]:
                seen[b] = True
                queue.append(int(b))
    return seen


def classify(P: TransitionMatrix) -> ChainStructure:
    """Split ``P`` into transient and absorbing states and compute the
    fundamental matrix.

    Raises
    ------
    NotAbsorbingError
        If there is no absorbing state, or some transient state cannot
        reach one.
    """
    n = P.n
    absorbing = tuple(k for k in range(n) if P.is_absorbing(k))
    transient = tuple(k for k in range(n) if k not in absorbing)
    if not absorbing:
        raise NotAbsorbingError(
            "chain has no absorbing state; the elapsed time is only defined "
            "for absorbing chains",
            transient,
        )
    # backward search from the absorbing set
    can_absorb = reachable_from(P.entries.T, absorbing)
    stuck = [k for k in transient if not can_absorb[k]]
    if stuck:
        names = ", ".join(P.labels[k] for k in stuck)
        raise NotAbsorbingError(
            f"chain is not absorbing: states {names} can never reach an absorbing state",
            stuck,
        )

    order = np.array(transient + absorbing, dtype=int)
    position = np.empty(n, dtype=int)
    position[order] = np.arange(n)
    tr = list(transient)
    ab = list(absorbing)
    Q = P.entries[np.ix_(tr, tr)]
    R = P.entries[np.ix_(tr, ab)]
    t = len(tr)
    if t:
        lu = scipy.linalg.lu_factor(np.eye(t) - Q)
        fundamental = scipy.linalg.lu_solve(lu, np.eye(t))
    else:
        fundamental = np.zeros((0, 0))
    order.setflags(write=False)
    position.setflags(write=False)
    return ChainStructure(
        transient=transient,
        absorbing=absorbing,
        order=order,
        position=position,
        Q=_frozen(Q),
        R=_frozen(R),
        fundamental=_frozen(fundamental),
        labels=P.labels,
    )


def absorption_probabilities(cs: ChainStructure) -> AbsorptionProbabilities:
    """``B = N R``, the absorption probabilities from every transient state."""
    if cs.t == 0:
        raise ChainValidationError("chain has no transient states")
    B = cs.fundamental @ cs.R
    # roundoff can push entries a hair outside [0, 1]
    np.clip(B, 0.0, 1.0, out=B)
    return AbsorptionProbabilities(_frozen(B), cs.transient, cs.absorbing)
