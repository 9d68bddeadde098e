"""Brute-force checks for the analytic results.

Two independent engines live here:

* trajectory Monte Carlo (:func:`simulate_elapsed`, :func:`simulate_recurrence`),
  which simulates the chain itself and conditions by rejection;
* exact enumeration (:func:`enumerate_elapsed`), a forward dynamic programme
  over the full transition matrix that never touches a fundamental matrix or
  a linear solve.

Random numbers come from Philox, a counter-based generator. Work is cut into
chunks of ``cfg.chunk`` trajectories and chunk ``c`` draws from the stream
keyed by ``(seed, c)``, so results do not depend on how many worker threads
run the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chain import TransitionMatrix, classify, reachable_from
from .errors import ChainValidationError, SimulationError

__all__ = [
    "SimConfig",
    "SimEstimate",
    "Enumeration",
    "simulate_elapsed",
    "simulate_recurrence",
    "simulate_passage",
    "enumerate_elapsed",
    "random_absorbing_chain",
    "random_corpus",
]

REJECTION_FACTOR = 10_000
ENUMERATION_MAX_STATES = 32


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    trajectories: int = 100_000
    max_steps: int = 10_000_000
    chunk: int = 65_536
    workers: int = 1  # never affects the result, only wall time

    def __post_init__(self):
        if self.trajectories < 1:
            raise ChainValidationError("trajectories must be >= 1")
        if self.max_steps < 1:
            raise ChainValidationError("max_steps must be >= 1")
        if self.chunk < 1:
            raise ChainValidationError("chunk must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ChainValidationError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SimEstimate:
    """Sample moments of the accepted elapsed (or return) times.

    ``se_variance`` is the distribution-free standard error of the sample
    variance, from the fourth central moment; ``se_variance_normal`` is the
    normal-theory value ``sqrt(2/(n-1)) s^2``, which understates the error
    for skewed, heavy-tailed times like these.
    """

    mean: float
    variance: float
    se_mean: float
    se_variance: float
    se_variance_normal: float
    accepted: int
    rejected: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / (self.accepted + self.rejected)

    def z_mean(self, value: float) -> float:
        return _z(value - self.mean, self.se_mean)

    def z_variance(self, value: float) -> float:
        return _z(value - self.variance, self.se_variance)


def _z(diff, se):
    if se > 0:
        return diff / se
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def _estimate(times: np.ndarray, rejected: int) -> SimEstimate:
    x = times.astype(float)
    n = x.size
    mean = float(x.mean())
    if n < 2:
        return SimEstimate(mean, 0.0, 0.0, 0.0, 0.0, n, rejected)
    dev = x - mean
    var = float(np.dot(dev, dev) / (n - 1))
    m4 = float(np.mean(dev**4))
    se_var = math.sqrt(max(m4 - var * var * (n - 3) / (n - 1), 0.0) / n)
    return SimEstimate(
        mean=mean,
        variance=var,
        se_mean=math.sqrt(var / n),
        se_variance=se_var,
        se_variance_normal=math.sqrt(2.0 / (n - 1)) * var,
        accepted=n,
        rejected=rejected,
    )


class _Sampler:
    """Vectorised next-state draws by inverse CDF on a flattened table."""

    def __init__(self, P: TransitionMatrix):
        A = P.entries
        n = A.shape[0]
        cum = np.cumsum(A, axis=1)
        # rows live on disjoint intervals [2s, 2s + 1]
        self.flat = (cum + 2.0 * np.arange(n)[:, None]).ravel()
        self.last = np.array([np.flatnonzero(row > 0)[-1] for row in A])
        self.n = n
        self.absorbing = np.array([P.is_absorbing(k) for k in range(n)])

    def step(self, states, u):
        k = np.searchsorted(self.flat, 2.0 * states + u, side="right") - states * self.n
        over = k >= self.n
        if over.any():
            k[over] = self.last[states[over]]
        return k


def _elapsed_chunk(sampler, i, j, size, rng, max_steps):
    """Time of the last visit to ``j`` (0 when never visited) per trajectory."""
    state = np.full(size, i, dtype=np.int64)
    last = np.zeros(size, dtype=np.int64)
    alive = np.arange(size)
    t = 0
    while alive.size:
        t += 1
        if t > max_steps:
            raise SimulationError(
                f"trajectory exceeded {max_steps} steps; is the chain absorbing?"
            )
        s = sampler.step(state[alive], rng.random(alive.size))
        state[alive] = s
        last[alive[s == j]] = t
        alive = alive[~sampler.absorbing[s]]
    return last


def _first_hit_chunk(sampler, i, j, size, rng, max_steps):
    """First time >= 1 at ``j`` starting from ``i`` (0 when absorbed first)."""
    state = np.full(size, i, dtype=np.int64)
    first = np.zeros(size, dtype=np.int64)
    alive = np.arange(size)
    t = 0
    while alive.size:
        t += 1
        if t > max_steps:
            raise SimulationError(
                f"trajectory exceeded {max_steps} steps; is the chain absorbing?"
            )
        s = sampler.step(state[alive], rng.random(alive.size))
        state[alive] = s
        back = s == j
        first[alive[back]] = t
        alive = alive[~(back | sampler.absorbing[s])]
    return first


def _stream(seed: int, chunk_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(chunk_id << 64) | seed))


def _run(kernel, cfg: SimConfig) -> SimEstimate:
    target = cfg.trajectories
    cap = REJECTION_FACTOR * target
    kept = []
    n_acc = n_rej = 0
    c = 0
    workers = max(1, cfg.workers)

    def one(cid):
        return kernel(cfg.chunk, _stream(cfg.seed, cid))

    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while n_acc < target:
            ids = range(c, c + workers)
            results = pool.map(one, ids) if pool else map(one, ids)
            for res in results:
                hits = np.flatnonzero(res > 0)
                need = target - n_acc
                if hits.size >= need:
                    cut = hits[need - 1] + 1
                    kept.append(res[hits[:need]])
                    n_rej += cut - need
                    n_acc = target
                    break
                kept.append(res[hits])
                n_acc += hits.size
                n_rej += res.size - hits.size
                if n_rej > cap:
                    raise SimulationError(
                        f"more than {cap} rejected trajectories: "
                        "target unreachable or acceptance too low"
                    )
            c += workers
    finally:
        if pool:
            pool.shutdown()
    return _estimate(np.concatenate(kept), int(n_rej))


def _check_pair(P, i, j):
    classify(P)
    i, j = P.index(i), P.index(j)
    for k in (i, j):
        if P.is_absorbing(k):
            raise ChainValidationError(
                f"state {P.labels[k]} is absorbing; both observed states must be transient"
            )
    # j must be reachable in >= 1 step, or no trajectory is ever accepted
    succ = np.flatnonzero(P.entries[i] > 0)
    if not reachable_from(P.entries, succ)[j]:
        raise SimulationError(
            f"target {P.labels[j]} unreachable from {P.labels[i]}: no trajectory can be accepted"
        )
    return i, j


def simulate_elapsed(P: TransitionMatrix, i, j, cfg: SimConfig) -> SimEstimate:
    """Monte Carlo moments of the elapsed time between observing ``i`` and ``j``.

    Each trajectory starts in ``i`` and runs to absorption; trajectories that
    never visit ``j`` at a step >= 1 are rejected, and the others contribute
    the time of their last visit to ``j``.
    """
    i, j = _check_pair(P, i, j)
    sampler = _Sampler(P)
    return _run(
        lambda size, rng: _elapsed_chunk(sampler, i, j, size, rng, cfg.max_steps), cfg
    )


def simulate_recurrence(P: TransitionMatrix, j, cfg: SimConfig) -> SimEstimate:
    """Monte Carlo moments of the return time to ``j``, given a return."""
    j, _ = _check_pair(P, j, j)
    sampler = _Sampler(P)
    return _run(lambda size, rng: _first_hit_chunk(sampler, j, j, size, rng, cfg.max_steps), cfg)


def simulate_passage(P: TransitionMatrix, i, j, cfg: SimConfig) -> SimEstimate:
    """Monte Carlo moments of the first-passage time ``i -> j``, given passage."""
    i, j = _check_pair(P, i, j)
    sampler = _Sampler(P)
    return _run(lambda size, rng: _first_hit_chunk(sampler, i, j, size, rng, cfg.max_steps), cfg)


@dataclass(frozen=True)
class Enumeration:
    """Exact last-visit distribution truncated at ``len(distribution)`` steps.

    ``mean_bound`` and ``variance_bound`` bound the absolute difference from
    the untruncated moments (tail contribution plus a rounding allowance).
    """

    mean: float
    variance: float
    distribution: np.ndarray
    residual: float
    mean_bound: float
    variance_bound: float


def _taboo_hit(A, transient, start, target, floor=1e-17, cap=10_000_000):
    """Probability of reaching ``target`` at some step >= 1 from ``start``,
    by pushing probability mass forward and removing it on first arrival."""
    y = np.zeros(A.shape[0])
    y[start] = 1.0
    hit = 0.0
    for _ in range(cap):
        y = y @ A
        hit += y[target]
        y[target] = 0.0
        y[~transient] = 0.0
        if y.sum() < floor:
            return hit, y.sum()
    raise SimulationError("hitting-probability propagation did not converge")


def _contraction(Qt):
    """``(L, c)`` with ``max row sum of Qt^L = c <= 1/2``."""
    M = Qt.copy()
    L = 1
    while True:
        c = M.sum(axis=1).max() if M.size else 0.0
        if c <= 0.5:
            return L, float(c)
        M = M @ M
        L *= 2
        if L > 2**40:
            raise SimulationError("transient block does not contract")


def enumerate_elapsed(P: TransitionMatrix, i, j, tail: float = 1e-10, tmax=None) -> Enumeration:
    """Exact distribution, mean and variance of the last-visit elapsed time.

    Works directly on the full matrix by forward propagation:
    ``P(T = t) = P(X_t = j) P(no return | X = j) / P(reach j)``.
    Intended for small chains only (at most 32 states).
    """
    if P.n > ENUMERATION_MAX_STATES:
        raise ChainValidationError(
            f"enumeration is limited to {ENUMERATION_MAX_STATES} states, got {P.n}"
        )
    if not 0.0 < tail <= 1e-6:
        raise ChainValidationError("tail must lie in (0, 1e-6]")
    i, j = P.index(i), P.index(j)
    A = P.entries
    transient = np.array([not P.is_absorbing(k) for k in range(P.n)])
    if not (transient[i] and transient[j]):
        raise ChainValidationError("both observed states must be transient")
    reach, res1 = _taboo_hit(A, transient, i, j)
    back, res2 = _taboo_hit(A, transient, j, j)
    if reach <= 0.0:
        raise ChainValidationError(f"state {P.labels[j]} is unreachable from {P.labels[i]}")
    scale = (1.0 - back) / reach

    z = np.zeros(P.n)
    z[i] = 1.0
    pmf = []
    horizon = tmax if tmax is not None else 10_000_000
    for _ in range(horizon):
        z = z @ A
        z[~transient] = 0.0  # absorbed mass can never return to j
        pmf.append(z[j] * scale)
        if tmax is None and z.sum() / reach < tail:
            break
    pmf = np.array(pmf)
    K = len(pmf)
    t = np.arange(1, K + 1, dtype=float)
    m1 = float(np.dot(t, pmf))
    m2 = float(np.dot(t * t, pmf))
    mean = m1
    var = m2 - m1 * m1

    G = z.sum() / reach  # bounds P(T > K)
    L, c = _contraction(A[np.ix_(transient, transient)])
    tail1 = G * (K + L / (1.0 - c))
    tail2 = G * (K * K + L * ((2 * K + 2 * L - 1) / (1.0 - c) + 2 * L * c / (1.0 - c) ** 2))
    # normaliser truncation and floating-point summation
    rel = (res1 / reach + res2 / max(1.0 - back, 1e-300)) + 1e-12
    mean_bound = tail1 + rel * mean
    var_bound = tail2 + 2 * mean * tail1 + tail1**2 + rel * m2 * 3
    return Enumeration(mean, var, pmf, float(G), float(mean_bound), float(var_bound))


def random_absorbing_chain(rng: np.random.Generator, n: int, absorbing=None, density=0.6):
    """A random absorbing chain on ``n`` states with sparse transient rows.

    Absorbing states are scattered over random positions. Retries until the
    chain is absorbing.
    """
    if absorbing is None:
        absorbing = int(rng.integers(1, max(2, n // 3) + 1))
    while True:
        A = np.zeros((n, n))
        ab = rng.choice(n, size=absorbing, replace=False)
        for k in range(n):
            if k in ab:
                A[k, k] = 1.0
                continue
            mask = rng.random(n) < density
            mask[rng.integers(n)] = True
            w = rng.exponential(size=n) * mask
            A[k] = w / w.sum()
        P = TransitionMatrix(A)
        try:
            classify(P)
        except ChainValidationError:
            continue
        return P


def random_corpus(seed: int, count: int, sizes=(4, 8), hjj_range=(0.02, 0.95)):
    """Deterministic list of ``(P, i, j)`` with ``j`` reachable from ``i``.

    ``j`` is chosen so that its recurrence probability lies in
    ``hjj_range``; about one query in eight has ``i == j``.
    """
    from .passage import passage_summary

    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        P = random_absorbing_chain(rng, int(rng.integers(sizes[0], sizes[1] + 1)))
        transient = [k for k in range(P.n) if not P.is_absorbing(k)]
        j = int(rng.choice(transient))
        ps = passage_summary(P, j)
        if not hjj_range[0] <= ps.Hjj <= hjj_range[1]:
            continue
        starts = [j] + [k for k in ps.tau]
        i = j if rng.random() < 0.125 else int(rng.choice(starts))
        out.append((P, i, j))
    return out
