import io
import json

import numpy as np
import pytest
from hypothesis import given, settings

from absorbtime import (
    ChainValidationError,
    NotAbsorbingError,
    TransitionMatrix,
    absorption_probabilities,
    classify,
    load_matrix,
    parse_matrix,
)
from absorbtime.oracle import random_absorbing_chain

from .conftest import WORKED
from .strategies import absorbing_chains


def test_load_worked_example_csv(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("\n".join(",".join(str(x) for x in row) for row in WORKED) + "\n")
    P = load_matrix(path)
    np.testing.assert_array_equal(P.entries, WORKED)
    assert P.labels == ("s0", "s1", "s2", "s3")


def test_load_json_with_labels():
    doc = {"labels": ["lost", "one", "two", "fixed"], "rows": WORKED}
    P = load_matrix(io.StringIO(json.dumps(doc)))
    assert P.labels == ("lost", "one", "two", "fixed")
    assert P.index("two") == 2
    assert P.index("2") == 2


def test_single_absorbing_state():
    P = parse_matrix("1.0\n")
    cs = classify(P)
    assert cs.t == 0 and cs.absorbing == (0,)


def test_row_sum_error_names_row():
    with pytest.raises(ChainValidationError, match="row 1"):
        parse_matrix("1,0\n0.5,0.4\n")


@pytest.mark.parametrize(
    "text, match",
    [
        ("1,0\n0,1,0\n", "not square"),
        ("1,0\n-0.5,1.5\n", "negative"),
        ("1,0\nabc,1\n", "non-numeric"),
        ('{"rows": [[1, 0], [0', "JSON"),
        ("", "empty"),
    ],
)
def test_load_errors(text, match):
    with pytest.raises(ChainValidationError, match=match):
        parse_matrix(text)


def test_tiny_rounding_is_tolerated_not_repaired():
    P = parse_matrix("1,0\n0.3333333333333,0.6666666666667\n")
    assert P.entries[1, 0] == 0.3333333333333


def test_classify_worked_example(worked):
    cs = classify(worked)
    assert cs.transient == (1, 2)
    assert cs.absorbing == (0, 3)
    np.testing.assert_array_equal(cs.Q, [[0, 0.5], [0.5, 0]])
    np.testing.assert_array_equal(cs.R, [[0.5, 0], [0, 0.5]])
    np.testing.assert_array_equal(cs.order, [1, 2, 0, 3])


def test_all_absorbing_gives_empty_transient_set():
    cs = classify(TransitionMatrix(np.eye(2)))
    assert cs.t == 0 and cs.r == 2
    assert cs.Q.shape == (0, 0) and cs.fundamental.shape == (0, 0)
    with pytest.raises(ChainValidationError):
        absorption_probabilities(cs)


def test_transient_cycle_is_not_absorbing():
    P = TransitionMatrix([[1, 0, 0], [0, 0, 1], [0, 1, 0]])
    with pytest.raises(NotAbsorbingError) as err:
        classify(P)
    assert err.value.states == (1, 2)


def test_no_absorbing_state():
    with pytest.raises(NotAbsorbingError, match="no absorbing"):
        classify(TransitionMatrix([[0.5, 0.5], [0.5, 0.5]]))


def test_absorption_deterministic():
    P = TransitionMatrix([[0, 1], [0, 1]])
    B = absorption_probabilities(classify(P))
    np.testing.assert_array_equal(B.B, [[1.0]])


def _simulate_absorption(P, start, runs, rng):
    """Independent absorption sampler using rng.choice per occupied state."""
    n = P.n
    absorbing = np.array([P.is_absorbing(k) for k in range(n)])
    state = np.full(runs, start)
    while not absorbing[state].all():
        for s in np.unique(state[~absorbing[state]]):
            idx = np.flatnonzero(state == s)
            state[idx] = rng.choice(n, size=idx.size, p=P.entries[s])
    return np.bincount(state, minlength=n) / runs


def test_absorption_probabilities_monte_carlo(rng):
    P = random_absorbing_chain(np.random.default_rng(5), 5, absorbing=2)
    cs = classify(P)
    B = absorption_probabilities(cs)
    np.testing.assert_allclose(B.B.sum(axis=1), 1.0, atol=1e-10)
    start = cs.transient[0]
    runs = 1_000_000
    freq = _simulate_absorption(P, start, runs, rng)
    for col, l in enumerate(cs.absorbing):
        p = B.B[0, col]
        se = np.sqrt(p * (1 - p) / runs)
        assert abs(freq[l] - p) < 4 * se + 1e-12


@settings(max_examples=80, deadline=None)
@given(absorbing_chains())
def test_fundamental_matrix_identities(P):
    cs = classify(P)
    if cs.t == 0:
        return
    N, Q = cs.fundamental, cs.Q
    eye = np.eye(cs.t)
    assert np.abs((eye - Q) @ N - eye).max() < 1e-10
    assert np.abs(N - (eye + Q @ N)).max() < 1e-10
    assert N.min() >= -1e-12
    B = absorption_probabilities(cs).B
    assert np.abs(B.sum(axis=1) - 1).max() < 1e-10
    assert B.min() >= 0 and B.max() <= 1


@settings(max_examples=60, deadline=None)
@given(absorbing_chains())
def test_graph_transience_matches_spectral_radius(P):
    cs = classify(P)
    if cs.t == 0:
        return
    assert np.abs(np.linalg.eigvals(cs.Q)).max() < 1
    # some power of Q is a strict contraction in the max-row-sum norm
    M = np.linalg.matrix_power(cs.Q, cs.t)
    assert M.sum(axis=1).max() < 1


@settings(max_examples=60, deadline=None)
@given(absorbing_chains(min_states=3))
def test_classify_is_permutation_equivariant(P):
    perm = np.random.default_rng(P.n).permutation(P.n)
    # state perm[k] of P becomes state k of P2
    P2 = TransitionMatrix(P.entries[np.ix_(perm, perm)])
    cs, cs2 = classify(P), classify(P2)
    inv = np.argsort(perm)
    assert sorted(inv[list(cs.transient)]) == list(cs2.transient)
    assert sorted(inv[list(cs.absorbing)]) == list(cs2.absorbing)
    if cs.t == 0:
        return
    # reorder cs blocks into cs2's canonical order
    t_map = [cs.transient.index(perm[k]) for k in cs2.transient]
    a_map = [cs.absorbing.index(perm[k]) for k in cs2.absorbing]
    np.testing.assert_array_equal(cs.Q[np.ix_(t_map, t_map)], cs2.Q)
    np.testing.assert_array_equal(cs.R[np.ix_(t_map, a_map)], cs2.R)
    B = absorption_probabilities(cs).B
    B2 = absorption_probabilities(cs2).B
    np.testing.assert_allclose(B[np.ix_(t_map, a_map)], B2, atol=1e-12)
