"""Hypothesis strategies for small absorbing chains."""

import numpy as np
from hypothesis import strategies as st

from absorbtime import TransitionMatrix
from absorbtime.oracle import random_absorbing_chain


@st.composite
def absorbing_chains(draw, min_states=2, max_states=8):
    n = draw(st.integers(min_states, max_states))
    seed = draw(st.integers(0, 2**32 - 1))
    density = draw(st.sampled_from([0.3, 0.6, 1.0]))
    absorbing = draw(st.integers(1, max(1, n - 1)))
    return random_absorbing_chain(np.random.default_rng(seed), n, absorbing, density)


def transient_states(P):
    return [k for k in range(P.n) if not P.is_absorbing(k)]
