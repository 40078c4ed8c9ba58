import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qfound.hepplab import (
    ChainExhausted,
    ChainState,
    LengthMismatch,
    PreconditionViolated,
    SupportTooLarge,
    bell_witness,
    bloch_ket,
    evolve_chain,
    evolve_chain_explicit,
    local_cross_term,
    macrostate_equivalent,
    product_overlap,
    product_overlap_brute,
    random_bloch,
    reduced_coherence,
    reduced_coherence_trace,
    spin_along,
    truncation_check,
)
from qfound.numkernel import random_hermitian


def test_bloch_ket_is_eigenvector(rng):
    for _ in range(10):
        e = random_bloch(rng)
        v = bloch_ket(e)
        assert np.allclose(spin_along(e) @ v, v)


def test_poles():
    assert np.allclose(bloch_ket([0, 0, 1]), [1, 0])
    assert np.allclose(bloch_ket([0, 0, -1]), [0, 1])


def test_overlap_two_ways(rng):
    a = [random_bloch(rng) for _ in range(4)]
    b = [random_bloch(rng) for _ in range(4)]
    assert abs(product_overlap(a, b) - product_overlap_brute(a, b)) < 1e-12
    with pytest.raises(LengthMismatch):
        product_overlap(a, b[:3])


def test_explicit_evolution_matches():
    s = ChainState(0.6, 0.8, 4, math.pi / 3)
    assert np.allclose(evolve_chain_explicit(s, 3), evolve_chain(s, 3).vector())
    with pytest.raises(ChainExhausted):
        evolve_chain(s, 5)


@given(st.integers(1, 6), st.floats(0.1, math.pi), st.data())
def test_coherence_formula(n, theta, data):
    t = data.draw(st.integers(0, n))
    s = ChainState(0.6, 0.8, n, theta, t)
    assert abs(reduced_coherence(s) - reduced_coherence_trace(s)) < 1e-12


def test_full_flip_kills_coherence():
    assert reduced_coherence(ChainState(0.6, 0.8, 5, math.pi, 1)) < 1e-15
    assert abs(reduced_coherence(ChainState(0.6, 0.8, 5, math.pi, 0)) - 0.48) < 1e-15


def test_local_cross_terms_vanish(rng):
    s = ChainState(0.6, 0.8, 6, math.pi, 4)
    for m in range(4):
        assert abs(local_cross_term(random_hermitian(2 ** (m + 1), rng), m, s)) < 1e-14
    with pytest.raises(SupportTooLarge):
        local_cross_term(np.eye(2 ** 8), 7, s)


def test_witness():
    for t in range(1, 7):
        assert abs(abs(bell_witness(ChainState(0.6, 0.8, 6, math.pi, t))) - 0.48) < 1e-12
    with pytest.raises(PreconditionViolated):
        bell_witness(ChainState(0.6, 0.8, 6, math.pi / 2, 2))
    with pytest.raises(PreconditionViolated):
        bell_witness(ChainState(0.6, 0.8, 6, math.pi, 0))


def test_truncation():
    s = ChainState(0.6, 0.8, 6, math.pi, 5)
    cut, dist = truncation_check(s, 3)
    assert cut < 1e-14 and dist == pytest.approx(1.0)


def test_state_validation():
    with pytest.raises(ValueError):
        ChainState(1.0, 1.0, 3)
    with pytest.raises(ValueError):
        ChainState(1.0, 0.0, 3, t=4)


def test_macrostates():
    a, b = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    assert macrostate_equivalent(a, b, [np.eye(2)])
    assert not macrostate_equivalent(a, b, [np.diag([1.0, -1.0])])
