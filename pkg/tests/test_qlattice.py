import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfound.numkernel import max_abs
from qfound.qlattice import (
    BorderlineRank,
    PreconditionViolated,
    check_modular,
    check_orthomodular,
    complement,
    distributivity_gap,
    distributivity_witness,
    equal,
    identity,
    join,
    leq,
    meet,
    modularity_gap,
    projector,
    random_modular_triple,
    random_nested_pair,
    random_projector,
    rank,
    ray_projector,
    zero,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=2, max_value=6)


def test_meet_basics(rng):
    p = random_projector(4, 2, rng)
    assert equal(meet(p, p), p)
    assert equal(meet(p, complement(p)), zero(4))


def test_generic_lines_meet_at_origin(rng):
    p, q = random_projector(3, 1, rng), random_projector(3, 1, rng)
    m = meet(p, q)
    assert rank(m) == 0
    assert np.linalg.matrix_rank(m, tol=1e-8) == 0


def test_join_basics(rng):
    p = random_projector(4, 2, rng)
    assert equal(join(p, complement(p)), identity(4))
    assert equal(join(p, zero(4)), p)


def test_join_two_lines_is_plane_and_de_morgan(rng):
    p, q = random_projector(3, 1, rng), random_projector(3, 1, rng)
    j = join(p, q)
    assert rank(j) == 2
    assert max_abs(j - complement(meet(complement(p), complement(q)))) < 1e-10


def test_leq(rng):
    p = random_projector(3, 1, rng)
    assert leq(zero(3), p) and leq(p, p)
    u = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    q = ray_projector(u[:, 0]) + ray_projector(u[:, 1])
    inside = ray_projector(u[:, 0] + 2 * u[:, 1])
    outside = ray_projector(u[:, 0] + u[:, 2])
    assert leq(inside, q) and not leq(outside, q)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        meet(identity(2), identity(3))


def test_projector_validation():
    with pytest.raises(ValueError):
        projector(np.diag([1.0, 2.0]))
    with pytest.raises(BorderlineRank):
        rank(np.diag([1.0, 0.5]))


def test_orthomodular_trivial_cases(rng):
    q = random_projector(4, 3, rng)
    assert check_orthomodular(zero(4), q)
    assert check_orthomodular(q, q)


def test_orthomodular_precondition(rng):
    with pytest.raises(PreconditionViolated):
        check_orthomodular(random_projector(3, 1, rng), random_projector(3, 1, rng))


@given(seeds, dims)
def test_orthomodular_nested(seed, dim):
    rng = np.random.default_rng(seed)
    assert check_orthomodular(*random_nested_pair(dim, rng))


@given(seeds, st.integers(min_value=3, max_value=6))
def test_modular_triples(seed, dim):
    rng = np.random.default_rng(seed)
    assert check_modular(*random_modular_triple(dim, rng))


def test_modular_degenerate(rng):
    m = random_projector(4, 2, rng)
    l = random_projector(4, 2, rng)
    assert check_modular(m, m, l)
    assert check_modular(m, join(m, l), zero(4))


def test_modular_precondition(rng):
    with pytest.raises(PreconditionViolated):
        check_modular(random_projector(3, 1, rng), random_projector(3, 1, rng), identity(3))


def test_hand_built_distributivity_failure():
    ang = [0, math.pi / 4, math.pi / 2]
    p, q, r = (ray_projector([math.cos(a), math.sin(a)]) for a in ang)
    lhs, rhs, gap = distributivity_gap(q, p, r)
    assert equal(lhs, q) and equal(rhs, zero(2))
    # max-entry distance of a 45 degree ray projector from zero; operator norm is 1
    assert gap == pytest.approx(0.5)
    assert np.linalg.norm(lhs - rhs, 2) == pytest.approx(1.0)


def test_commuting_projectors_distribute():
    p, q, r = np.diag([1, 0, 0]), np.diag([1, 1, 0]), np.diag([0, 1, 1])
    assert distributivity_gap(p, q, r)[2] < 1e-12


def test_witness_search():
    *_, gap = distributivity_witness(2, 42)
    assert gap > 0.5
    *_, gap = distributivity_witness(3, 7)
    assert gap > 0.5


@given(seeds, dims)
def test_lattice_axioms(seed, dim):
    rng = np.random.default_rng(seed)
    p = random_projector(dim, int(rng.integers(0, dim + 1)), rng)
    q = random_projector(dim, int(rng.integers(0, dim + 1)), rng)
    assert equal(meet(p, q), meet(q, p)) and equal(join(p, q), join(q, p))
    assert equal(join(p, meet(p, q)), p)
    assert equal(complement(complement(p)), p)
    if leq(p, q):
        assert leq(complement(q), complement(p))


def test_modularity_gap_bound_and_monotone():
    gaps = [modularity_gap(n, 2.0) for n in range(1, 13)]
    for n, g in enumerate(gaps, 1):
        assert g <= 2.0 ** -n
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert modularity_gap(3, 5.0) <= 5.0 ** -3


def test_modularity_gap_preconditions():
    with pytest.raises(ValueError):
        modularity_gap(0, 2.0)
    with pytest.raises(ValueError):
        modularity_gap(2, 1.0)
