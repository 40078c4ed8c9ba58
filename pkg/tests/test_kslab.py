import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfound.kslab import (
    InconsistentPins,
    Ray,
    UnderdeterminedWarning,
    bad_ray_ids,
    brute_force_contexts,
    bug_forcing,
    color_search,
    coloring_to_prime_filter,
    derive_structure,
    dim2_measure,
    dim2_two_valued_measure,
    enumerate_colorings,
    frame_samples,
    gleason_fit,
    is_valid_coloring,
    load_rays,
    read_rays,
    shipped_rays,
    shuffled_verdict,
    validate_rays,
)
from qfound.numkernel import max_abs, random_density, random_unitary


def ray(rid, *xs):
    v = [mpmath.mpf(x) for x in xs]
    n = mpmath.sqrt(sum(x * x for x in v))
    return Ray(rid, tuple(x / n for x in v))


@pytest.fixture(scope="module")
def ks():
    return derive_structure(shipped_rays("ks117.rays").rays)


@pytest.fixture(scope="module")
def bug():
    return derive_structure(shipped_rays("bug.rays").rays)


def basis():
    return [ray(1, 1, 0, 0), ray(2, 0, 1, 0), ray(3, 0, 0, 1)]


def test_standard_basis_structure():
    g = derive_structure(basis())
    assert len(g.edges) == 3 and g.contexts == [(1, 2, 3)]


def test_diagonal_ray_without_partner():
    g = derive_structure(basis() + [ray(4, 1, 1, 0)])
    assert frozenset((3, 4)) in g.edges
    assert g.contexts == [(1, 2, 3)]


def test_diagonal_ray_with_partner():
    g = derive_structure(basis() + [ray(4, 1, 1, 0), ray(5, 1, -1, 0)])
    assert sorted(g.contexts) == [(1, 2, 3), (3, 4, 5)]


def test_sign_identification():
    g = derive_structure(basis() + [ray(4, -1, 0, 0)])
    assert len(g.rays) == 3 and g.aliases == {4: 1}


def test_flipping_signs_leaves_structure_unchanged(ks):
    flipped = [Ray(r.id, tuple(-c for c in r.coords)) if r.id % 3 == 0 else r for r in ks.rays]
    g = derive_structure(flipped)
    assert g.edges == ks.edges and g.contexts == ks.contexts


def test_ray_file_round_trip(tmp_path):
    p = tmp_path / "t.rays"
    p.write_text("# comment\n1: 1 ; 0 ; 0\n2: 0 ; 1/sqrt(2) ; 1/sqrt(2)\n3: 0 ; 0.5 ; 0.5\n4: 1 ; sqrt(-1) ; 0\n")
    rf = load_rays(p)
    assert [r.id for r in rf.rays] == [1, 2, 3]
    assert 4 in rf.problems
    assert bad_ray_ids(rf) == [3, 4]
    rep = validate_rays(rf)
    assert not rep.ok and {c.name for c in rep.failed()} == {"ray 3 unit", "ray 4 parses"}


def test_shipped_117_validates(ks):
    rf = shipped_rays("ks117.rays")
    assert validate_rays(rf).ok
    assert ks.stats() == {"rays": 117, "edges": 204, "contexts": 43,
                          "oversized": 0, "isolated": 0, "suspicious": 0}


def test_source_table_flags_rows():
    rf = shipped_rays("ks117_source.rays")
    assert len(bad_ray_ids(rf)) == 31


def test_contexts_match_brute_force(ks):
    assert sorted(ks.contexts) == brute_force_contexts(ks)


def test_single_triad_colorings():
    g = derive_structure(basis())
    col, _ = color_search(g)
    assert col == {1: 0, 2: 0, 3: 1}
    assert len(enumerate_colorings(g)) == 3


def test_inconsistent_pins():
    g = derive_structure(basis())
    with pytest.raises(InconsistentPins):
        color_search(g, {1: 1, 2: 1})
    with pytest.raises(InconsistentPins):
        color_search(g, {1: 0, 2: 0, 3: 0})


def test_bug_forcing(bug):
    rep = bug_forcing(bug, 1, 8)
    assert rep.ok
    for c in enumerate_colorings(bug, {1: 1}):
        assert c[8] == 0


def test_bug_without_pin_allows_both_ends(bug):
    cols = enumerate_colorings(bug)
    assert any(c[1] == 1 for c in cols) and any(c[8] == 1 for c in cols)


def test_117_uncolorable(ks):
    col, explored = color_search(ks)
    assert col is None and explored > 0
    assert color_search(ks) == (col, explored)


def test_117_shuffled_order_agrees(ks):
    colorable, _ = shuffled_verdict(ks, seed=5)
    assert not colorable


def test_removing_a_ray_makes_117_colorable(ks):
    g = derive_structure([r for r in ks.rays if r.id != 1])
    col, _ = color_search(g)
    assert col is not None and is_valid_coloring(col, g)


def test_prime_filter_triad():
    g = derive_structure(basis())
    assert coloring_to_prime_filter({1: 1, 2: 0, 3: 0}, g).ok


def test_prime_filter_overlapping_triads():
    g = derive_structure(basis() + [ray(4, 1, 1, 0), ray(5, 1, -1, 0)])
    col, _ = color_search(g)
    assert coloring_to_prime_filter(col, g).ok


def test_prime_filter_bug(bug):
    col, _ = color_search(bug, {1: 1})
    assert coloring_to_prime_filter(col, bug).ok


def test_prime_filter_rejects_two_ones(bug):
    col, _ = color_search(bug)
    bad = dict(col)
    bad[2] = 1
    rep = coloring_to_prime_filter(bad, bug)
    assert not rep.ok


def test_gleason_constant_and_rank_one(rng):
    d = 3
    samples = [(u, [1 / d] * d) for u in (random_unitary(d, rng) for _ in range(12))]
    t, res = gleason_fit(samples, d)
    assert max_abs(t - np.eye(d) / d) < 1e-10 and res < 1e-10
    e1 = np.diag([1, 0, 0])
    t, _ = gleason_fit(frame_samples(e1, 12, rng), d)
    assert max_abs(t - e1) < 1e-10


@given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([2, 3, 4]))
def test_gleason_round_trip(seed, d):
    rng = np.random.default_rng(seed)
    t = random_density(d, rng)
    samples = frame_samples(t, 30, rng)
    fit, res = gleason_fit(samples, d)
    assert max_abs(fit - t) <= 1e-8 and res <= 1e-8
    assert abs(np.trace(fit).real - sum(samples[0][1])) <= 1e-8


def test_gleason_underdetermined(rng):
    with pytest.warns(UnderdeterminedWarning):
        gleason_fit(frame_samples(random_density(3, rng), 1, rng), 3)


def test_dim2_constant_tables():
    n = 10
    mu = dim2_measure([1] * n)
    assert mu[:n] == [1] * n and mu[n:2 * n] == [0] * n and mu[2 * n:3 * n] == [1] * n
    assert dim2_two_valued_measure([1] * n).ok
    mu0 = dim2_measure([0] * n)
    assert [1 - x for x in mu0] == mu
    assert dim2_two_valued_measure([0] * n).ok


@given(st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=120))
def test_dim2_random_grid(g):
    assert dim2_two_valued_measure(g).ok


def test_dim2_rejects_non_binary():
    with pytest.raises(ValueError):
        dim2_measure([0, 2])
