import warnings

import numpy as np
import pytest

from qfound.kslab import derive_structure, shipped_rays
from qfound.numkernel import PAULI_X, PAULI_Z
from qfound.presheaf import (
    ContextPoset,
    DegeneracyWarning,
    NotCommuting,
    NotIncluded,
    characters,
    dim2_coloring,
    dim2_grid_structure,
    generate_context,
    global_section_search,
    includes,
    is_section,
    polynomial_check,
    random_context,
    ray_poset,
    restrict_character,
    restriction_map,
    spectrum_matches,
    trivial_context,
    valuation_section_roundtrip,
)

I2 = np.eye(2)


def test_pauli_context():
    ctx = generate_context([PAULI_Z])
    assert ctx.ranks == [1, 1]
    assert sorted(chi(PAULI_Z).real for chi in characters(ctx)) == [-1, 1]
    assert spectrum_matches(ctx, PAULI_Z)


def test_two_commuting_generators_give_four_blocks():
    ctx = generate_context([np.kron(PAULI_Z, I2), np.kron(I2, PAULI_Z)])
    assert ctx.ranks == [1, 1, 1, 1]
    ctx.validate()


def test_degenerate_generator():
    ctx = generate_context([np.diag([1.0, 1.0, 2.0])])
    assert sorted(ctx.ranks) == [1, 2]


def test_restriction_to_trivial_and_coarser():
    fine = generate_context([np.kron(PAULI_Z, I2), np.kron(I2, PAULI_Z)], name="fine")
    coarse = generate_context([np.kron(PAULI_Z, I2)], name="coarse")
    triv = trivial_context(4)
    assert includes(triv, fine) and includes(coarse, fine)
    assert not includes(fine, coarse)
    a = np.kron(PAULI_Z, I2)
    for chi in characters(fine):
        assert restrict_character(chi, triv).block == 0
        assert restrict_character(chi, coarse)(a) == pytest.approx(chi(a))
    with pytest.raises(NotIncluded):
        restrict_character(characters(coarse)[0], fine)


def test_functoriality():
    fine = generate_context([np.kron(PAULI_Z, I2), np.kron(I2, PAULI_Z)])
    mid = generate_context([np.kron(PAULI_Z, I2)])
    triv = trivial_context(4)
    for chi in characters(fine):
        two_step = restrict_character(restrict_character(chi, mid), triv)
        assert two_step.block == restrict_character(chi, triv).block
    assert restriction_map(fine, fine) == [0, 1, 2, 3]


def test_noncommuting_rejected():
    with pytest.raises(NotCommuting) as err:
        generate_context([PAULI_X, PAULI_Z])
    assert err.value.pair == (0, 1) and err.value.norm == pytest.approx(2.0)


def test_near_degeneracy_warns():
    with pytest.warns(DegeneracyWarning):
        ctx = generate_context([np.diag([0.0, 1e-8, 1.0])])
    assert sorted(ctx.ranks) == [1, 2]


def test_exact_degeneracy_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        generate_context([np.diag([0.0, 1e-12, 1.0])])


def test_characters_reject_foreign_operators():
    chi = characters(generate_context([PAULI_Z]))[0]
    with pytest.raises(ValueError):
        chi(PAULI_X)


def test_characters_are_multiplicative(rng):
    for _ in range(10):
        a, b = random_context(4, rng)
        ctx = generate_context([a, b])
        for chi in characters(ctx):
            assert abs(chi(a @ b) - chi(a) * chi(b)) < 1e-10
            assert polynomial_check(chi, a) < 1e-10


def test_small_poset_has_section():
    ctxs = [trivial_context(2), generate_context([PAULI_Z], name="z")]
    poset = ContextPoset.from_contexts(ctxs)
    sec = global_section_search(poset)
    assert sec is not None and is_section(poset, sec)


def test_ks_set_has_no_section():
    rp = ray_poset(derive_structure(shipped_rays("ks117.rays").rays))
    assert global_section_search(rp.poset) is None


def test_colorable_set_round_trips():
    assert valuation_section_roundtrip(None, derive_structure(shipped_rays("bug.rays").rays)).ok


def test_dim2_grid_round_trips():
    g = dim2_grid_structure(8)
    coloring = dim2_coloring([k % 2 for k in range(8)])
    assert set(coloring) == set(range(1, 17))
    rep = valuation_section_roundtrip(coloring, g)
    assert rep.ok
