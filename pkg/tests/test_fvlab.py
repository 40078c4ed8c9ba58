import numpy as np
import pytest

from qfound.fvlab import (
    CausalOrderViolated,
    EffectValuedMeasure,
    LocalFactorization,
    LocalObservable,
    ScatteringMorphism,
    ZeroProbability,
    check_epsilon_properties,
    compose_instruments,
    embed,
    eta_sigma,
    eta_sigma_termwise,
    flip_controlled,
    identity_coupling,
    induced_observable,
    nonsignaling_check,
    parse_fv_scenario,
    post_select,
    pre_instrument,
    pvm_of,
    random_coupling,
    random_suite,
    swap_coupling,
    unsharpness,
    evm_induce,
    variance_check,
)
from qfound.acceptance import data_dir
from qfound.numkernel import PAULI_X, PAULI_Z, random_density, random_hermitian, random_unitary


def test_embed_orders_factors():
    a, b = np.diag([1.0, 2.0]), np.diag([1.0, 3.0, 5.0])
    assert np.allclose(embed(np.kron(a, b), [0, 1], [2, 3]), np.kron(a, b))
    assert np.allclose(embed(np.kron(b, a), [1, 0], [2, 3]), np.kron(a, b))


def test_eta_sigma_two_ways(rng):
    c = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    s = random_density(3, rng)
    assert np.allclose(eta_sigma(c, s), eta_sigma_termwise(c, s))


def test_identity_coupling_gives_scalar(rng):
    th = identity_coupling(2, 3)
    s = random_density(3, rng)
    b = random_hermitian(3, rng)
    assert np.allclose(induced_observable(b, s, th), np.trace(s @ b) * np.eye(2))


def test_swap_transfers_observable(rng):
    # swap with a probe: reading the probe reads the system
    th = swap_coupling(2)
    s = random_density(2, rng)
    assert np.allclose(induced_observable(PAULI_X, s, th), PAULI_X)


def test_flip_gives_sharp_measure():
    ground = np.diag([1.0, 0.0]).astype(complex)
    evm = evm_induce(pvm_of(PAULI_Z), ground, flip_controlled(2))
    assert evm.is_sharp
    assert abs(unsharpness(evm)) < 1e-12


def test_epsilon_properties(rng):
    th = random_coupling(2, 3, rng)
    assert check_epsilon_properties(random_density(3, rng), th, trials=4).ok


def test_variance_inequality(rng):
    th = random_coupling(3, 2, rng)
    vm, vi = variance_check(random_hermitian(2, rng), random_density(2, rng), th, random_density(3, rng))
    assert vm >= vi - 1e-12


def test_post_select_zero(rng):
    th = identity_coupling(2, 2)
    ground = np.diag([1.0, 0.0]).astype(complex)
    with pytest.raises(ZeroProbability):
        post_select(np.diag([0.0, 1.0]), ground, th, random_density(2, rng))


def test_instrument_probability_matches(rng):
    th = random_coupling(2, 2, rng)
    s, om = random_density(2, rng), random_density(2, rng)
    e = np.diag([1.0, 0.0])
    _, w = pre_instrument(e, s, th, om)
    assert abs(w - np.trace(om @ induced_observable(e, s, th)).real) < 1e-12


def test_composition_on_shared_system(rng):
    th1, th2 = random_coupling(2, 2, rng), random_coupling(2, 2, rng)
    rep = compose_instruments(np.diag([1.0, 0.0]), random_density(2, rng), th1,
                              np.diag([0.0, 1.0]), random_density(2, rng), th2, random_density(2, rng))
    assert rep.ok


def test_causal_order_checks():
    with pytest.raises(ValueError):
        LocalFactorization([2], {}, [("a", "b"), ("b", "a")])
    with pytest.raises(ValueError):
        LocalFactorization([2], {}, [("a", "b")], {("a", "b")})
    f = LocalFactorization([2, 2], {0: "K1", 1: "K2"}, [], {("K1", "K2")})
    with pytest.raises(CausalOrderViolated):
        f.check_item("K1", [1])


def test_support_is_verified(rng):
    u = random_unitary(8, rng)
    with pytest.raises(ValueError):
        ScatteringMorphism(u, (2, 2), 2, frozenset({0}))


def test_nonsignaling_and_enforcement(rng):
    fact = LocalFactorization([2, 2], {0: "O1", 1: "O3"}, [("O2", "O3")], {("O1", "O2"), ("O1", "O3")})
    a1 = ScatteringMorphism.local(random_unitary(4, rng), [0], [2, 2], 2, "O1")
    a2 = ScatteringMorphism.local(random_unitary(4, rng), [1], [2, 2], 2, "O2")
    obs = LocalObservable(PAULI_Z, (1,), "O3")
    s1, s2, om = random_density(2, rng), random_density(2, rng), random_density(4, rng)
    _, _, gap = nonsignaling_check(a1, a2, obs, om, s1, s2, fact)
    assert gap <= 1e-10
    bad = LocalObservable(PAULI_Z, (0,), "O3")
    with pytest.raises(CausalOrderViolated):
        nonsignaling_check(a1, a2, bad, om, s1, s2, fact)


def test_shipped_scenario_parses():
    sc = parse_fv_scenario((data_dir() / "fv_nosignal.scn").read_text())
    assert sc.couplings and sc.observables


def test_effect_measure_rejects_non_effects():
    with pytest.raises(ValueError):
        EffectValuedMeasure({0: 2 * np.eye(2)})


def test_random_suite_small():
    assert random_suite(trials=5, seed=1, dims=(2, 2)).ok
