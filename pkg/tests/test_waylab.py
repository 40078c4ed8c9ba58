import numpy as np
import pytest
from hypothesis import given, strategies as st

from qfound.numkernel import PAULI_X, PAULI_Z, random_hermitian, random_state_vector
from qfound.waylab import (
    ConservationViolated,
    GramMismatch,
    build_fiduciary,
    conserved_total,
    cutoff_for,
    dump_apparatus,
    exact_measurement,
    extend_conserving_unitary,
    fiduciary_unitary,
    lam_range,
    load_apparatus,
    ozawa_noise_bound,
    random_conserving_unitary,
    unitary_report,
    verify_fiduciary,
    yanase_condition,
)


def test_yanase_pair():
    assert not yanase_condition(PAULI_X, PAULI_Z).commutes
    ok = yanase_condition(PAULI_Z, PAULI_Z)
    assert ok.commutes and "not excluded" in ok.verdict


@pytest.mark.parametrize("l,eps,n", [(1, 0.4, 5), (1, 0.05, 40), (2, 0.5, 8), (1, 0.5, 4)])
def test_cutoff(l, eps, n):
    assert cutoff_for(l, eps) == n


@given(st.integers(1, 4), st.floats(0.01, 0.99))
def test_cutoff_is_least_strict(l, eps):
    n = cutoff_for(l, eps)
    assert n > 2 * l / eps - 0.5
    assert n - 1 <= 2 * l / eps - 0.5


def test_lam_ranges():
    assert [lam_range(x, 10, 1) for x in (12, 10, 8, 0)] == [1, 2, 3, 4]


@pytest.mark.parametrize("eps,noise", [(0.4, 4 / 11), (0.05, 4 / 81)])
def test_fiduciary_noise(eps, noise):
    app = build_fiduciary(1, eps)
    assert abs(app.measured_noise() - noise) <= 1e-12
    assert app.measured_noise() < eps
    assert verify_fiduciary(app).ok


def test_fiduciary_unitary_conserves():
    app = build_fiduciary(1, 0.4)
    u = fiduciary_unitary(app)
    total = conserved_total(app.charge_system(), app.charge_apparatus())
    assert unitary_report(u, app.initial_vectors(), app.final_vectors(), total).ok


def test_larger_system():
    app = build_fiduciary(1, 0.5, {1: 1, 0: 1, -1: 1})
    assert verify_fiduciary(app).ok


def test_bad_inputs():
    with pytest.raises(ValueError):
        build_fiduciary(1, 1.5)
    with pytest.raises(ValueError):
        build_fiduciary(1, 0.4, {1: 1})
    with pytest.raises(ValueError):
        build_fiduciary(1, 0.4, {2: 1, 0: 1})


def test_dump_load_round_trip():
    app = build_fiduciary(1, 0.4)
    back = load_apparatus(dump_apparatus(app))
    assert back.N == app.N and back.labels == app.labels
    assert np.allclose(back.xi, app.xi)
    assert abs(back.measured_noise() - app.measured_noise()) < 1e-15
    assert dump_apparatus(back) == dump_apparatus(app)


def test_extension_rejects_gram_mismatch():
    charge = np.diag([0.0, 0.0, 1.0])
    e = np.eye(3)
    with pytest.raises(GramMismatch):
        extend_conserving_unitary([e[0]], [e[2]], charge)


def test_extension_maps_vectors(rng):
    charge = np.diag([0, 0, 1, 1, 1]).astype(complex)
    a = [np.array([1, 0, 0, 0, 0], dtype=complex), np.array([0, 0, 1, 0, 0], dtype=complex)]
    b = [np.array([0, 1, 0, 0, 0], dtype=complex), np.array([0, 0, 0, 0.6, 0.8], dtype=complex)]
    u = extend_conserving_unitary(a, b, charge)
    assert unitary_report(u, a, b, charge).ok


def test_noise_bound_random(rng):
    for _ in range(20):
        l1 = np.diag(rng.integers(-1, 2, size=2)).astype(complex)
        l2 = np.diag(rng.integers(-1, 2, size=3)).astype(complex)
        u = random_conserving_unitary(l1, l2, rng)
        n2, bound = ozawa_noise_bound(u, random_hermitian(2, rng), random_hermitian(3, rng), l1, l2,
                                      random_state_vector(2, rng), random_state_vector(3, rng))
        assert n2 >= bound - 1e-9


def test_noise_bound_needs_conservation(rng):
    l1, l2 = np.diag([1.0, 0.0]), np.diag([1.0, 0.0])
    u = np.kron(PAULI_X, np.eye(2))
    with pytest.raises(ConservationViolated):
        ozawa_noise_bound(u, PAULI_Z, PAULI_Z, l1, l2, [1, 0], [1, 0])


def test_exact_measurement_has_no_noise(rng):
    ex = exact_measurement()
    n2, bound = ozawa_noise_bound(ex.unitary, ex.measured, ex.meter, ex.charge_system,
                                  ex.charge_apparatus, random_state_vector(2, rng), ex.xi)
    assert abs(n2) <= 1e-10 and abs(bound) <= 1e-10
