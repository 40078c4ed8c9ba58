"""Kicked spin chain as a measuring apparatus for one system spin.

Site 0 is the system. Sites 1..N start spin up; at step k site k is rotated by
exp(-i theta sigma_x / 2) if and only if the system spin is down. With
theta = pi every kicked site is flipped, so the two branches become orthogonal
on every site that has been touched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .numkernel import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DimensionMismatch,
    max_abs,
    reduced_from_vector,
    tensor_product,
    tensor_vectors,
)

UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)


class ChainExhausted(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class SupportTooLarge(ValueError):
    pass


class PreconditionViolated(ValueError):
    pass


def site_rotation(theta: float) -> np.ndarray:
    return math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * PAULI_X


# -- Bloch vectors ---------------------------------------------------------------

def bloch_ket(e) -> np.ndarray:
    """The +1 eigenvector of sigma.e, first component real and non-negative.

    At either pole the azimuth is undefined and taken as 0.
    """
    e = np.asarray(e, dtype=float)
    if abs(np.linalg.norm(e) - 1) > 1e-9:
        raise ValueError("Bloch vector must have unit length")
    polar = math.acos(max(-1.0, min(1.0, e[2])))
    azimuth = math.atan2(e[1], e[0]) if math.hypot(e[0], e[1]) > 1e-15 else 0.0
    return np.array([math.cos(polar / 2), np.exp(1j * azimuth) * math.sin(polar / 2)])


def spin_along(e) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    return e[0] * PAULI_X + e[1] * PAULI_Y + e[2] * PAULI_Z


def product_overlap(e1, e2) -> float:
    """|<e1|e2>|^2 for product states, as the product of (1 + e1.e2)/2 per site."""
    if len(e1) != len(e2):
        raise LengthMismatch(f"{len(e1)} vs {len(e2)} sites")
    out = 1.0
    for a, b in zip(e1, e2):
        out *= (1 + float(np.dot(a, b))) / 2
    return out


def product_overlap_brute(e1, e2) -> float:
    if len(e1) != len(e2):
        raise LengthMismatch(f"{len(e1)} vs {len(e2)} sites")
    u = tensor_vectors(*[bloch_ket(a) for a in e1])
    v = tensor_vectors(*[bloch_ket(b) for b in e2])
    return float(abs(np.vdot(u, v)) ** 2)


def random_bloch(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


# -- the chain -------------------------------------------------------------------

@dataclass(frozen=True)
class ChainState:
    c_plus: complex
    c_minus: complex
    n_sites: int
    theta: float = math.pi
    t: int = 0

    def __post_init__(self):
        if abs(abs(self.c_plus) ** 2 + abs(self.c_minus) ** 2 - 1) > 1e-9:
            raise ValueError("branch amplitudes must be normalised")
        if not 0 <= self.t <= self.n_sites:
            raise ValueError("elapsed steps must lie in 0..N")
        if not 0 < self.theta <= math.pi:
            raise ValueError("theta must lie in (0, pi]")

    @property
    def dims(self) -> list[int]:
        return [2] * (self.n_sites + 1)

    def branch(self, sign: int) -> np.ndarray:
        """Unnormalised branch vector: amplitude times system spin times apparatus."""
        if sign > 0:
            return self.c_plus * tensor_vectors(UP, *[UP] * self.n_sites)
        r = site_rotation(self.theta) @ UP
        sites = [r] * self.t + [UP] * (self.n_sites - self.t)
        return self.c_minus * tensor_vectors(DOWN, *sites)

    def vector(self) -> np.ndarray:
        return self.branch(+1) + self.branch(-1)


def evolve_chain(s: ChainState, steps: int = 1) -> ChainState:
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if s.t + steps > s.n_sites:
        raise ChainExhausted(f"only {s.n_sites - s.t} sites left to kick")
    return replace(s, t=s.t + steps)


def evolve_chain_explicit(s: ChainState, steps: int = 1) -> np.ndarray:
    """Apply the controlled rotations to the full state vector one step at a time."""
    if s.t + steps > s.n_sites:
        raise ChainExhausted(f"only {s.n_sites - s.t} sites left to kick")
    psi = s.vector()
    down = np.diag([0, 1]).astype(complex)
    up = np.diag([1, 0]).astype(complex)
    n = s.n_sites
    for k in range(s.t + 1, s.t + steps + 1):
        ops_up = [up] + [np.eye(2)] * n
        ops_dn = [down] + [np.eye(2)] * n
        ops_dn[k] = site_rotation(s.theta)
        psi = (tensor_product(*ops_up) + tensor_product(*ops_dn)) @ psi
    return psi


def reduced_coherence(s: ChainState) -> float:
    return abs(s.c_plus) * abs(s.c_minus) * abs(math.cos(s.theta / 2)) ** s.t


def reduced_coherence_trace(s: ChainState) -> float:
    """Same quantity via the reduced density matrix of the system spin."""
    rho = reduced_from_vector(s.vector(), s.dims, [0])
    return float(abs(rho[0, 1]))


def branch_overlap(s: ChainState) -> complex:
    """<apparatus in + branch | apparatus in - branch>, equal to cos(theta/2)^t."""
    return complex(math.cos(s.theta / 2) ** s.t)


def _apply_on_front(op: np.ndarray, vec: np.ndarray, front_dim: int) -> np.ndarray:
    m = vec.reshape(front_dim, -1)
    return (op @ m).reshape(-1)


def local_cross_term(op, support: int, s: ChainState) -> complex:
    """<+ branch| op (x) 1 |- branch> for op acting on the system and sites 1..support."""
    if support > s.n_sites:
        raise SupportTooLarge(f"support {support} exceeds chain length {s.n_sites}")
    op = np.asarray(op, dtype=complex)
    front = 2 ** (support + 1)
    if op.shape != (front, front):
        raise DimensionMismatch(f"operator must be {front}x{front} for support {support}")
    return complex(np.vdot(s.branch(+1), _apply_on_front(op, s.branch(-1), front)))


def bell_operator(t: int, sites: int | None = None) -> np.ndarray:
    """sigma_x on the system times sigma_y on sites 1..t (and identity up to ``sites``)."""
    sites = t if sites is None else sites
    return tensor_product(PAULI_X, *([PAULI_Y] * t + [np.eye(2)] * (sites - t)))


def bell_witness(s: ChainState) -> complex:
    if abs(s.theta - math.pi) > 1e-12:
        raise PreconditionViolated("the witness is defined for the full-flip chain")
    if s.t < 1:
        raise PreconditionViolated("at least one site must have been kicked")
    return local_cross_term(bell_operator(s.t), s.t, s)


def truncation_check(s: ChainState, m: int):
    """Cross term of the witness cut down to m < t sites, and its distance to the full one."""
    if not 0 <= m < s.t:
        raise PreconditionViolated("truncation must keep fewer sites than were kicked")
    full = bell_operator(s.t)
    cut = bell_operator(m, s.t)
    return abs(local_cross_term(cut, s.t, s)), max_abs(full - cut)


def macrostate_equivalent(w1, w2, observables, tol: float = 1e-9) -> bool:
    w1, w2 = np.asarray(w1), np.asarray(w2)
    if w1.shape != w2.shape:
        raise DimensionMismatch(f"{w1.shape} vs {w2.shape}")
    for a in observables:
        a = np.asarray(a)
        if a.shape != w1.shape:
            raise DimensionMismatch(f"observable shape {a.shape} vs state {w1.shape}")
        if abs(np.trace(w1 @ a) - np.trace(w2 @ a)) > tol:
            return False
    return True
