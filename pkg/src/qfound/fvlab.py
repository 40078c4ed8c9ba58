"""Measurement through a coupled probe, in finite dimensions.

A coupling is a unitary U on system (x) probe; its scattering map is
X -> U* X U. Reading a probe effect B after preparing the probe in sigma
is the same, for every system state, as reading the induced system effect
eps_sigma(B) = (id (x) sigma)(U* (1 (x) B) U).

Locality is modelled with tensor factors. Each factor, coupling and
observable carries a region label; regions form a DAG of causal precedence.
Two items whose regions are causally unrelated must touch disjoint factors.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .numkernel import (
    DEFAULT_POLICY,
    DimensionMismatch,
    NotHermitian,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    TolerancePolicy,
    as_operator,
    is_hermitian,
    is_unitary,
    max_abs,
    partial_trace,
    random_density,
    random_hermitian,
    random_unitary,
    tensor_product,
)
from .report import CheckReport

CHOI_MAX_PROBE_DIM = 4


class CausalOrderViolated(ValueError):
    pass


class ZeroProbability(ValueError):
    pass


class NotAnEffect(ValueError):
    pass


# -- operators on several factors ------------------------------------------------

def embed(op, factors, dims) -> np.ndarray:
    """Lift ``op``, written on the listed factors in that order, to the full product space."""
    op = np.asarray(op, dtype=complex)
    factors = list(factors)
    dims = [int(d) for d in dims]
    local = [dims[f] for f in factors]
    if op.shape != (int(np.prod(local)),) * 2:
        raise DimensionMismatch(f"operator shape {op.shape} does not match factors {factors}")
    if len(set(factors)) != len(factors):
        raise ValueError("repeated factor")
    rest = [i for i in range(len(dims)) if i not in factors]
    full = np.kron(op, np.eye(int(np.prod([dims[i] for i in rest])) if rest else 1))
    order = factors + rest
    n = len(dims)
    t = full.reshape([dims[i] for i in order] * 2)
    inv = [order.index(i) for i in range(n)]
    t = t.transpose(inv + [n + k for k in inv])
    total = int(np.prod(dims))
    return t.reshape(total, total)


def flip_coupling(d: int) -> np.ndarray:
    """|k>|j> -> |k>|j + k mod d>: the system value shifts the probe."""
    u = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d):
        for j in range(d):
            u[k * d + (j + k) % d, k * d + j] = 1
    return u


def swap_gate(d: int) -> np.ndarray:
    u = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            u[b * d + a, a * d + b] = 1
    return u


# -- scattering maps -------------------------------------------------------------

@dataclass
class ScatteringMorphism:
    """Conjugation by a unitary on (system factors) (x) probe.

    ``support`` lists the system factors the coupling acts on; it is verified.
    """
    unitary: np.ndarray
    system_dims: tuple = ()
    probe_dim: int = 0
    support: frozenset | None = None
    region: str | None = None
    tol: float = 1e-9

    def __post_init__(self):
        self.unitary = as_operator(self.unitary)
        n = self.unitary.shape[0]
        if not self.system_dims:
            if not self.probe_dim:
                raise ValueError("need system_dims or probe_dim to split the space")
            self.system_dims = (n // self.probe_dim,)
        self.system_dims = tuple(int(d) for d in self.system_dims)
        ds = int(np.prod(self.system_dims))
        if not self.probe_dim:
            self.probe_dim = n // ds
        if ds * self.probe_dim != n:
            raise DimensionMismatch(f"{self.system_dims} x {self.probe_dim} does not match {n}")
        if not is_unitary(self.unitary, self.tol):
            raise ValueError("coupling is not unitary")
        if self.support is None:
            self.support = frozenset(range(len(self.system_dims)))
        self.support = frozenset(self.support)
        for f in range(len(self.system_dims)):
            if f not in self.support and not self.acts_trivially_on(f):
                raise ValueError(f"coupling acts on system factor {f} outside its declared support")

    @classmethod
    def local(cls, op, on_factors, system_dims, probe_dim, region=None):
        """Coupling written on some system factors and the probe (probe last in ``op``)."""
        dims = list(system_dims) + [probe_dim]
        u = embed(op, list(on_factors) + [len(system_dims)], dims)
        return cls(u, tuple(system_dims), probe_dim, frozenset(on_factors), region)

    @property
    def system_dim(self) -> int:
        return int(np.prod(self.system_dims))

    @property
    def dims(self) -> list[int]:
        return list(self.system_dims) + [self.probe_dim]

    def __call__(self, x) -> np.ndarray:
        return self.unitary.conj().T @ x @ self.unitary

    def evolve_state(self, rho) -> np.ndarray:
        return self.unitary @ rho @ self.unitary.conj().T

    def acts_trivially_on(self, factor: int) -> bool:
        d = self.dims
        for i, j in itertools.product(range(d[factor]), repeat=2):
            e = np.zeros((d[factor], d[factor]), dtype=complex)
            e[i, j] = 1
            x = embed(e, [factor], d)
            if max_abs(self(x) - x) > self.tol:
                return False
        return True


def identity_coupling(ds: int, dp: int) -> ScatteringMorphism:
    return ScatteringMorphism(np.eye(ds * dp), (ds,), dp)


def swap_coupling(d: int) -> ScatteringMorphism:
    return ScatteringMorphism(swap_gate(d), (d,), d)


def flip_controlled(d: int = 2) -> ScatteringMorphism:
    return ScatteringMorphism(flip_coupling(d), (d,), d)


def random_coupling(ds: int, dp: int, rng: np.random.Generator) -> ScatteringMorphism:
    return ScatteringMorphism(random_unitary(ds * dp, rng), (ds,), dp)


# -- effects and measures --------------------------------------------------------

@dataclass
class Effect:
    op: np.ndarray
    tol: float = 1e-9

    def __post_init__(self):
        self.op = as_operator(self.op)
        if not is_hermitian(self.op, self.tol):
            raise NotHermitian("effect")
        w = np.linalg.eigvalsh(self.op)
        if w.min() < -self.tol or w.max() > 1 + self.tol:
            raise NotAnEffect(f"spectrum [{w.min():.3g}, {w.max():.3g}] leaves [0, 1]")


@dataclass
class EffectValuedMeasure:
    effects: dict
    tol: float = 1e-9

    def __post_init__(self):
        self.effects = {k: (v if isinstance(v, Effect) else Effect(v, self.tol))
                        for k, v in self.effects.items()}
        if not self.effects:
            raise ValueError("empty outcome set")
        total = sum(e.op for e in self.effects.values())
        if max_abs(total - np.eye(total.shape[0])) > self.tol:
            raise ValueError("effects do not sum to the identity")

    @property
    def outcomes(self) -> list:
        return list(self.effects)

    def __getitem__(self, k) -> np.ndarray:
        return self.effects[k].op

    def is_sharp(self) -> bool:
        return all(max_abs(e.op @ e.op - e.op) <= self.tol for e in self.effects.values())


def pvm_of(observable) -> EffectValuedMeasure:
    """Spectral projectors of a Hermitian operator, keyed by eigenvalue (rounded)."""
    w, v = np.linalg.eigh(as_operator(observable))
    groups: dict = {}
    for i, x in enumerate(w):
        key = next((k for k in groups if abs(k - x) <= 1e-9), round(float(x), 12))
        groups.setdefault(key, []).append(v[:, i])
    return EffectValuedMeasure({k: sum(np.outer(c, c.conj()) for c in cols) for k, cols in groups.items()})


def product_evm(e1: EffectValuedMeasure, e2: EffectValuedMeasure) -> EffectValuedMeasure:
    return EffectValuedMeasure({(a, b): np.kron(e1[a], e2[b]) for a in e1.outcomes for b in e2.outcomes})


def marginal(evm: EffectValuedMeasure, slot: int) -> dict:
    out: dict = {}
    for key in evm.outcomes:
        out[key[slot]] = out.get(key[slot], 0) + evm[key]
    return out


# -- partial evaluation and the induced observable -------------------------------

def eta_sigma(c, sigma) -> np.ndarray:
    """(id (x) sigma)(C): out[i, j] = sum_{k,l} C[(i,k),(j,l)] sigma[l,k]."""
    c = as_operator(c)
    sigma = as_operator(sigma)
    db = sigma.shape[0]
    if c.shape[0] % db:
        raise DimensionMismatch(f"operator of size {c.shape[0]} does not factor through {db}")
    da = c.shape[0] // db
    return np.einsum("ikjl,lk->ij", c.reshape(da, db, da, db), sigma)


def eta_sigma_termwise(c, sigma) -> np.ndarray:
    """Same map via an elementary-tensor expansion of C (slow; for cross-checking)."""
    c = as_operator(c)
    sigma = as_operator(sigma)
    db = sigma.shape[0]
    da = c.shape[0] // db
    out = np.zeros((da, da), dtype=complex)
    t = c.reshape(da, db, da, db)
    for k, l in itertools.product(range(db), repeat=2):
        a = t[:, k, :, l]
        e = np.zeros((db, db), dtype=complex)
        e[k, l] = 1
        out += a * np.trace(sigma @ e)
    return out


def induced_observable(b, sigma, theta: ScatteringMorphism) -> np.ndarray:
    b = as_operator(b)
    if b.shape[0] != theta.probe_dim or as_operator(sigma).shape[0] != theta.probe_dim:
        raise DimensionMismatch("probe operator or state does not match the coupling")
    lifted = np.kron(np.eye(theta.system_dim), b)
    return eta_sigma(theta(lifted), sigma)


def induced_map(sigma, theta: ScatteringMorphism):
    return lambda b: induced_observable(b, sigma, theta)


def measured_expectation(b, sigma, theta: ScatteringMorphism, omega) -> complex:
    lifted = np.kron(np.eye(theta.system_dim), as_operator(b))
    return complex(np.trace(np.kron(omega, sigma) @ theta(lifted)))


def choi_matrix(channel, d_in: int) -> np.ndarray:
    blocks = []
    for i in range(d_in):
        row = []
        for j in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[i, j] = 1
            row.append(channel(e))
        blocks.append(row)
    return np.block(blocks)


def _random_operator(d: int, rng) -> np.ndarray:
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def check_epsilon_properties(sigma, theta: ScatteringMorphism, trials: int = 5, seed: int = 42,
                             tol: float = 1e-9) -> CheckReport:
    rng = np.random.default_rng(seed)
    rep = CheckReport("induced observable")
    ds, dp = theta.system_dim, theta.probe_dim
    eps = induced_map(sigma, theta)
    r = max_abs(eps(np.eye(dp)) - np.eye(ds))
    rep.add("unital", r <= tol, r, 0.0, tol)
    star, schwarz, defining, auto = 0.0, np.inf, 0.0, 0.0
    for _ in range(trials):
        b = _random_operator(dp, rng)
        star = max(star, max_abs(eps(b.conj().T) - eps(b).conj().T))
        e = eps(b)
        gap = eps(b.conj().T @ b) - e.conj().T @ e
        schwarz = min(schwarz, float(np.linalg.eigvalsh((gap + gap.conj().T) / 2).min()))
        omega = random_density(ds, rng)
        defining = max(defining, abs(np.trace(omega @ e) - measured_expectation(b, sigma, theta, omega)))
        x, y = _random_operator(ds * dp, rng), _random_operator(ds * dp, rng)
        auto = max(auto, max_abs(theta(x @ y) - theta(x) @ theta(y)),
                   max_abs(theta(x.conj().T) - theta(x).conj().T))
    rep.add("star compatible", star <= tol, star, 0.0, tol)
    rep.add("Schwarz inequality (min eigenvalue)", schwarz >= -tol, schwarz, 0.0, tol)
    rep.add("system expectation reproduces probe statistic", defining <= tol, defining, 0.0, tol)
    rep.add("scattering map is a *-automorphism", auto <= tol, auto, 0.0, tol)
    if dp <= CHOI_MAX_PROBE_DIM:
        ch = choi_matrix(eps, dp)
        m = float(np.linalg.eigvalsh((ch + ch.conj().T) / 2).min())
        rep.add("completely positive (Choi min eigenvalue)", m >= -tol, m, 0.0, tol)
    else:
        rep.notes.append(f"Choi test skipped: probe dim {dp} > {CHOI_MAX_PROBE_DIM}")
    return rep


# -- instruments -----------------------------------------------------------------

def _effect_op(b) -> np.ndarray:
    return b.op if isinstance(b, Effect) else as_operator(b)


def _sqrt_psd(b: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((b + b.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def pre_instrument(b, sigma, theta: ScatteringMorphism, omega):
    """Unnormalised updated system state and the probability of seeing ``b``.

    tr(rho' A) = (omega (x) sigma)(Theta(A (x) B)) for every system A.
    """
    b = _effect_op(b)
    root = np.kron(np.eye(theta.system_dim), _sqrt_psd(b))
    evolved = theta.evolve_state(np.kron(omega, sigma))
    rho = partial_trace(root @ evolved @ root, [theta.system_dim, theta.probe_dim], [1])
    rho = (rho + rho.conj().T) / 2
    return rho, float(np.trace(rho).real)


def post_select(b, sigma, theta: ScatteringMorphism, omega, tol: float = 1e-12) -> np.ndarray:
    rho, w = pre_instrument(b, sigma, theta, omega)
    if w <= tol:
        raise ZeroProbability("the effect is never observed in this state")
    return rho / w


def evm_induce(evm: EffectValuedMeasure, sigma, theta: ScatteringMorphism) -> EffectValuedMeasure:
    return EffectValuedMeasure({k: induced_observable(evm[k], sigma, theta) for k in evm.outcomes},
                               tol=max(evm.tol, 1e-9))


def unsharpness(evm: EffectValuedMeasure) -> float:
    """Smallest eigenvalue of E - E^2 over outcomes (0 for a projection-valued measure)."""
    return min(float(np.linalg.eigvalsh(evm[k] - evm[k] @ evm[k]).min()) for k in evm.outcomes)


def largest_unsharpness(evm: EffectValuedMeasure) -> float:
    return max(float(np.linalg.eigvalsh(evm[k] - evm[k] @ evm[k]).max()) for k in evm.outcomes)


def variance_check(b, sigma, theta: ScatteringMorphism, omega):
    """(variance of the probe reading, variance of the induced observable in omega)."""
    b = as_operator(b)
    if not is_hermitian(b):
        raise NotHermitian("probe observable")
    m1 = measured_expectation(b, sigma, theta, omega).real
    m2 = measured_expectation(b @ b, sigma, theta, omega).real
    e = induced_observable(b, sigma, theta)
    v_ind = float(np.trace(omega @ e @ e).real - np.trace(omega @ e).real ** 2)
    return float(m2 - m1 * m1), v_ind


def distinguishing_state(a, a2) -> np.ndarray:
    """A density matrix on which two different Hermitian operators have different means."""
    d = as_operator(a) - as_operator(a2)
    w, v = np.linalg.eigh(d)
    k = int(np.argmax(np.abs(w)))
    return np.outer(v[:, k], v[:, k].conj())


# -- regions and causal order ----------------------------------------------------

@dataclass
class LocalFactorization:
    factor_dims: list
    region_of_factor: dict
    causal_order: list = field(default_factory=list)   # (earlier, later) pairs
    spacelike: set = field(default_factory=set)

    def __post_init__(self):
        self.factor_dims = [int(d) for d in self.factor_dims]
        self.spacelike = {frozenset(p) for p in self.spacelike}
        regions = self.regions()
        for a, b in self.causal_order:
            if a == b:
                raise ValueError(f"region {a} cannot precede itself")
        for a in regions:
            if a in self.past(a, strict=True):
                raise ValueError(f"causal order has a cycle through {a}")
        for p in self.spacelike:
            a, b = tuple(p)
            if self.comparable(a, b):
                raise ValueError(f"regions {a} and {b} are declared spacelike but causally ordered")

    def regions(self) -> set:
        out = set(self.region_of_factor.values())
        for a, b in self.causal_order:
            out |= {a, b}
        for p in self.spacelike:
            out |= set(p)
        return out

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factor_dims))

    def past(self, region, strict: bool = False) -> set:
        seen, stack = set(), [region]
        while stack:
            r = stack.pop()
            for a, b in self.causal_order:
                if b == r and a not in seen:
                    seen.add(a)
                    stack.append(a)
        return seen if strict else seen | {region}

    def precedes(self, a, b) -> bool:
        return a != b and a in self.past(b, strict=True)

    def comparable(self, a, b) -> bool:
        return a == b or self.precedes(a, b) or self.precedes(b, a)

    def causally_disjoint(self, a, b) -> bool:
        return not self.comparable(a, b)

    def check_item(self, region, factors) -> None:
        for f in factors:
            fr = self.region_of_factor.get(f)
            if fr is not None and self.causally_disjoint(region, fr):
                raise CausalOrderViolated(
                    f"item in region {region} acts on factor {f} of causally disjoint region {fr}")

    def check_separated(self, items) -> None:
        """items: (name, region, factor set). Causally disjoint items must not share factors."""
        for (n1, r1, f1), (n2, r2, f2) in itertools.combinations(items, 2):
            if self.causally_disjoint(r1, r2) and set(f1) & set(f2):
                raise CausalOrderViolated(f"{n1} and {n2} are causally disjoint but share factors")


# -- two probes ------------------------------------------------------------------

def _three_fold(theta1: ScatteringMorphism, theta2: ScatteringMorphism):
    """Lift both couplings to probe1 (x) system (x) probe2."""
    if theta1.system_dims != theta2.system_dims:
        raise DimensionMismatch("the two couplings act on different systems")
    sd = list(theta1.system_dims)
    ns = len(sd)
    dims = [theta1.probe_dim] + sd + [theta2.probe_dim]
    sys_idx = list(range(1, ns + 1))
    u1 = embed(theta1.unitary, sys_idx + [0], dims)
    u2 = embed(theta2.unitary, sys_idx + [ns + 1], dims)
    return dims, u1, u2


def joint_pre_instrument(b1, sigma1, theta1, b2, sigma2, theta2, omega, first: int = 1):
    """One combined probe: state sigma1 (x) sigma2, effect B1 (x) B2, coupling applied 1 then 2."""
    dims, u1, u2 = _three_fold(theta1, theta2)
    u = u2 @ u1 if first == 1 else u1 @ u2
    rho = tensor_product(sigma1, omega, sigma2)
    root = tensor_product(_sqrt_psd(_effect_op(b1)), np.eye(int(np.prod(dims[1:-1]))),
                          _sqrt_psd(_effect_op(b2)))
    out = partial_trace(root @ u @ rho @ u.conj().T @ root, dims, [0, len(dims) - 1])
    return (out + out.conj().T) / 2


def compose_instruments(b1, sigma1, theta1: ScatteringMorphism, b2, sigma2, theta2: ScatteringMorphism,
                        omega, factorization: LocalFactorization | None = None,
                        tol: float = 1e-10) -> CheckReport:
    rep = CheckReport("instrument composition")
    r1, r2 = theta1.region, theta2.region
    disjoint = False
    if factorization is not None and r1 is not None and r2 is not None:
        if factorization.precedes(r2, r1):
            raise CausalOrderViolated(f"second coupling region {r2} lies in the past of {r1}")
        disjoint = factorization.causally_disjoint(r1, r2)
        if disjoint and theta1.support & theta2.support:
            raise CausalOrderViolated("causally disjoint couplings share a system factor")
    seq, _ = pre_instrument(b2, sigma2, theta2, pre_instrument(b1, sigma1, theta1, omega)[0])
    joint = joint_pre_instrument(b1, sigma1, theta1, b2, sigma2, theta2, omega)
    r = max_abs(seq - joint)
    rep.add("sequential equals joint probe", r <= tol, r, 0.0, tol)
    swapped, _ = pre_instrument(b1, sigma1, theta1, pre_instrument(b2, sigma2, theta2, omega)[0])
    gap = max_abs(swapped - seq)
    if disjoint:
        rep.add("order independent for causally disjoint couplings", gap <= tol, gap, 0.0, tol)
    else:
        rep.notes.append(f"order-swapped composition differs by {gap:.3e}")
    rep.add("order gap", True, gap)
    return rep


@dataclass
class LocalObservable:
    op: np.ndarray
    factors: tuple
    region: str


def nonsignaling_check(theta1: ScatteringMorphism, theta2: ScatteringMorphism, observable: LocalObservable,
                       omega, sigma1, sigma2, factorization: LocalFactorization, enforce: bool = True):
    """<C> after both couplings versus after the second coupling alone.

    Space order: system factors, probe1, probe2.
    """
    o1, o2, o3 = theta1.region, theta2.region, observable.region
    if enforce:
        if factorization.precedes(o2, o1):
            raise CausalOrderViolated(f"{o2} lies in the past of {o1}")
        if factorization.precedes(o3, o2):
            raise CausalOrderViolated(f"{o3} lies in the past of {o2}")
        if not factorization.causally_disjoint(o1, o3):
            raise CausalOrderViolated(f"{o3} is not spacelike to {o1}")
        factorization.check_item(o1, theta1.support)
        factorization.check_item(o2, theta2.support)
        factorization.check_item(o3, observable.factors)
        factorization.check_separated([("first coupling", o1, theta1.support),
                                       ("second coupling", o2, theta2.support),
                                       ("observable", o3, set(observable.factors))])
    sd = list(theta1.system_dims)
    ns = len(sd)
    dims = sd + [theta1.probe_dim, theta2.probe_dim]
    sys_idx = list(range(ns))
    u1 = embed(theta1.unitary, sys_idx + [ns], dims)
    u2 = embed(theta2.unitary, sys_idx + [ns + 1], dims)
    c_full = embed(observable.op, list(observable.factors), dims)
    heis = u1.conj().T @ (u2.conj().T @ c_full @ u2) @ u1
    with_a = float(np.trace(tensor_product(omega, sigma1, sigma2) @ heis).real)
    c_sys = embed(observable.op, list(observable.factors), sd)
    without_a = float(np.trace(np.kron(omega, sigma2) @ theta2(np.kron(c_sys, np.eye(theta2.probe_dim)))).real)
    return with_a, without_a, abs(with_a - without_a)


# -- scenario files --------------------------------------------------------------

PAULIS = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z, "i": np.eye(2, dtype=complex)}


@dataclass
class FvScenario:
    factorization: LocalFactorization
    names: list
    couplings: dict
    probes: dict
    observables: dict
    effects: dict
    system_state: np.ndarray


def _probe_state(kind: str, d: int, rng) -> np.ndarray:
    if kind == "ground":
        s = np.zeros((d, d), dtype=complex)
        s[0, 0] = 1
        return s
    if kind == "mixed":
        return np.eye(d, dtype=complex) / d
    if kind == "plus":
        v = np.ones(d) / np.sqrt(d)
        return np.outer(v, v).astype(complex)
    if kind == "random":
        return random_density(d, rng)
    raise ValueError(f"unknown probe state {kind!r}")


def parse_fv_scenario(text: str, seed: int = 42) -> FvScenario:
    """Line-oriented description; see the ``fv_nosignal.scn`` data file for the grammar."""
    rng = np.random.default_rng(seed)
    names, dims, regions = [], [], {}
    order, spacelike = [], set()
    raw_couplings, probes_raw, obs_raw, effects_raw = [], {}, [], {}
    state_kind = "random"
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        w = line.split()
        try:
            if w[0] == "factor":
                names.append(w[1])
                dims.append(int(w[2]))
                if len(w) > 4 and w[3] == "region":
                    regions[len(names) - 1] = w[4]
            elif w[0] == "before":
                order.append((w[1], w[2]))
            elif w[0] == "spacelike":
                spacelike.add(frozenset((w[1], w[2])))
            elif w[0] == "coupling":
                # coupling NAME region R on F1 .. probe P gate G [arg]
                name, region = w[1], w[3]
                on = w[5:w.index("probe")]
                probe = w[w.index("probe") + 1]
                gate = w[w.index("gate") + 1:]
                raw_couplings.append((name, region, on, probe, gate))
            elif w[0] == "probe":
                probes_raw[w[1]] = w[3]
            elif w[0] == "observable":
                # observable NAME region R on F1 .. pauli a b ..
                k = w.index("pauli")
                obs_raw.append((w[1], w[3], w[5:k], w[k + 1:]))
            elif w[0] == "effect":
                effects_raw[w[1]] = w[2]
            elif w[0] == "system":
                state_kind = w[2]
            else:
                raise ValueError(f"unknown directive {w[0]!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"line {n}: {exc}") from None
    index = {nm: i for i, nm in enumerate(names)}
    fact = LocalFactorization(dims, regions, order, spacelike)
    probe_names = {c[3] for c in raw_couplings}
    system = [nm for nm in names if nm not in probe_names]
    sys_index = {nm: i for i, nm in enumerate(system)}
    sys_dims = [dims[index[nm]] for nm in system]
    couplings = {}
    for name, region, on, probe, gate in raw_couplings:
        local_dims = [dims[index[f]] for f in on] + [dims[index[probe]]]
        d = int(np.prod(local_dims))
        kind = gate[0]
        if kind == "swap":
            u = swap_gate(local_dims[0])
        elif kind == "flip":
            u = flip_coupling(local_dims[0])
        elif kind == "random":
            u = random_unitary(d, np.random.default_rng(int(gate[1]) if len(gate) > 1 else seed))
        elif kind == "identity":
            u = np.eye(d, dtype=complex)
        else:
            raise ValueError(f"unknown gate {kind!r}")
        th = ScatteringMorphism.local(u, [sys_index[f] for f in on], sys_dims, dims[index[probe]], region)
        fact.check_item(region, [sys_index[f] for f in on])
        couplings[name] = (th, probe)
    # regions of system factors are re-keyed to system indices for the checks above
    fact.region_of_factor = {sys_index[nm]: regions[index[nm]] for nm in system if index[nm] in regions}
    probes = {p: _probe_state(k, dims[index[p]], rng) for p, k in probes_raw.items()}
    observables = {}
    for name, region, on, paulis in obs_raw:
        op = tensor_product(*[PAULIS[p] for p in paulis])
        observables[name] = LocalObservable(op, tuple(sys_index[f] for f in on), region)
    effects = {}
    for p, kind in effects_raw.items():
        d = dims[index[p]]
        e = np.zeros((d, d), dtype=complex)
        e[0 if kind == "ground" else d - 1, 0 if kind == "ground" else d - 1] = 1
        effects[p] = e
    ds = int(np.prod(sys_dims))
    omega = _probe_state(state_kind, ds, rng)
    return FvScenario(fact, system, couplings, probes, observables, effects, omega)


def random_suite(trials: int = 50, seed: int = 42, dims=(3, 3), tol: float = 1e-9,
                 composition_tol: float = 1e-10) -> CheckReport:
    """Randomised property sweep over seeded couplings."""
    ds, dp = dims
    rep = CheckReport("fv random suite")
    worst: dict = {}

    def track(name, value, better="low"):
        prev = worst.get(name)
        if prev is None or (value > prev if better == "low" else value < prev):
            worst[name] = value

    ss = np.random.SeedSequence(seed)
    for child in ss.spawn(trials):
        rng = np.random.default_rng(child)
        theta = random_coupling(ds, dp, rng)
        sigma = random_density(dp, rng)
        sub = check_epsilon_properties(sigma, theta, trials=3, seed=int(rng.integers(1 << 31)), tol=tol)
        for c in sub.checks:
            better = "high" if "min eigenvalue" in c.name else "low"
            track(c.name, c.value, better)
        omega = random_density(ds, rng)
        b = random_hermitian(dp, rng)
        vm, vi = variance_check(b, sigma, theta, omega)
        track("variance inequality margin", vm - vi, "high")
        # composition on one shared system
        theta2 = random_coupling(ds, dp, rng)
        e1 = _random_effect(dp, rng)
        e2 = _random_effect(dp, rng)
        s2 = random_density(dp, rng)
        comp = compose_instruments(e1, sigma, theta, e2, s2, theta2, omega, tol=composition_tol)
        track("composition residual", comp["sequential equals joint probe"].value)
        # causally disjoint couplings on a split system
        fact = LocalFactorization([ds, ds], {0: "K1", 1: "K2"}, [], {("K1", "K2")})
        t1 = ScatteringMorphism.local(random_unitary(ds * dp, rng), [0], [ds, ds], dp, "K1")
        t2 = ScatteringMorphism.local(random_unitary(ds * dp, rng), [1], [ds, ds], dp, "K2")
        om2 = random_density(ds * ds, rng)
        comp2 = compose_instruments(e1, sigma, t1, e2, s2, t2, om2, fact, tol=composition_tol)
        track("composition residual", comp2["sequential equals joint probe"].value)
        track("order independence residual",
              comp2["order independent for causally disjoint couplings"].value)
        # non-signalling: A couples to factor 0, B to factor 1, C reads factor 1
        fact3 = LocalFactorization([ds, ds], {0: "O1", 1: "O3"}, [("O2", "O3")], {("O1", "O2"), ("O1", "O3")})
        a1 = ScatteringMorphism.local(random_unitary(ds * dp, rng), [0], [ds, ds], dp, "O1")
        a2 = ScatteringMorphism.local(random_unitary(ds * dp, rng), [1], [ds, ds], dp, "O2")
        cobs = LocalObservable(random_hermitian(ds, rng), (1,), "O3")
        _, _, gap = nonsignaling_check(a1, a2, cobs, om2, sigma, s2, fact3)
        track("non-signalling gap", gap)
    for name, value in worst.items():
        if "min eigenvalue" in name:
            rep.add(name, value >= -tol, value, 0.0, tol)
        elif name == "variance inequality margin":
            rep.add(name, value >= -tol, value, 0.0, tol)
        elif name in ("composition residual", "order independence residual", "non-signalling gap"):
            rep.add(name, value <= composition_tol, value, 0.0, composition_tol)
        else:
            rep.add(name, value <= tol, value, 0.0, tol)
    return rep


def _random_effect(d: int, rng) -> np.ndarray:
    h = random_hermitian(d, rng)
    w, v = np.linalg.eigh(h)
    w = (w - w.min()) / (w.max() - w.min() + 1e-300)
    return (v * w) @ v.conj().T
