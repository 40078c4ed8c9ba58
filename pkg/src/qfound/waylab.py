"""Conservation laws versus repeatable measurement.

An exact measurement of M that respects an additive charge L1 + L2 needs
[L1, M] = 0. When that fails, an apparatus prepared in a broad superposition
of charge values still measures M approximately, with a noise norm squared of
4l/(2N+1). This module builds that apparatus explicitly, checks it, produces
the charge-preserving unitary that realises it, and evaluates the
Robertson-type lower bound on the noise.

Apparatus space layout: one block of ``mult`` basis vectors for every charge
value lam in -(N+l)..(N+l). Inside a block, the first dim(H1) slots hold the
pointer components and the remaining ones hold the noise components.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numkernel import (
    DEFAULT_POLICY,
    DimensionMismatch,
    NotHermitian,
    TolerancePolicy,
    as_operator,
    commutator,
    complete_basis,
    is_hermitian,
    max_abs,
    tensor_product,
    tensor_vectors,
)
from .report import CheckReport


class GramNotPSD(ValueError):
    pass


class InsufficientMultiplicity(ValueError):
    pass


class GramMismatch(ValueError):
    def __init__(self, msg, worst=None):
        super().__init__(msg)
        self.worst = worst


class ConservationViolated(ValueError):
    pass


class ZeroVariance(ValueError):
    pass


# -- the obstruction -------------------------------------------------------------

@dataclass(frozen=True)
class ConservedPair:
    measured: np.ndarray
    charge_system: np.ndarray
    charge_apparatus: np.ndarray
    l: int

    def __post_init__(self):
        for name in ("measured", "charge_system", "charge_apparatus"):
            if not is_hermitian(getattr(self, name)):
                raise NotHermitian(name)
        for op in (self.charge_system, self.charge_apparatus):
            ev = np.linalg.eigvalsh(op)
            if max_abs(ev - np.round(ev)) > 1e-9:
                raise ValueError("charges must have integer spectrum")
        ev = np.linalg.eigvalsh(self.charge_system)
        if int(round(max(abs(ev)))) != self.l:
            raise ValueError("l must equal the largest |eigenvalue| of the system charge")

    def total_charge(self) -> np.ndarray:
        return conserved_total(self.charge_system, self.charge_apparatus)


def conserved_total(l1, l2) -> np.ndarray:
    l1, l2 = as_operator(l1), as_operator(l2)
    return tensor_product(l1, np.eye(l2.shape[0])) + tensor_product(np.eye(l1.shape[0]), l2)


@dataclass
class YanaseVerdict:
    commutes: bool
    commutator_max: float

    @property
    def verdict(self) -> str:
        if self.commutes:
            return "exact conservation-respecting repeatable measurement not excluded"
        return "no exact conservation-respecting repeatable measurement exists"


def yanase_condition(measured, charge, pol: TolerancePolicy = DEFAULT_POLICY) -> YanaseVerdict:
    m, c = as_operator(measured), as_operator(charge)
    if m.shape != c.shape:
        raise DimensionMismatch(f"{m.shape} vs {c.shape}")
    for name, op in (("measured", m), ("charge", c)):
        if not is_hermitian(op, pol.eq_tol):
            raise NotHermitian(name)
    gap = max_abs(commutator(c, m))
    return YanaseVerdict(gap <= pol.eq_tol, gap)


# -- the fiduciary apparatus -----------------------------------------------------

def cutoff_for(l: int, epsilon: float) -> int:
    """Least integer N with N > 2l/epsilon - 1/2 (strict)."""
    bound = 2 * l / epsilon - 0.5
    n = math.ceil(bound)
    if n <= bound:
        n += 1
    return max(n, 0)


@dataclass
class FiduciaryApparatus:
    l: int
    epsilon: float
    N: int
    charge_values: list[int]        # L1 eigenvalue of each system basis vector
    basis: np.ndarray               # columns: the measured observable's eigenbasis
    labels: list[tuple]             # (mu, k) per column of ``basis``
    mult: int                       # dim of each apparatus charge block
    xi: np.ndarray
    pointer: dict                   # (mu, k) -> apparatus vector
    residue: np.ndarray             # system vector with zero charge
    noise: dict                     # (mu, k) -> apparatus vector
    outcome_values: dict = field(default_factory=dict)  # mu -> eigenvalue of the measured observable

    @property
    def dim_system(self) -> int:
        return len(self.charge_values)

    @property
    def span(self) -> int:
        return self.N + self.l

    @property
    def lams(self) -> range:
        return range(-self.span, self.span + 1)

    @property
    def dim_apparatus(self) -> int:
        return len(self.lams) * self.mult

    @property
    def block_sizes(self) -> dict:
        return {lam: self.mult for lam in self.lams}

    def charge_system(self) -> np.ndarray:
        return np.diag(np.array(self.charge_values, dtype=complex))

    def charge_apparatus(self) -> np.ndarray:
        return np.diag(np.repeat(np.array(list(self.lams), dtype=complex), self.mult))

    def block(self, v: np.ndarray, lam: int) -> np.ndarray:
        start = (lam + self.span) * self.mult
        return v[start:start + self.mult]

    def system_projector(self, lam: int) -> np.ndarray:
        return np.diag([1.0 + 0j if c == lam else 0j for c in self.charge_values])

    def expected_noise(self) -> float:
        return 4 * self.l / (2 * self.N + 1)

    def measured_noise(self) -> float:
        """Largest squared norm of the noise component residue x eta over outcomes."""
        r = float(np.linalg.norm(self.residue) ** 2)
        return max(r * float(np.linalg.norm(self.noise[lab]) ** 2) for lab in self.labels)

    def initial_vectors(self) -> list[np.ndarray]:
        return [tensor_vectors(self.basis[:, a], self.xi) for a in range(len(self.labels))]

    def final_vectors(self) -> list[np.ndarray]:
        return [tensor_vectors(self.basis[:, a], self.pointer[lab])
                + tensor_vectors(self.residue, self.noise[lab])
                for a, lab in enumerate(self.labels)]

    def pointer_observable(self, values=None) -> np.ndarray:
        """Sum over mu of value(mu) times the projector onto span{pointer(mu, k)}."""
        out = np.zeros((self.dim_apparatus, self.dim_apparatus), dtype=complex)
        mus = sorted({mu for mu, _ in self.labels})
        for mu in mus:
            val = (values or self.outcome_values or {}).get(mu, mu)
            vecs = [self.pointer[lab] for lab in self.labels if lab[0] == mu]
            q, r = np.linalg.qr(np.column_stack(vecs))
            keep = np.abs(np.diag(r)) > 1e-12
            q = q[:, keep]
            out += val * (q @ q.conj().T)
        return out


def _measured_basis(measured: np.ndarray, pol: TolerancePolicy):
    """Eigenbasis of the measured observable, labelled (eigenvalue index, multiplicity index)."""
    w, v = np.linalg.eigh(measured)
    labels, mu, k = [], 0, 0
    for i in range(len(w)):
        if i > 0:
            if abs(w[i] - w[i - 1]) > pol.eq_tol:
                mu, k = mu + 1, 0
            else:
                k += 1
        labels.append((mu, k))
    values = {lab[0]: float(w[i]) for i, lab in enumerate(labels)}
    return v.astype(complex), labels, values


def default_measured(dim: int) -> np.ndarray:
    """An observable whose eigenbasis is the discrete Fourier basis (generic w.r.t. the charge)."""
    f = np.array([[np.exp(2j * np.pi * a * b / dim) for b in range(dim)]
                  for a in range(dim)]) / math.sqrt(dim)
    return f @ np.diag(np.arange(dim, dtype=float)) @ f.conj().T


def noise_gram(lam: int, N: int, l: int, overlaps: dict, n: int) -> np.ndarray:
    """Gram of the noise components at charge lam, from the preservation identity.

    ``overlaps[lam1]`` is the matrix <phi_a, P1(lam1) phi_b>.
    """
    g = np.zeros((n, n), dtype=complex)
    xi_sq = 1 / (2 * N + 1)
    for lam1, ov in overlaps.items():
        nu = lam - lam1
        s = xi_sq if abs(nu) <= N else 0.0
        x = xi_sq if abs(nu) <= N - 2 * l else 0.0
        g += ov * s - (ov * np.eye(n)) * x
    return g


def closed_form_noise_gram(lam: int, N: int, l: int, overlaps: dict, n: int) -> np.ndarray:
    """The closed-form range-by-range Gram, restricted to |lam - lam1| <= N in the outer range."""
    a = abs(lam)
    g = np.zeros((n, n), dtype=complex)
    if a > N + l or a <= N - 3 * l:
        return g
    for lam1, ov in overlaps.items():
        nu = abs(lam - lam1)
        if nu > N - 2 * l and nu <= N:
            g += ov if a > N - l else ov * np.eye(n)
    return g / (2 * N + 1)


def _psd_root(g: np.ndarray, pol: TolerancePolicy, lam: int) -> np.ndarray:
    g = (g + g.conj().T) / 2
    w, v = np.linalg.eigh(g)
    if w.size and w.min() < -pol.eq_tol:
        raise GramNotPSD(f"noise Gram at charge {lam} has eigenvalue {w.min():.3e}")
    w = np.clip(w, 0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def build_fiduciary(l: int, epsilon: float, dims_per_charge: dict | None = None,
                    measured=None, mult: int | None = None,
                    pol: TolerancePolicy = DEFAULT_POLICY) -> FiduciaryApparatus:
    """Construct pointer, noise and preparation vectors for a charge bounded by l.

    ``dims_per_charge`` maps each system charge value to its multiplicity and
    must include 0 (the noise residue lives there). Default: {1: 1, 0: 1}.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie strictly between 0 and 1")
    if l < 0:
        raise ValueError("l must be non-negative")
    dims_per_charge = dims_per_charge or {1: 1, 0: 1}
    if l == 0:
        dims_per_charge = {0: sum(dims_per_charge.values())}
    if any(abs(c) > l for c in dims_per_charge):
        raise ValueError("system charge values must lie in -l..l")
    if dims_per_charge.get(0, 0) < 1:
        raise ValueError("the system charge needs a zero eigenvalue for the residue state")
    charge_values = [c for c in sorted(dims_per_charge, reverse=True)
                     for _ in range(dims_per_charge[c])]
    d1 = len(charge_values)
    measured = default_measured(d1) if measured is None else as_operator(measured)
    if measured.shape != (d1, d1):
        raise DimensionMismatch(f"measured observable must be {d1}x{d1}")
    basis, labels, values = _measured_basis(measured, pol)
    mult = 2 * d1 if mult is None else mult
    N = cutoff_for(l, epsilon) if l > 0 else 0
    span = N + l
    lams = range(-span, span + 1)
    dim2 = len(lams) * mult

    overlaps = {}
    for c in sorted(set(charge_values)):
        p = np.diag([1.0 if cv == c else 0.0 for cv in charge_values]).astype(complex)
        overlaps[c] = basis.conj().T @ p @ basis

    xi = np.zeros(dim2, dtype=complex)
    pointer = {lab: np.zeros(dim2, dtype=complex) for lab in labels}
    noise = {lab: np.zeros(dim2, dtype=complex) for lab in labels}
    amp = 1 / math.sqrt(2 * N + 1)
    for lam in lams:
        start = (lam + span) * mult
        if abs(lam) <= N:
            xi[start] = amp
        if abs(lam) <= N - 2 * l:
            if mult < d1:
                raise InsufficientMultiplicity(f"charge block {lam} cannot host {d1} pointer vectors")
            for a, lab in enumerate(labels):
                pointer[lab][start + a] = amp
        g = noise_gram(lam, N, l, overlaps, d1)
        if max_abs(g) <= pol.eq_tol * 1e-3:
            continue
        root = _psd_root(g, pol, lam)
        rank = int(np.sum(np.linalg.eigvalsh((g + g.conj().T) / 2) > pol.eq_tol))
        free = mult - (d1 if abs(lam) <= N - 2 * l else 0)
        if rank > free or mult - d1 < d1:
            raise InsufficientMultiplicity(f"charge block {lam} has room for {free} noise directions")
        for a, lab in enumerate(labels):
            noise[lab][start + d1:start + 2 * d1] = root[:, a]

    residue = np.array([1.0 if c == 0 else 0.0 for c in charge_values], dtype=complex)
    residue[[i for i, c in enumerate(charge_values) if c == 0][1:]] = 0
    return FiduciaryApparatus(l, epsilon, N, charge_values, basis, labels, mult,
                              xi, pointer, residue, noise, values)


def lam_range(lam: int, N: int, l: int) -> int:
    """Which of the four charge ranges lam falls in (1 = outermost)."""
    a = abs(lam)
    if a > N + l:
        return 1
    if a > N - l:
        return 2
    if a > N - 3 * l:
        return 3
    return 4


def verify_fiduciary(app: FiduciaryApparatus, pol: TolerancePolicy = DEFAULT_POLICY) -> CheckReport:
    tol = 10 * pol.eq_tol
    rep = CheckReport("fiduciary")
    labs = app.labels
    ptr = np.column_stack([app.pointer[x] for x in labs])
    nse = np.column_stack([app.noise[x] for x in labs])
    gx = ptr.conj().T @ ptr
    gn = nse.conj().T @ nse
    mu = np.array([x[0] for x in labs])
    cross_mu = mu[:, None] != mu[None, :]
    off = ~np.eye(len(labs), dtype=bool)

    rep.add("preparation normalised", abs(np.linalg.norm(app.xi) ** 2 - 1) <= tol,
            float(np.linalg.norm(app.xi) ** 2), 1.0, tol)
    rep.add("residue has zero charge",
            max_abs(app.charge_system() @ app.residue) <= tol,
            max_abs(app.charge_system() @ app.residue), 0.0, tol)
    r = float(np.max(np.abs(gx[cross_mu]))) if cross_mu.any() else 0.0
    rep.add("pointers for different outcomes orthogonal", r <= tol, r, 0.0, tol)
    r = max_abs(ptr.conj().T @ nse)
    rep.add("pointers orthogonal to noise", r <= tol, r, 0.0, tol)
    r = float(np.max(np.abs(gn[off]))) if off.any() else 0.0
    rep.add("noise vectors mutually orthogonal", r <= tol, r, 0.0, tol)
    want = app.expected_noise()
    r = max(abs(gn[a, a].real * np.linalg.norm(app.residue) ** 2 - want) for a in range(len(labs)))
    rep.add("noise norm equals 4l/(2N+1)", r <= tol, r, 0.0, tol)
    rep.add("noise below epsilon", want < app.epsilon or app.l == 0, want, app.epsilon)
    want_ptr = 1 - want
    r = max(abs(gx[a, a].real - want_ptr) for a in range(len(labs)))
    rep.add("pointer norm equals 1 - 4l/(2N+1)", r <= tol, r, 0.0, tol)

    overlaps = {}
    for c in sorted(set(app.charge_values)):
        p = app.system_projector(c)
        overlaps[c] = app.basis.conj().T @ p @ app.basis
    worst = {1: 0.0, 2: 0.0, 3: 0.0, 4: 0.0}
    for lam in range(-app.span - 2 * app.l, app.span + 2 * app.l + 1):
        lhs = np.zeros((len(labs), len(labs)), dtype=complex)
        for lam1, ov in overlaps.items():
            nu = lam - lam1
            if abs(nu) > app.span:
                continue
            xb = app.block(app.xi, nu)
            pb = np.column_stack([app.block(app.pointer[x], nu) for x in labs])
            lhs += ov * (np.vdot(xb, xb) - pb.conj().T @ pb)
        if abs(lam) <= app.span:
            nb = np.column_stack([app.block(app.noise[x], lam) for x in labs])
            rhs = nb.conj().T @ nb
        else:
            rhs = np.zeros_like(lhs)
        rng = lam_range(lam, app.N, app.l)
        worst[rng] = max(worst[rng], max_abs(lhs - rhs))
    names = {1: "|lam| > N+l", 2: "N+l >= |lam| > N-l", 3: "N-l >= |lam| > N-3l", 4: "|lam| <= N-3l"}
    for k in (1, 2, 3, 4):
        rep.add(f"Gram preservation, {names[k]}", worst[k] <= tol, worst[k], 0.0, tol)
    return rep


# -- charge-preserving unitary extension -----------------------------------------

def _eigenspaces(op: np.ndarray, tol: float):
    w, v = np.linalg.eigh(op)
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or abs(w[i] - w[start]) > max(tol, 1e-9):
            groups.append((float(np.mean(w[start:i])), v[:, start:i]))
            start = i
    return groups


def _polar_isometry(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m, full_matrices=False)
    return u @ vh


def extend_conserving_unitary(psi_in, psi_out, charge,
                              pol: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Unitary commuting with ``charge`` that sends each psi_in[a] to psi_out[a].

    Built eigenspace by eigenspace: an isometry between the spans of the
    projected vectors, completed on the orthogonal complements by pairing
    standard-basis Gram-Schmidt completions in index order.
    """
    charge = as_operator(charge)
    if len(psi_in) != len(psi_out):
        raise DimensionMismatch("need as many output vectors as input vectors")
    a_all = np.column_stack([np.asarray(v, dtype=complex) for v in psi_in])
    b_all = np.column_stack([np.asarray(v, dtype=complex) for v in psi_out])
    dim = charge.shape[0]
    if a_all.shape[0] != dim or b_all.shape[0] != dim:
        raise DimensionMismatch("vectors do not match the charge dimension")
    u = np.zeros((dim, dim), dtype=complex)
    worst = (0.0, None, None, None)
    spaces = _eigenspaces(charge, pol.eq_tol)
    for lam, vb in spaces:
        a = vb.conj().T @ a_all
        b = vb.conj().T @ b_all
        gap = np.abs(a.conj().T @ a - b.conj().T @ b)
        if gap.size and gap.max() > worst[0]:
            i, j = np.unravel_index(np.argmax(gap), gap.shape)
            worst = (float(gap.max()), lam, int(i), int(j))
    if worst[0] > pol.eq_tol:
        g, lam, i, j = worst
        raise GramMismatch(f"charge {lam:g}: Gram entry ({i}, {j}) differs by {g:.3e}", worst)
    for lam, vb in spaces:
        n = vb.shape[1]
        a = vb.conj().T @ a_all
        b = vb.conj().T @ b_all
        ua, s, wh = np.linalg.svd(a, full_matrices=False)
        rank = int(np.sum(s > max(pol.eq_tol, 1e-12) * max(1.0, s[0] if s.size else 1.0)))
        if rank:
            qa = ua[:, :rank]
            qb = _polar_isometry(b @ wh.conj().T[:, :rank] / s[:rank])
        else:
            qa = qb = np.zeros((n, 0), dtype=complex)
        fa = complete_basis(qa, n)
        fb = complete_basis(qb, n)
        block = fb @ fa.conj().T
        u += vb @ block @ vb.conj().T
    return u


def fiduciary_unitary(app: FiduciaryApparatus, pol: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    total = conserved_total(app.charge_system(), app.charge_apparatus())
    return extend_conserving_unitary(app.initial_vectors(), app.final_vectors(), total, pol)


def unitary_report(u, psi_in, psi_out, charge, tol: float = 1e-9) -> CheckReport:
    rep = CheckReport("conserving unitary")
    r = max_abs(commutator(u, charge))
    rep.add("commutes with the total charge", r <= tol, r, 0.0, tol)
    r = max_abs(u.conj().T @ u - np.eye(u.shape[0]))
    rep.add("unitary", r <= tol, r, 0.0, tol)
    r = max((np.linalg.norm(u @ a - b) for a, b in zip(psi_in, psi_out)), default=0.0)
    rep.add("maps initial vectors to final vectors", r <= tol, float(r), 0.0, tol)
    return rep


# -- noise lower bound -----------------------------------------------------------

def _variance(op: np.ndarray, v: np.ndarray) -> float:
    m = np.vdot(v, op @ v).real
    return float(np.vdot(v, op @ (op @ v)).real - m * m)


def noise_operator(u, measured, meter, d1: int, d2: int, convention: str = "meter") -> np.ndarray:
    """Difference between the measured quantity and the meter reading.

    ``meter``: U*(1 x A)U - M x 1, the meter read after the interaction compared
    with the observable before it. ``printed``: U*(M x 1)U - 1 x A.
    """
    m1 = tensor_product(measured, np.eye(d2))
    a2 = tensor_product(np.eye(d1), meter)
    if convention == "meter":
        return u.conj().T @ a2 @ u - m1
    if convention == "printed":
        return u.conj().T @ m1 @ u - a2
    raise ValueError(f"unknown convention {convention!r}")


def ozawa_noise_bound(u, measured, meter, charge_system, charge_apparatus, psi, xi,
                      tol: float = 1e-9, convention: str = "meter"):
    """(noise squared, Robertson lower bound) for input psi and apparatus preparation xi."""
    u = as_operator(u)
    measured, meter = as_operator(measured), as_operator(meter)
    l1, l2 = as_operator(charge_system), as_operator(charge_apparatus)
    d1, d2 = l1.shape[0], l2.shape[0]
    if u.shape != (d1 * d2, d1 * d2):
        raise DimensionMismatch("coupling does not act on system x apparatus")
    total = conserved_total(l1, l2)
    drift = max_abs(commutator(u, total))
    if drift > tol:
        raise ConservationViolated(f"[U, L] has max entry {drift:.3e}")
    v = tensor_vectors(psi, xi)
    nop = noise_operator(u, measured, meter, d1, d2, convention)
    noise_sq = float(np.vdot(nop @ v, nop @ v).real)
    num = abs(np.vdot(v, commutator(nop, total) @ v)) ** 2
    den = 4 * _variance(tensor_product(l1, np.eye(d2)), v) + 4 * _variance(tensor_product(np.eye(d1), l2), v)
    if den <= tol * tol:
        if num <= tol:
            return noise_sq, 0.0
        raise ZeroVariance("both charge variances vanish but the commutator term does not")
    return noise_sq, float(num / den)


def random_conserving_unitary(l1, l2, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary inside each eigenspace of L1 x 1 + 1 x L2."""
    total = conserved_total(l1, l2)
    u = np.zeros_like(total)
    for _, vb in _eigenspaces(total, 1e-9):
        n = vb.shape[1]
        x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        q, r = np.linalg.qr(x)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        u += vb @ q @ vb.conj().T
    return u


@dataclass
class ExactMeasurement:
    """A repeatable, charge-respecting measurement of an observable that commutes with L1."""
    measured: np.ndarray
    charge_system: np.ndarray
    charge_apparatus: np.ndarray
    xi: np.ndarray
    unitary: np.ndarray
    meter: np.ndarray


def exact_measurement(values=(1.0, -1.0), charges=(1, 0), span: int = 2) -> ExactMeasurement:
    """System eigenbasis = charge eigenbasis; one apparatus slot per outcome in every charge block.

    U sends e_mu x xi to e_mu x X_mu, where X_mu copies xi's charge profile into slot mu.
    """
    d1 = len(values)
    lams = list(range(-span, span + 1))
    d2 = len(lams) * d1
    measured = np.diag(np.array(values, dtype=complex))
    l1 = np.diag(np.array(charges, dtype=complex))
    l2 = np.diag(np.repeat(np.array(lams, dtype=complex), d1))
    xi = np.zeros(d2, dtype=complex)
    for i in range(len(lams)):
        xi[i * d1] = 1
    xi /= np.linalg.norm(xi)
    e = np.eye(d1)
    psi_in, psi_out = [], []
    meter = np.zeros((d2, d2), dtype=complex)
    for mu in range(d1):
        x = np.zeros(d2, dtype=complex)
        for i in range(len(lams)):
            x[i * d1 + mu] = xi[i * d1]
            meter[i * d1 + mu, i * d1 + mu] = values[mu]
        psi_in.append(tensor_vectors(e[mu], xi))
        psi_out.append(tensor_vectors(e[mu], x))
    u = extend_conserving_unitary(psi_in, psi_out, conserved_total(l1, l2))
    return ExactMeasurement(measured, l1, l2, xi, u, meter)


# -- serialisation ---------------------------------------------------------------

def dump_apparatus(app: FiduciaryApparatus) -> str:
    """Manifest lines, then one ``vector <name>`` table of 're im' rows per stored vector."""
    lines = [f"l {app.l}", f"epsilon {app.epsilon!r}", f"N {app.N}", f"mult {app.mult}",
             "charges " + " ".join(str(c) for c in app.charge_values),
             "outcomes " + " ".join(repr(float(app.outcome_values[m])) for m in sorted(app.outcome_values))]

    def table(name, v):
        lines.append(f"vector {name}")
        lines.extend(f"{float(z.real)!r} {float(z.imag)!r}" for z in v)

    for a, lab in enumerate(app.labels):
        table(f"basis {lab[0]} {lab[1]}", app.basis[:, a])
    table("xi", app.xi)
    table("residue", app.residue)
    for lab in app.labels:
        table(f"pointer {lab[0]} {lab[1]}", app.pointer[lab])
        table(f"noise {lab[0]} {lab[1]}", app.noise[lab])
    return "\n".join(lines) + "\n"


def load_apparatus(text: str) -> FiduciaryApparatus:
    head: dict = {}
    vectors: dict = {}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("vector "):
            current = tuple(line.split()[1:])
            vectors[current] = []
        elif current is None:
            key, _, rest = line.partition(" ")
            head[key] = rest
        else:
            re_, im = line.split()
            vectors[current].append(complex(float(re_), float(im)))
    arr = {k: np.array(v, dtype=complex) for k, v in vectors.items()}
    labels = sorted({(int(k[1]), int(k[2])) for k in arr if k[0] == "basis"})
    return FiduciaryApparatus(
        l=int(head["l"]), epsilon=float(head["epsilon"]), N=int(head["N"]),
        charge_values=[int(c) for c in head["charges"].split()],
        basis=np.column_stack([arr[("basis", str(m), str(k))] for m, k in labels]),
        labels=labels, mult=int(head["mult"]), xi=arr[("xi",)],
        pointer={lab: arr[("pointer", str(lab[0]), str(lab[1]))] for lab in labels},
        residue=arr[("residue",)],
        noise={lab: arr[("noise", str(lab[0]), str(lab[1]))] for lab in labels},
        outcome_values=dict(enumerate(float(x) for x in head.get("outcomes", "").split())),
    )
