"""Dense complex linear algebra shared by every other module.

Operators are plain ``numpy`` arrays of dtype complex128; state vectors are 1-d
arrays.  All comparisons use the max-entry norm.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

JACOBI_MAX_DIM = 64
JACOBI_MAX_SWEEPS = 100


class NotHermitian(ValueError):
    pass


class ConvergenceFailure(RuntimeError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TolerancePolicy:
    eq_tol: float = 1e-9
    rank_tol_factor: float = 1e-12

    def __post_init__(self):
        if not (self.eq_tol > 0 and self.rank_tol_factor > 0):
            raise ValueError("tolerances must be strictly positive")


DEFAULT_POLICY = TolerancePolicy()


def as_operator(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"operator must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("operator has non-finite entries")
    return m


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(a, tol: float = 1e-9) -> bool:
    a = np.asarray(a)
    return max_abs(a - a.conj().T) <= tol


def is_projector(a, tol: float = 1e-9) -> bool:
    a = np.asarray(a)
    return is_hermitian(a, tol) and max_abs(a @ a - a) <= tol


def is_unitary(a, tol: float = 1e-9) -> bool:
    a = np.asarray(a)
    return max_abs(a.conj().T @ a - np.eye(a.shape[0])) <= tol


def is_density(rho, tol: float = 1e-9) -> bool:
    rho = np.asarray(rho)
    if not is_hermitian(rho, tol):
        return False
    ev = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    return ev.min() >= -tol and abs(np.trace(rho).real - 1.0) <= tol


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def ket_projector(v) -> np.ndarray:
    v = normalize(v)
    return np.outer(v, v.conj())


def _fix_phase(vecs: np.ndarray, thresh: float) -> np.ndarray:
    # make the first significant component of each column real and >= 0
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = np.flatnonzero(np.abs(col) > thresh)
        if idx.size:
            z = col[idx[0]]
            out[:, k] = col * (abs(z) / z)
    return out


def jacobi_eigh(a: np.ndarray, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi rotations for a Hermitian matrix; returns unsorted (w, V)."""
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= 1e-15 * scale:
            return np.real(np.diag(a)).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                c = a[p, q]
                r = abs(c)
                if r <= 1e-18 * scale:
                    a[p, q] = a[q, p] = 0.0
                    continue
                phase = c / r
                app, aqq = a[p, p].real, a[q, q].real
                tau = (aqq - app) / (2 * r)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1 + tau * tau))
                cs = 1 / np.sqrt(1 + t * t)
                sn = t * cs
                j = np.array([[cs, sn], [-sn * np.conj(phase), cs * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ j
                a[idx, :] = j.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ j
    raise ConvergenceFailure(f"Jacobi did not converge in {max_sweeps} sweeps")


def hermitian_eigendecomposition(a, pol: TolerancePolicy = DEFAULT_POLICY):
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""
    a = as_operator(a)
    if not is_hermitian(a, pol.eq_tol):
        raise NotHermitian(f"max |A - A*| = {max_abs(a - a.conj().T):.3e}")
    h = (a + a.conj().T) / 2
    if h.shape[0] <= JACOBI_MAX_DIM:
        w, v = jacobi_eigh(h)
    else:
        w, v = np.linalg.eigh(h)
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    return w, _fix_phase(v, pol.rank_tol_factor)


def tensor_product(*ops) -> np.ndarray:
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def tensor_vectors(*vecs) -> np.ndarray:
    return reduce(np.kron, [np.asarray(v, dtype=complex) for v in vecs])


def partial_trace(a, dims, traced) -> np.ndarray:
    """Trace out the factors listed in ``traced`` (0-based indices into dims)."""
    a = np.asarray(a, dtype=complex)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims)) if dims else 1
    if a.shape != (total, total):
        raise DimensionMismatch(f"dims {dims} do not match operator shape {a.shape}")
    traced = sorted(set(traced))
    if any(t < 0 or t >= len(dims) for t in traced):
        raise DimensionMismatch(f"factor index out of range: {traced}")
    n = len(dims)
    t = a.reshape(dims + dims)
    # trace from the highest index down so axis numbers stay valid
    for k, idx in enumerate(sorted(traced, reverse=True)):
        m = n - k
        t = np.trace(t, axis1=idx, axis2=idx + m)
    keep = [d for i, d in enumerate(dims) if i not in traced]
    size = int(np.prod(keep)) if keep else 1
    return t.reshape(size, size)


def reduced_from_vector(psi, dims, keep) -> np.ndarray:
    """Reduced density matrix of a pure state without forming |psi><psi|."""
    psi = np.asarray(psi, dtype=complex)
    dims = [int(d) for d in dims]
    keep = sorted(set(keep))
    rest = [i for i in range(len(dims)) if i not in keep]
    t = psi.reshape(dims).transpose(keep + rest)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    m = t.reshape(dk, -1)
    return m @ m.conj().T


def orthonormal_range_basis(vectors, pol: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Orthonormal basis (as columns) of the span of the given vectors."""
    vecs = [np.asarray(v, dtype=complex).ravel() for v in vectors]
    if not vecs:
        return np.zeros((0, 0), dtype=complex)
    dim = vecs[0].shape[0]
    if any(v.shape[0] != dim for v in vecs):
        raise DimensionMismatch("vectors of different dimensions")
    m = np.column_stack(vecs)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((dim, 0), dtype=complex)
    rank = int(np.sum(s > pol.rank_tol_factor * s[0]))
    return _fix_phase(u[:, :rank], pol.rank_tol_factor)


def range_basis_of(op, pol: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    return orthonormal_range_basis(list(op.T), pol) if op.size else op


def projector_from_basis(basis: np.ndarray, dim: int | None = None) -> np.ndarray:
    if basis.size == 0:
        d = dim if dim is not None else basis.shape[0]
        return np.zeros((d, d), dtype=complex)
    return basis @ basis.conj().T


def complete_basis(basis: np.ndarray, dim: int, pol: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Extend orthonormal columns to a full orthonormal basis, deterministically.

    Candidates are the standard basis vectors in index order (Gram-Schmidt).
    """
    cols = [basis[:, k] for k in range(basis.shape[1])] if basis.size else []
    for i in range(dim):
        if len(cols) == dim:
            break
        e = np.zeros(dim, dtype=complex)
        e[i] = 1
        for _ in range(2):
            for c in cols:
                e = e - c * np.vdot(c, e)
        n = np.linalg.norm(e)
        if n > 1e-8:
            cols.append(e / n)
    return np.column_stack(cols) if cols else np.zeros((dim, 0), dtype=complex)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (x + x.conj().T) / 2


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(x)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    return normalize(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    k = rank or dim
    x = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
