"""The lattice of orthogonal projectors on a finite-dimensional Hilbert space."""
from __future__ import annotations

import numpy as np

from .numkernel import (
    DEFAULT_POLICY,
    DimensionMismatch,
    TolerancePolicy,
    hermitian_eigendecomposition,
    is_projector,
    max_abs,
    normalize,
    orthonormal_range_basis,
    projector_from_basis,
    range_basis_of,
)


class PreconditionViolated(ValueError):
    pass


class SearchExhausted(RuntimeError):
    pass


class BorderlineRank(ValueError):
    """An eigenvalue sits strictly between 0 and 1 beyond tolerance."""


def _check_pair(p, q):
    if p.shape != q.shape:
        raise DimensionMismatch(f"{p.shape} vs {q.shape}")


def projector(op, pol: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if not is_projector(op, pol.eq_tol):
        raise ValueError("operator is not an orthogonal projector")
    return op


def rank(p, pol: TolerancePolicy = DEFAULT_POLICY) -> int:
    w, _ = hermitian_eigendecomposition(p, pol)
    mid = (w > pol.eq_tol) & (w < 1 - pol.eq_tol)
    if np.any(mid):
        raise BorderlineRank(f"eigenvalues {w[mid]} are neither 0 nor 1")
    return int(np.sum(w > 0.5))


def ray_projector(v) -> np.ndarray:
    v = normalize(v)
    return np.outer(v, v.conj())


def span_projector(vectors, pol: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    vectors = list(vectors)
    dim = len(np.asarray(vectors[0]))
    return projector_from_basis(orthonormal_range_basis(vectors, pol), dim)


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def zero(dim: int) -> np.ndarray:
    return np.zeros((dim, dim), dtype=complex)


def complement(p) -> np.ndarray:
    return np.eye(p.shape[0]) - p


def meet(p, q, pol: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """Projector onto range(p) ∩ range(q): null space of (1-p)+(1-q)."""
    _check_pair(p, q)
    d = p.shape[0]
    s = 2 * np.eye(d) - p - q
    w, v = hermitian_eigendecomposition(s, pol)
    # eigenvalues of s lie in [0, 2]; zero marks the intersection
    thresh = max(pol.eq_tol, 1e-7)
    basis = v[:, w <= thresh]
    return projector_from_basis(basis, d)


def join(p, q, pol: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    _check_pair(p, q)
    d = p.shape[0]
    cols = []
    for x in (p, q):
        b = range_basis_of(x, pol)
        cols.extend(b[:, k] for k in range(b.shape[1]))
    if not cols:
        return zero(d)
    return projector_from_basis(orthonormal_range_basis(cols, pol), d)


def leq(p, q, pol: TolerancePolicy = DEFAULT_POLICY) -> bool:
    _check_pair(p, q)
    return max_abs(q @ p - p) <= pol.eq_tol


def equal(p, q, tol: float = 1e-9) -> bool:
    return max_abs(p - q) <= tol


def check_orthomodular(p, q, pol: TolerancePolicy = DEFAULT_POLICY) -> bool:
    if not leq(p, q, pol):
        raise PreconditionViolated("orthomodular check needs p <= q")
    rhs = join(p, meet(complement(p), q, pol), pol)
    return equal(q, rhs, 10 * pol.eq_tol)


def check_modular(m, n, l, pol: TolerancePolicy = DEFAULT_POLICY) -> bool:
    if not leq(m, n, pol):
        raise PreconditionViolated("modular check needs m <= n")
    lhs = join(m, meet(l, n, pol), pol)
    rhs = meet(join(m, l, pol), n, pol)
    return equal(lhs, rhs, 10 * pol.eq_tol)


def distributivity_gap(p, q, r, pol: TolerancePolicy = DEFAULT_POLICY):
    lhs = meet(p, join(q, r, pol), pol)
    rhs = join(meet(p, q, pol), meet(p, r, pol), pol)
    return lhs, rhs, max_abs(lhs - rhs)


def distributivity_witness(dim: int, seed: int, pol: TolerancePolicy = DEFAULT_POLICY,
                           max_attempts: int = 1000):
    """Random rank-1 triple (p, q, r) for which p∧(q∨r) and (p∧q)∨(p∧r) differ by > 0.5.

    The ray of p is drawn inside the plane spanned by the rays of q and r;
    otherwise (dim >= 3) p∧(q∨r) is generically zero and no witness appears.
    """
    if dim < 2:
        raise ValueError("distributivity holds trivially below dimension 2")
    rng = np.random.default_rng(seed)

    def rand_vec():
        return rng.normal(size=dim) + 1j * rng.normal(size=dim)

    for _ in range(max_attempts):
        u, w = rand_vec(), rand_vec()
        c = rng.normal(size=2) + 1j * rng.normal(size=2)
        p = ray_projector(c[0] * u + c[1] * w)
        q, r = ray_projector(u), ray_projector(w)
        lhs, rhs, gap = distributivity_gap(p, q, r, pol)
        if gap > 0.5:
            return p, q, r, lhs, rhs, gap
    raise SearchExhausted(f"no witness in {max_attempts} attempts")


def modularity_gap(n: int, a: float) -> float:
    """Distance from the first basis vector to span{a^k xi_k - a^k e_2k : k <= n}.

    xi_k = e_2k + a^-k e_1 + a^-2k e_2k+1 in a (2n+2)-dimensional truncation.
    The distance is bounded by a^-n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if a <= 1:
        raise ValueError("a must exceed 1")
    dim = 2 * n + 2
    e = np.eye(dim)

    def basis(i):  # 1-based labels
        return e[i - 1]

    cols = []
    for k in range(1, n + 1):
        xi = basis(2 * k) + a ** (-k) * basis(1) + a ** (-2 * k) * basis(2 * k + 1)
        cols.append(a ** k * xi - a ** k * basis(2 * k))
    m = np.column_stack(cols)
    target = basis(1)
    coef, *_ = np.linalg.lstsq(m, target, rcond=None)
    return float(np.linalg.norm(m @ coef - target))


def random_projector(dim: int, rank_: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=(dim, rank_)) + 1j * rng.normal(size=(dim, rank_))
    q, _ = np.linalg.qr(x)
    return q @ q.conj().T


def random_nested_pair(dim: int, rng: np.random.Generator):
    """Projectors p <= q built from a common random unitary frame."""
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    u, _ = np.linalg.qr(x)
    rq = int(rng.integers(0, dim + 1))
    rp = int(rng.integers(0, rq + 1))
    p = u[:, :rp] @ u[:, :rp].conj().T
    q = u[:, :rq] @ u[:, :rq].conj().T
    return p, q


def random_modular_triple(dim: int, rng: np.random.Generator):
    m, n = random_nested_pair(dim, rng)
    l = random_projector(dim, int(rng.integers(0, dim + 1)), rng)
    return m, n, l
