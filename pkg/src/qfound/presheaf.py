"""Contexts, characters and global sections at finite dimension.

A context (abelian algebra of observables) is stored as the partition of the
space into its minimal projectors; a character picks one block. At finite
dimension the weak closure of a commuting family equals its algebraic span,
so the block partition is the whole algebra.

A ray family gives a poset of contexts: the trivial one, one per ray, one per
orthogonal pair that sits in no full context, and the full contexts. A global
section (one character per context, compatible under restriction) exists
exactly when the rays admit a 0/1 coloring.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .numkernel import (
    DEFAULT_POLICY,
    DimensionMismatch,
    NotHermitian,
    TolerancePolicy,
    as_operator,
    commutator,
    is_hermitian,
    max_abs,
)
from .report import CheckReport

DEGENERACY_GAP = 1e-7


class NotCommuting(ValueError):
    def __init__(self, msg, pair=None, norm=None):
        super().__init__(msg)
        self.pair, self.norm = pair, norm


class NotIncluded(ValueError):
    pass


class DegeneracyWarning(UserWarning):
    pass


@dataclass
class Context:
    d: int
    bases: list            # orthonormal columns spanning each block
    generators: list = field(default_factory=list)
    name: str = ""

    @property
    def blocks(self) -> list[np.ndarray]:
        return [q @ q.conj().T for q in self.bases]

    @property
    def ranks(self) -> list[int]:
        return [q.shape[1] for q in self.bases]

    def validate(self, tol: float = 1e-9) -> None:
        total = sum(self.blocks)
        if max_abs(total - np.eye(self.d)) > tol:
            raise ValueError(f"blocks of {self.name or 'context'} do not sum to the identity")
        for p, q in itertools.combinations(self.blocks, 2):
            if max_abs(p @ q) > tol:
                raise ValueError("blocks are not orthogonal")
        for a in self.generators:
            if not self.contains(a, tol):
                raise ValueError("generator is not diagonal in the block decomposition")

    def contains(self, a, tol: float = 1e-9) -> bool:
        a = as_operator(a)
        return all(max_abs(a @ q - q * _block_value(a, q)) <= max(tol, 1e-9) * max(1.0, max_abs(a))
                   for q in self.bases)

    def same_partition(self, other: "Context", tol: float = 1e-9) -> bool:
        if sorted(self.ranks) != sorted(other.ranks):
            return False
        return all(any(max_abs(p - q) <= tol for q in other.blocks) for p in self.blocks)

    @classmethod
    def from_blocks(cls, projectors, name: str = "", generators=None, tol: float = 1e-9) -> "Context":
        bases = []
        for p in projectors:
            p = as_operator(p)
            w, v = np.linalg.eigh((p + p.conj().T) / 2)
            bases.append(v[:, w > 0.5])
        ctx = cls(projectors[0].shape[0], bases, list(generators or []), name)
        ctx.validate(tol)
        return ctx


def _block_value(a: np.ndarray, q: np.ndarray) -> complex:
    return complex(np.trace(q.conj().T @ a @ q) / q.shape[1])


def trivial_context(d: int) -> Context:
    return Context(d, [np.eye(d, dtype=complex)], [], "trivial")


def generate_context(generators, pol: TolerancePolicy = DEFAULT_POLICY, name: str = "") -> Context:
    """Minimal common refinement of the generators' eigenspaces."""
    gens = [as_operator(a) for a in generators]
    if not gens:
        raise ValueError("need at least one generator (use trivial_context for the scalars)")
    d = gens[0].shape[0]
    for a in gens:
        if a.shape != (d, d):
            raise DimensionMismatch("generators of different sizes")
        if not is_hermitian(a, pol.eq_tol):
            raise NotHermitian("generator")
    worst = (0.0, None)
    for (i, a), (j, b) in itertools.combinations(enumerate(gens), 2):
        n = max_abs(commutator(a, b))
        if n > worst[0]:
            worst = (n, (i, j))
    if worst[0] > pol.eq_tol:
        raise NotCommuting(f"generators {worst[1]} have commutator norm {worst[0]:.3e}", *worst[::-1])

    bases = [np.eye(d, dtype=complex)]
    for a in gens:
        refined = []
        for q in bases:
            w, v = np.linalg.eigh(q.conj().T @ a @ q)
            start = 0
            for k in range(1, len(w) + 1):
                if k < len(w):
                    gap = w[k] - w[k - 1]
                    if gap <= pol.eq_tol:
                        continue
                    if gap < DEGENERACY_GAP:
                        warnings.warn(f"eigenvalues {w[k - 1]:.10g} and {w[k]:.10g} merged",
                                      DegeneracyWarning, stacklevel=2)
                        continue
                refined.append(q @ v[:, start:k])
                start = k
        bases = refined
    return Context(d, bases, gens, name)


@dataclass(frozen=True)
class Character:
    context: Context
    block: int

    def __call__(self, a) -> complex:
        a = as_operator(a)
        q = self.context.bases[self.block]
        val = _block_value(a, q)
        if max_abs(a @ q - val * q) > 1e-8 * max(1.0, max_abs(a)):
            raise ValueError("operator does not belong to this context")
        return val

    def __eq__(self, other):
        return isinstance(other, Character) and self.context is other.context and self.block == other.block

    def __hash__(self):
        return hash((id(self.context), self.block))


def characters(ctx: Context) -> list[Character]:
    return [Character(ctx, k) for k in range(len(ctx.bases))]


def spectrum_matches(ctx: Context, a, tol: float = 1e-9) -> bool:
    vals = sorted(chi(a).real for chi in characters(ctx))
    ev = np.linalg.eigvalsh(as_operator(a))
    uniq = sorted({round(float(x), 9) for x in vals})
    uniq_ev = sorted({round(float(x), 9) for x in ev})
    return len(uniq) == len(uniq_ev) and all(abs(x - y) <= tol for x, y in zip(uniq, uniq_ev))


# -- inclusion and restriction ---------------------------------------------------

def restriction_map(sub: Context, sup: Context, tol: float = 1e-9) -> list[int] | None:
    """For each block of ``sup`` the block of ``sub`` containing it, or None if not included."""
    if sub.d != sup.d:
        return None
    sub_blocks = sub.blocks
    out = []
    for q in sup.bases:
        hit = None
        for k, p in enumerate(sub_blocks):
            if max_abs(p @ q - q) <= tol:
                hit = k
                break
        if hit is None:
            return None
        out.append(hit)
    return out


def includes(sub: Context, sup: Context, tol: float = 1e-9) -> bool:
    return restriction_map(sub, sup, tol) is not None


def restrict_character(chi: Character, sub: Context, tol: float = 1e-9) -> Character:
    m = restriction_map(sub, chi.context, tol)
    if m is None:
        raise NotIncluded(f"{sub.name or 'context'} is not contained in {chi.context.name or 'context'}")
    return Character(sub, m[chi.block])


def polynomial_check(chi: Character, a, coeffs=(0.5, -1.0, 2.0, 0.25)) -> float:
    """|chi(f(A)) - f(chi(A))| for the polynomial with the given coefficients (constant first)."""
    a = as_operator(a)
    fa = sum(c * np.linalg.matrix_power(a, k) for k, c in enumerate(coeffs))
    x = chi(a)
    return abs(chi(fa) - sum(c * x ** k for k, c in enumerate(coeffs)))


@dataclass
class ContextPoset:
    contexts: list
    inclusion: list          # (sub index, sup index) pairs, reflexive pairs omitted
    maps: dict = field(default_factory=dict)

    @classmethod
    def from_contexts(cls, contexts, candidates=None, tol: float = 1e-9) -> "ContextPoset":
        """Compute inclusions among all pairs, or only among ``candidates`` when given."""
        pairs = candidates if candidates is not None else [
            (i, j) for i, j in itertools.permutations(range(len(contexts)), 2)]
        inclusion, maps = [], {}
        for i, j in pairs:
            m = restriction_map(contexts[i], contexts[j], tol)
            if m is not None:
                inclusion.append((i, j))
                maps[(i, j)] = m
        poset = cls(list(contexts), inclusion, maps)
        poset.validate()
        return poset

    def validate(self) -> None:
        rel = set(self.inclusion)
        for i, j in rel:
            if (j, i) in rel and not self.contexts[i].same_partition(self.contexts[j]):
                raise ValueError("inclusion is not antisymmetric")
        for (i, j), (k, m) in itertools.product(rel, rel):
            if j == k and i != m and (i, m) not in rel and restriction_map(
                    self.contexts[i], self.contexts[m]) is None:
                raise ValueError("inclusion is not transitive")

    def index(self, name: str) -> int:
        for i, c in enumerate(self.contexts):
            if c.name == name:
                return i
        raise KeyError(name)


# -- global sections -------------------------------------------------------------

def global_section_search(poset: ContextPoset):
    """One character per context, compatible with every restriction, or None.

    Branches on contexts in declared order and characters in block order, with
    arc-consistency propagation along inclusions; independent parts of the
    poset are solved separately and their failures cached.
    """
    n = len(poset.contexts)
    cons: dict[int, list] = {i: [] for i in range(n)}
    for (i, j) in poset.inclusion:
        m = poset.maps.get((i, j)) or restriction_map(poset.contexts[i], poset.contexts[j])
        cons[i].append((j, m, "sub"))
        cons[j].append((i, m, "sup"))

    def allowed(dom_x, y, m, role, dom_y):
        # values of x compatible with some value of y
        if role == "sub":      # x is sub, y is sup: x == m[y]
            return {v for v in dom_x if any(m[w] == v for w in dom_y)}
        return {v for v in dom_x if m[v] in dom_y}   # x is sup

    def propagate(doms, queue):
        while queue:
            y = queue.pop()
            for x, m, role in cons[y]:
                # role describes y relative to x, so flip it for x
                new = allowed(doms[x], y, m, "sup" if role == "sub" else "sub", doms[y])
                if new != doms[x]:
                    if not new:
                        return False
                    doms[x] = new
                    queue.append(x)
        return True

    failed: set = set()

    def components(doms, within):
        free = [i for i in within if len(doms[i]) > 1]
        seen, out = set(), []
        for s in free:
            if s in seen:
                continue
            comp, stack = [], [s]
            seen.add(s)
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _, _ in cons[u]:
                    if v not in seen and len(doms[v]) > 1:
                        seen.add(v)
                        stack.append(v)
            out.append(sorted(comp))
        return out

    def solve(doms, comp):
        key = (tuple(comp), tuple(frozenset(doms[i]) for i in comp))
        if key in failed:
            return None
        var = comp[0]
        for val in sorted(doms[var]):
            trial = dict(doms)
            trial[var] = {val}
            if not propagate(trial, [var]):
                continue
            ok = True
            for sub in components(trial, comp):
                res = solve(trial, sub)
                if res is None:
                    ok = False
                    break
                trial.update(res)
            if ok:
                return {i: trial[i] for i in comp}
        failed.add(key)
        return None

    doms = {i: set(range(len(c.bases))) for i, c in enumerate(poset.contexts)}
    if not propagate(doms, list(range(n))):
        return None
    for comp in components(doms, list(range(n))):
        res = solve(doms, comp)
        if res is None:
            return None
        doms.update(res)
    return {poset.contexts[i].name or i: Character(poset.contexts[i], min(doms[i])) for i in range(n)}


def is_section(poset: ContextPoset, section: dict) -> bool:
    chosen = [section[c.name or i].block for i, c in enumerate(poset.contexts)]
    for (i, j) in poset.inclusion:
        m = poset.maps.get((i, j)) or restriction_map(poset.contexts[i], poset.contexts[j])
        if m[chosen[j]] != chosen[i]:
            return False
    return True


# -- ray families ----------------------------------------------------------------

@dataclass
class RayPoset:
    poset: ContextPoset
    ray_context: dict        # ray id -> context index
    full_contexts: list      # (context index, ray ids) per full context
    pair_contexts: list      # (context index, (a, b)) per orthogonal pair outside full contexts


def _ray_proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def ray_poset(g) -> RayPoset:
    """Poset of contexts generated by the rays of a Greechie structure."""
    d = g.d
    projs = {r.id: _ray_proj(r.vector) for r in g.rays}
    eye = np.eye(d, dtype=complex)
    contexts = [trivial_context(d)]
    ray_ctx = {}
    for r in g.rays:
        p = projs[r.id]
        ray_ctx[r.id] = len(contexts)
        contexts.append(Context.from_blocks([p, eye - p], f"ray {r.id}"))
    covered = set()
    full = []
    for c in g.contexts:
        full.append((len(contexts), c))
        contexts.append(Context.from_blocks([projs[i] for i in c], "context " + ",".join(map(str, c))))
        covered |= {frozenset(p) for p in itertools.combinations(c, 2)}
    pairs = []
    for e in sorted(g.edges, key=lambda e: tuple(sorted(e))):
        if e in covered:
            continue
        a, b = sorted(e)
        blocks = [projs[a], projs[b]]
        rest = eye - projs[a] - projs[b]
        if max_abs(rest) > 1e-9:
            blocks.append(rest)
        pairs.append((len(contexts), (a, b)))
        contexts.append(Context.from_blocks(blocks, f"pair {a},{b}"))
    cand = [(0, i) for i in range(1, len(contexts))]
    for idx, members in full + pairs:
        cand += [(ray_ctx[r], idx) for r in members]
    poset = ContextPoset.from_contexts(contexts, cand)
    return RayPoset(poset, ray_ctx, full, pairs)


def section_from_coloring(rp: RayPoset, values: dict) -> dict:
    ctxs = rp.poset.contexts
    pick = {0: 0}
    for rid, idx in rp.ray_context.items():
        pick[idx] = 0 if values[rid] == 1 else 1
    for idx, members in rp.full_contexts + rp.pair_contexts:
        ones = [k for k, r in enumerate(members) if values[r] == 1]
        pick[idx] = ones[0] if ones else len(members)
    return {ctxs[i].name: Character(ctxs[i], pick[i]) for i in range(len(ctxs))}


def coloring_from_section(rp: RayPoset, section: dict) -> dict:
    ctxs = rp.poset.contexts
    return {rid: 1 if section[ctxs[idx].name].block == 0 else 0 for rid, idx in rp.ray_context.items()}


def valuation_section_roundtrip(coloring, g, rp: RayPoset | None = None) -> CheckReport:
    """Coloring -> section -> coloring, plus agreement of the two existence searches."""
    from .kslab import color_search, is_valid_coloring

    rp = rp or ray_poset(g)
    rep = CheckReport("valuation and section")
    if coloring is not None:
        rep.add("coloring valid", is_valid_coloring(coloring, g))
        sec = section_from_coloring(rp, coloring)
        rep.add("induced section consistent", is_section(rp.poset, sec))
        back = coloring_from_section(rp, sec)
        rep.add("round trip recovers the coloring", back == {k: coloring[k] for k in back})
    found = global_section_search(rp.poset)
    col, _ = color_search(g)
    rep.add("section exists iff coloring exists", (found is None) == (col is None),
            {"section": found is not None, "coloring": col is not None})
    if found is not None:
        rep.add("found section consistent", is_section(rp.poset, found))
        rep.add("found section yields a valid coloring",
                is_valid_coloring(coloring_from_section(rp, found), g))
    return rep


def random_context(d: int, rng: np.random.Generator, n_generators: int = 2):
    """Commuting Hermitian generators sharing a random eigenbasis, with repeated eigenvalues."""
    from .numkernel import random_unitary

    u = random_unitary(d, rng)
    gens = []
    for _ in range(n_generators):
        vals = rng.integers(-2, 3, size=d).astype(float)
        gens.append(u @ np.diag(vals) @ u.conj().T)
    return gens


def dim2_grid_structure(n: int):
    """Rays at angles k*pi/(2n), k = 0..2n-1, in the real plane (a Greechie structure with d = 2)."""
    import mpmath

    from .kslab import Ray, derive_structure

    rays = []
    for k in range(2 * n):
        t = mpmath.pi * k / (2 * n)
        rays.append(Ray(k + 1, (mpmath.cos(t), mpmath.sin(t)), ("grid",)))
    return derive_structure(rays, d=2)


def dim2_coloring(g_values) -> dict:
    """Ray values on the dim-2 grid from the two-valued measure built out of g."""
    from .kslab import dim2_measure

    mu = dim2_measure(g_values)
    return {k + 1: mu[k] for k in range(2 * len(g_values))}
