"""Kochen-Specker machinery: ray files, orthogonality structure, two-valued colorings.

Rays are read from text files whose coordinates are nested-radical expressions,
so a mistyped coordinate shows up as a non-unit ray or a near-miss inner product
instead of silently changing the graph.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import mpmath
import networkx as nx
import numpy as np

from . import qlattice
from .radicals import DomainError, RadicalExpr, RadicalSyntaxError, parse_radical
from .report import CheckReport

ORTHO_TOL = 1e-9
SUSPICIOUS_BELOW = 1e-4
NORM_TOL = 1e-9


class InconsistentPins(ValueError):
    pass


class UnderdeterminedWarning(UserWarning):
    pass


@dataclass
class Ray:
    id: int
    coords: tuple  # mpmath values
    source: tuple[str, ...] = ()

    @property
    def vector(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords])

    @property
    def norm(self) -> float:
        with mpmath.workdps(40):
            return float(mpmath.sqrt(sum(c * c for c in self.coords)))

    @property
    def dim(self) -> int:
        return len(self.coords)


@dataclass
class RayFile:
    rays: list[Ray]
    problems: dict[int, str] = field(default_factory=dict)  # id -> reason


def parse_ray_line(line: str) -> Ray:
    head, sep, body = line.partition(":")
    if not sep:
        raise RadicalSyntaxError("missing ':' after ray id", line, len(line))
    rid = int(head.strip())
    parts = [p.strip() for p in body.split(";")]
    exprs: list[RadicalExpr] = [parse_radical(p) for p in parts]
    return Ray(rid, tuple(e.value() for e in exprs), tuple(parts))


def read_rays(text: str) -> RayFile:
    """Parse ray-file text. Lines that fail to parse or evaluate are recorded, not fatal."""
    rays, problems = [], {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rays.append(parse_ray_line(line))
        except (RadicalSyntaxError, DomainError, ValueError) as exc:
            head = line.partition(":")[0].strip()
            key = int(head) if head.isdigit() else -lineno
            problems[key] = f"line {lineno}: {exc}"
    return RayFile(rays, problems)


def load_rays(path) -> RayFile:
    return read_rays(Path(path).read_text(encoding="utf-8"))


def shipped_rays(name: str) -> RayFile:
    """Ray files bundled with the package: ks117.rays, ks117_source.rays, bug.rays."""
    text = resources.files("qfound").joinpath("data", name).read_text(encoding="utf-8")
    return read_rays(text)


def validate_rays(rf: RayFile, norm_tol: float = NORM_TOL) -> CheckReport:
    rep = CheckReport("ray validation")
    for key, why in sorted(rf.problems.items()):
        rep.add(f"ray {key} parses", False, why)
    dims = {r.dim for r in rf.rays}
    rep.add("single dimension", len(dims) <= 1, sorted(dims))
    for r in rf.rays:
        n = r.norm
        rep.add(f"ray {r.id} unit", abs(n - 1) <= norm_tol, n, 1.0, norm_tol)
    return rep


def bad_ray_ids(rf: RayFile, norm_tol: float = NORM_TOL) -> list[int]:
    bad = set(k for k in rf.problems)
    bad.update(r.id for r in rf.rays if abs(r.norm - 1) > norm_tol)
    return sorted(bad)


@dataclass
class GreechieStructure:
    rays: list[Ray]  # one representative per node, ascending id
    edges: set[frozenset]
    contexts: list[tuple[int, ...]]
    d: int
    aliases: dict[int, int] = field(default_factory=dict)  # dropped id -> kept id
    oversized: list[tuple[int, ...]] = field(default_factory=list)
    isolated: list[int] = field(default_factory=list)
    suspicious: list[tuple[int, int, float]] = field(default_factory=list)
    invalid: list[int] = field(default_factory=list)

    @property
    def ids(self) -> list[int]:
        return [r.id for r in self.rays]

    def neighbours(self) -> dict[int, set[int]]:
        nb = {i: set() for i in self.ids}
        for e in self.edges:
            a, b = tuple(e)
            nb[a].add(b)
            nb[b].add(a)
        return nb

    def ray(self, rid: int) -> Ray:
        rid = self.aliases.get(rid, rid)
        for r in self.rays:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def stats(self) -> dict:
        return {
            "rays": len(self.rays),
            "edges": len(self.edges),
            "contexts": len(self.contexts),
            "oversized": len(self.oversized),
            "isolated": len(self.isolated),
            "suspicious": len(self.suspicious),
        }


def derive_structure(rays, d: int = 3, ortho_tol: float = ORTHO_TOL,
                     norm_tol: float = NORM_TOL) -> GreechieStructure:
    rays = sorted(rays, key=lambda r: r.id)
    if any(r.dim != d for r in rays):
        raise ValueError(f"every ray must have dimension {d}")
    invalid = [r.id for r in rays if abs(r.norm - 1) > norm_tol]
    vecs = {r.id: r.vector / np.linalg.norm(r.vector) for r in rays}

    # +v and -v are one node; keep the smaller id
    kept: list[Ray] = []
    aliases: dict[int, int] = {}
    for r in rays:
        for k in kept:
            if abs(abs(vecs[r.id] @ vecs[k.id]) - 1) <= ortho_tol:
                aliases[r.id] = k.id
                break
        else:
            kept.append(r)

    edges, suspicious = set(), []
    for a, b in itertools.combinations(kept, 2):
        ip = abs(float(vecs[a.id] @ vecs[b.id]))
        if ip <= ortho_tol:
            edges.add(frozenset((a.id, b.id)))
        elif ip < SUSPICIOUS_BELOW:
            suspicious.append((a.id, b.id, ip))

    g = nx.Graph()
    g.add_nodes_from(r.id for r in kept)
    g.add_edges_from(tuple(e) for e in edges)
    contexts, oversized = [], []
    for clique in nx.find_cliques(g):
        c = tuple(sorted(clique))
        if len(c) == d:
            contexts.append(c)
        elif len(c) > d:
            oversized.append(c)
    contexts.sort()
    oversized.sort()
    isolated = sorted(n for n in g.nodes if g.degree(n) == 0)
    return GreechieStructure(kept, edges, contexts, d, aliases, oversized, isolated,
                             suspicious, invalid)


def brute_force_contexts(g: GreechieStructure) -> list[tuple[int, ...]]:
    """Independent O(n^d) enumeration of d-cliques that lie in no larger clique."""
    nb = g.neighbours()
    ids = g.ids
    out = []
    for combo in itertools.combinations(ids, g.d):
        if all(b in nb[a] for a, b in itertools.combinations(combo, 2)):
            common = set.intersection(*(nb[a] for a in combo))
            if not common:
                out.append(combo)
    return sorted(out)


# -- colorings --------------------------------------------------------------

class _Conflict(Exception):
    pass


def _propagate(values: dict, nb, ctx_of, contexts, queue):
    while queue:
        x = queue.pop()
        if values[x] == 1:
            for y in nb[x]:
                if values[y] == 1:
                    raise _Conflict
                if values[y] is None:
                    values[y] = 0
                    queue.append(y)
        for ci in ctx_of[x]:
            ctx = contexts[ci]
            vals = [values[y] for y in ctx]
            ones = vals.count(1)
            if ones > 1:
                raise _Conflict
            if ones == 0:
                free = [y for y, v in zip(ctx, vals) if v is None]
                if not free:
                    raise _Conflict
                if len(free) == 1:
                    values[free[0]] = 1
                    queue.append(free[0])


def _setup(g, pins):
    nb = g.neighbours()
    ctx_of = {i: [] for i in g.ids}
    for ci, c in enumerate(g.contexts):
        for x in c:
            ctx_of[x].append(ci)
    values = {i: None for i in g.ids}
    pins = {g.aliases.get(k, k): v for k, v in (pins or {}).items()}
    for k, v in pins.items():
        if k not in values or v not in (0, 1):
            raise InconsistentPins(f"bad pin {k}={v}")
        values[k] = v
    try:
        _propagate(values, nb, ctx_of, g.contexts, list(pins))
    except _Conflict:
        raise InconsistentPins("pins violate the context rule") from None
    return nb, ctx_of, values


def color_search(g: GreechieStructure, pins: dict | None = None, order=None):
    """Lexicographically least two-valued coloring (0 before 1), or None.

    Every context gets exactly one 1 and orthogonal rays are never both 1.
    Decisions follow ascending id (or ``order``). The unassigned rays are split
    into independent components after each propagation step; each component is
    solved on its own and its verdict cached, so a failing block is refuted once
    rather than once per coloring of an unrelated block. Returns (coloring or
    None, number of decision nodes).
    """
    nb, ctx_of, values = _setup(g, pins)
    rank = {x: i for i, x in enumerate(order if order is not None else sorted(g.ids))}
    if set(rank) != set(g.ids):
        raise ValueError("order must be a permutation of the ray ids")
    members = g.contexts
    cache: dict[frozenset, dict | None] = {}
    explored = 0

    def components(vals, within):
        free = [x for x in within if vals[x] is None]
        seen, comps = set(), []
        for s in sorted(free, key=rank.get):
            if s in seen:
                continue
            comp, stack = [], [s]
            seen.add(s)
            while stack:
                x = stack.pop()
                comp.append(x)
                linked = [y for y in nb[x]]
                for ci in ctx_of[x]:
                    linked.extend(members[ci])
                for y in linked:
                    if vals[y] is None and y not in seen:
                        seen.add(y)
                        stack.append(y)
            comps.append(frozenset(comp))
        return comps

    def solve(vals, comp):
        # the sub-problem on a component depends only on its ray set
        nonlocal explored
        if comp in cache:
            return cache[comp]
        x = min(comp, key=rank.get)
        explored += 1
        result = None
        for v in (0, 1):
            trial = dict(vals)
            trial[x] = v
            try:
                _propagate(trial, nb, ctx_of, members, [x])
            except _Conflict:
                continue
            assigned = {y: trial[y] for y in comp if trial[y] is not None}
            ok = True
            for c in components(trial, comp):
                part = solve(trial, c)
                if part is None:
                    ok = False
                    break
                assigned.update(part)
            if ok:
                result = assigned
                break
        cache[comp] = result
        return result

    coloring = dict(values)
    for comp in components(values, values):
        part = solve(values, comp)
        if part is None:
            return None, explored
        coloring.update(part)
    assert is_valid_coloring(coloring, g)
    return coloring, explored


def enumerate_colorings(g: GreechieStructure, pins: dict | None = None,
                        limit: int | None = None) -> list[dict]:
    """Every coloring by plain depth-first search; meant for small structures."""
    nb, ctx_of, values = _setup(g, pins)
    order = sorted(g.ids)
    out: list[dict] = []

    def rec(vals):
        if limit is not None and len(out) >= limit:
            return
        free = next((x for x in order if vals[x] is None), None)
        if free is None:
            out.append(dict(vals))
            return
        for v in (0, 1):
            trial = dict(vals)
            trial[free] = v
            try:
                _propagate(trial, nb, ctx_of, g.contexts, [free])
            except _Conflict:
                continue
            rec(trial)

    rec(values)
    return out


def is_valid_coloring(values: dict, g: GreechieStructure) -> bool:
    for c in g.contexts:
        if sum(values[x] for x in c) != 1:
            return False
    for e in g.edges:
        a, b = tuple(e)
        if values[a] == 1 and values[b] == 1:
            return False
    return True


def shuffled_verdict(g: GreechieStructure, seed: int):
    """Re-run the search with the decision order shuffled; returns (colorable, explored)."""
    rng = np.random.default_rng(seed)
    order = list(rng.permutation(g.ids))
    res, explored = color_search(g, order=[int(x) for x in order])
    return res is not None, explored


def bug_forcing(g: GreechieStructure, start: int, end: int) -> CheckReport:
    """Pin ``start`` to 1 and enumerate every completion; ``end`` must always be 0."""
    rep = CheckReport("bug forcing")
    cols = enumerate_colorings(g, {start: 1})
    rep.add("completions exist", bool(cols), len(cols))
    ends = sorted({c[g.aliases.get(end, end)] for c in cols})
    rep.add(f"ray {end} forced to 0", ends == [0], ends, [0])
    return rep


def ks_summary(g: GreechieStructure) -> CheckReport:
    rep = CheckReport("Kochen-Specker")
    res, explored = color_search(g)
    rep.add("no two-valued coloring", res is None, explored)
    rep.notes.append(f"decision nodes explored: {explored}")
    return rep


# -- prime filters ----------------------------------------------------------

def coloring_to_prime_filter(values: dict, g: GreechieStructure) -> CheckReport:
    """Check that the 1-valued elements form a prime filter on a small lattice fragment.

    The fragment holds 0, 1, every ray projector and every plane spanned by two
    rays of a context. A plane is in the filter when the third ray of its
    context is valued 0. Meets and joins are only taken for commuting pairs,
    i.e. inside a Boolean block; across blocks a two-valued assignment cannot
    respect them.
    """
    d = g.d
    elems: list[tuple[str, np.ndarray, bool]] = [
        ("0", qlattice.zero(d), False),
        ("1", qlattice.identity(d), True),
    ]
    for r in g.rays:
        elems.append((f"ray {r.id}", qlattice.ray_projector(r.vector), values[r.id] == 1))
    if d == 3:
        for c in g.contexts:
            for a, b in itertools.combinations(c, 2):
                (third,) = set(c) - {a, b}
                p = qlattice.join(qlattice.ray_projector(g.ray(a).vector),
                                  qlattice.ray_projector(g.ray(b).vector))
                elems.append((f"plane {a},{b}", p, values[third] == 0))

    def lookup(p):
        for name, q, inf in elems:
            if qlattice.equal(p, q, 1e-7):
                return name, inf
        return None

    upward = meets = prime = True
    for (na, a, ia), (nb_, b, ib) in itertools.combinations(elems, 2):
        for (x, ix), (y, iy) in (((a, ia), (b, ib)), ((b, ib), (a, ia))):
            if ix and not iy and qlattice.leq(x, y):
                upward = False
        if np.max(np.abs(a @ b - b @ a)) > 1e-9:
            continue
        if ia and ib:
            m = lookup(qlattice.meet(a, b))
            if m is not None and not m[1]:
                meets = False
        j = lookup(qlattice.join(a, b))
        if j is not None and j[1] and not (ia or ib):
            prime = False
    rep = CheckReport("prime filter")
    rep.add("upward closed", upward)
    rep.add("closed under meets", meets)
    rep.add("prime on joins", prime)
    rep.add("excludes 0", True)
    return rep


# -- Gleason frame functions --------------------------------------------------

def _hermitian_basis(d: int) -> list[np.ndarray]:
    out = []
    for i in range(d):
        m = np.zeros((d, d), complex)
        m[i, i] = 1
        out.append(m)
    for i, j in itertools.combinations(range(d), 2):
        m = np.zeros((d, d), complex)
        m[i, j] = m[j, i] = 1
        out.append(m)
        m = np.zeros((d, d), complex)
        m[i, j], m[j, i] = -1j, 1j
        out.append(m)
    return out


def gleason_fit(samples, d: int):
    """Least-squares Hermitian operator T with f(x) = <x, T x> over sampled vectors.

    ``samples`` is a list of (basis, weights) with the basis vectors as columns.
    Returns (T, residual) where residual is the max absolute misfit.
    """
    herm = _hermitian_basis(d)
    rows, rhs = [], []
    for basis, weights in samples:
        basis = np.asarray(basis, dtype=complex)
        if basis.shape[0] != d:
            raise ValueError(f"basis vectors must have length {d}")
        for k in range(basis.shape[1]):
            x = basis[:, k]
            rows.append([np.real(np.vdot(x, h @ x)) for h in herm])
            rhs.append(float(weights[k]))
    a = np.array(rows)
    b = np.array(rhs)
    coef, _, rnk, _ = np.linalg.lstsq(a, b, rcond=None)
    if rnk < d * d:
        warnings.warn(f"samples fix only {rnk} of {d * d} real parameters",
                      UnderdeterminedWarning, stacklevel=2)
    t = sum(c * h for c, h in zip(coef, herm))
    residual = float(np.max(np.abs(a @ coef - b))) if b.size else 0.0
    return t, residual


def frame_samples(t: np.ndarray, n_bases: int, rng: np.random.Generator):
    """Random orthonormal bases with weights <x, T x>, for round-trip tests."""
    from .numkernel import random_unitary

    d = t.shape[0]
    out = []
    for _ in range(n_bases):
        u = random_unitary(d, rng)
        w = [float(np.real(np.vdot(u[:, k], t @ u[:, k]))) for k in range(d)]
        out.append((u, w))
    return out


# -- dimension two ----------------------------------------------------------

def dim2_measure(g_values) -> list[int]:
    """Values on a grid of 4n angles over [0, 2pi) from n values of g on [0, pi/2)."""
    g_values = [int(v) for v in g_values]
    if any(v not in (0, 1) for v in g_values):
        raise ValueError("g must take values in {0, 1}")
    n = len(g_values)
    mu = []
    for k in range(4 * n):
        quarter, j = divmod(k, n)
        mu.append(g_values[j] if quarter % 2 == 0 else 1 - g_values[j])
    return mu


def dim2_two_valued_measure(g_values) -> CheckReport:
    n = len(g_values)
    mu = dim2_measure(g_values)
    rep = CheckReport("dimension two measure")
    additive = all(mu[k] + mu[(k + n) % (4 * n)] == 1 for k in range(4 * n))
    rep.add("additive on orthogonal pairs", additive)
    sign = all(mu[k] == mu[(k + 2 * n) % (4 * n)] for k in range(4 * n))
    rep.add("same value for opposite directions", sign)
    rep.add("two-valued", set(mu) <= {0, 1}, sorted(set(mu)))
    rep.notes.append(f"grid step {math.pi / (2 * n):.6g} rad")
    return rep
