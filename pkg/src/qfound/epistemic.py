"""Forward-chaining multi-agent knowledge logic with trust between agents.

Formulas are immutable trees. The engine is syntactic: it saturates a
knowledge base under modus ponens inside knowledge prefixes, implication
chaining, conjunction elimination, trust reduction, introspection and a
restricted generalization, and flags an agent who knows both A and not-A.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np


# -- formulas ------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Implies:
    left: object
    right: object


@dataclass(frozen=True)
class Knows:
    agent: str
    body: object
    context: str | None = None

    @property
    def time(self) -> int | None:
        _, _, t = self.agent.partition("@")
        return int(t) if t.isdigit() else None


def show(f) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return f"~{_wrap(f.arg)}"
    if isinstance(f, And):
        return f"{_wrap(f.left)} & {_wrap(f.right)}"
    if isinstance(f, Implies):
        return f"{_wrap(f.left)} -> {_wrap(f.right)}"
    ctx = f"|{f.context}" if f.context else ""
    return f"K[{f.agent}{ctx}]({show(f.body)})"


def _wrap(f) -> str:
    return f"({show(f)})" if isinstance(f, (And, Implies)) else show(f)


def depth(f) -> int:
    if isinstance(f, Atom):
        return 0
    if isinstance(f, Not):
        return depth(f.arg)
    if isinstance(f, (And, Implies)):
        return max(depth(f.left), depth(f.right))
    return 1 + depth(f.body)


def splits(f):
    """Every way to read f as a knowledge prefix around a body, outermost first."""
    prefix: list[tuple[str, str | None]] = []
    yield (), f
    while isinstance(f, Knows):
        prefix.append((f.agent, f.context))
        f = f.body
        yield tuple(prefix), f


def wrap(prefix, body):
    for agent, ctx in reversed(prefix):
        body = Knows(agent, body, ctx)
    return body


_FTOKEN = re.compile(r"\s*(->|K\[[^\]]+\]|[~&()]|[A-Za-z_][A-Za-z0-9_@.]*)")


class FormulaSyntaxError(ValueError):
    pass


def parse_formula(text: str, contexts: dict | None = None):
    """``K[agent](f)``, ``K[agent|ctx](f)``, ``~f``, ``f & g``, ``f -> g``, atoms.

    ``->`` is right associative and binds loosest. When ``contexts`` maps agents
    to context labels, every K without an explicit label gets its agent's one.
    """
    toks, pos = [], 0
    while pos < len(text):
        if not text[pos:].strip():
            break
        m = _FTOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"bad character at {pos}: {text!r}")
        toks.append(m.group(1))
        pos = m.end()
    toks.append(None)
    i = 0

    def peek():
        return toks[i]

    def take(want=None):
        nonlocal i
        t = toks[i]
        if want is not None and t != want:
            raise FormulaSyntaxError(f"expected {want!r}, found {t!r} in {text!r}")
        i += 1
        return t

    def implication():
        left = conjunction()
        if peek() == "->":
            take()
            return Implies(left, implication())
        return left

    def conjunction():
        node = unary()
        while peek() == "&":
            take()
            node = And(node, unary())
        return node

    def unary():
        t = peek()
        if t is None:
            raise FormulaSyntaxError(f"unexpected end of {text!r}")
        if t == "~":
            take()
            return Not(unary())
        if t == "(":
            take()
            node = implication()
            take(")")
            return node
        if t.startswith("K["):
            take()
            agent, _, ctx = t[2:-1].partition("|")
            agent = agent.strip()
            ctx = ctx.strip() or (contexts or {}).get(agent)
            take("(")
            body = implication()
            take(")")
            return Knows(agent, body, ctx)
        if t in ("->", "&", ")"):
            raise FormulaSyntaxError(f"unexpected {t!r} in {text!r}")
        take()
        return Atom(t)

    node = implication()
    if peek() is not None:
        raise FormulaSyntaxError(f"trailing input {peek()!r} in {text!r}")
    return node


# -- knowledge bases -----------------------------------------------------------

@dataclass
class TrustRelation:
    edges: set[tuple[str, str]] = field(default_factory=set)
    mode: str = "plain"  # or "contextual"

    def __post_init__(self):
        if self.mode not in ("plain", "contextual"):
            raise ValueError(f"unknown trust mode {self.mode!r}")

    def verdict(self, outer: tuple, inner: tuple) -> str:
        """'allowed', 'refused' (declared edge, contexts differ) or 'absent'."""
        if (outer[0], inner[0]) not in self.edges:
            return "absent"
        if self.mode == "plain":
            return "allowed"
        if outer[1] is None or inner[1] is None or outer[1] != inner[1]:
            return "refused"
        return "allowed"


@dataclass(frozen=True)
class RuleSet:
    distribution: bool = True
    trust: bool = True
    and_elim: bool = True
    introspection: bool = True
    generalization: bool = True


@dataclass
class StockEntry:
    """A tautology plus the agents that successively learn it, innermost first."""
    name: str
    formula: object
    lifts: list[str] = field(default_factory=list)


@dataclass
class KnowledgeBase:
    facts: list[tuple[str, object]] = field(default_factory=list)  # (tag, formula)
    stock: list[StockEntry] = field(default_factory=list)
    trust: TrustRelation = field(default_factory=TrustRelation)
    rules: RuleSet = field(default_factory=RuleSet)
    contexts: dict[str, str | None] = field(default_factory=dict)

    def add(self, formula, tag: str = "fact") -> None:
        self.facts.append((tag, formula))

    def all_formulas(self) -> list:
        out = [f for _, f in self.facts]
        for e in self.stock:
            f = e.formula
            out.append(f)
            for a in e.lifts:
                f = Knows(a, f, self.contexts.get(a))
                out.append(f)
        return out


@dataclass(frozen=True)
class Step:
    index: int
    rule: str
    premises: tuple[int, ...]
    formula: object
    note: str = ""

    def __str__(self):
        prem = ",".join(str(p) for p in self.premises)
        extra = f" [{self.note}]" if self.note else ""
        return f"{self.index:3d}. {show(self.formula)}   ({self.rule}{' ' + prem if prem else ''}){extra}"


@dataclass
class ProofTrace:
    steps: list[Step] = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def formulas(self) -> list:
        return [s.formula for s in self.steps]

    def render(self) -> str:
        return "\n".join(str(s) for s in self.steps)


@dataclass(frozen=True)
class Refusal:
    fact: int
    outer: tuple
    inner: tuple

    @property
    def edge(self) -> tuple[str, str]:
        return (self.outer[0], self.inner[0])


@dataclass
class Closure:
    formulas: list
    trace: ProofTrace
    contradiction: Step | None
    complete: bool
    refusals: list[Refusal]
    # every justification met during saturation: index -> [(rule, premises, note)]
    justifications: dict = field(default_factory=dict)
    clashes: list[int] = field(default_factory=list)

    def __contains__(self, f) -> bool:
        return f in set(self.formulas)

    def costs(self) -> dict[int, int]:
        """Size of the cheapest derivation tree of each fact (shared premises counted again)."""
        inf = float("inf")
        cost = {s.index: inf for s in self.trace.steps}
        changed = True
        while changed:
            changed = False
            for s in self.trace.steps:
                for _, prem, _ in self.justifications.get(s.index, ()):
                    c = 1 + sum(cost[p] for p in prem)
                    if c < cost[s.index]:
                        cost[s.index] = c
                        changed = True
        return cost

    def proof(self, goal: int | None = None) -> ProofTrace:
        """Cheapest derivation of ``goal`` (default: the contradiction), renumbered from 1."""
        if goal is None:
            if self.contradiction is None:
                return ProofTrace()
        cost = self.costs()
        if goal is None:
            goal = min(self.clashes, key=lambda k: (cost[k], k))
        best = {}
        for k, js in self.justifications.items():
            finite = [j for j in js if all(cost[p] < cost[k] for p in j[1])]
            if finite:
                best[k] = min(finite, key=lambda j: (1 + sum(cost[p] for p in j[1]), j[1]))
        need, stack = set(), [goal]
        while stack:
            k = stack.pop()
            if k not in need:
                need.add(k)
                stack.extend(best[k][1])
        # premises have strictly smaller cost, so cost order is topological
        order = sorted(need, key=lambda k: (cost[k], k))
        renum = {old: new for new, old in enumerate(order, 1)}
        formula_of = {s.index: s.formula for s in self.trace.steps}
        return ProofTrace([
            Step(renum[k], best[k][0], tuple(renum[p] for p in best[k][1]), formula_of[k], best[k][2])
            for k in order
        ])


class DepthExceeded(RuntimeWarning):
    pass


def derive_closure(kb: KnowledgeBase, max_depth: int = 40) -> Closure:
    """Saturate kb round by round, at most ``max_depth`` rounds.

    Within a round the rules run in a fixed order (distribution, trust,
    introspection, generalization) over facts in insertion order, so the trace
    is reproducible. Generalization only lifts the declared stock.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    steps: list[Step] = []
    where: dict = {}
    justs: dict[int, list] = {}
    refusals: list[Refusal] = []
    depth_cap = max((depth(f) for f in kb.all_formulas()), default=1)

    def add(f, rule, premises=(), note=""):
        j = (rule, tuple(premises), note)
        if f in where:
            k = where[f]
            if k not in j[1] and j not in justs[k]:
                justs[k].append(j)
            return False
        idx = len(steps) + 1
        steps.append(Step(idx, rule, tuple(premises), f, note))
        where[f] = idx
        justs[idx] = [j]
        return True

    for tag, f in kb.facts:
        add(f, "seed", note=tag)
    lift_level = []
    for e in kb.stock:
        add(e.formula, "tautology", note=e.name)
        lift_level.append(0)

    complete = False
    rules = kb.rules
    for _ in range(max_depth):
        before = len(steps)
        snapshot = list(steps)
        by_prefix_ante: dict = {}
        for s in snapshot:
            for p, body in splits(s.formula):
                if isinstance(body, Implies):
                    by_prefix_ante.setdefault((p, body.left), []).append((s.index, body.right))

        if rules.distribution:
            for s in snapshot:
                for p, body in splits(s.formula):
                    if not isinstance(body, Implies):
                        continue
                    ante = wrap(p, body.left)
                    if ante in where:
                        add(wrap(p, body.right), "distribution", (s.index, where[ante]))
                    for j, cons in by_prefix_ante.get((p, body.right), []):
                        add(wrap(p, Implies(body.left, cons)), "distribution", (s.index, j), "chain")

        if rules.and_elim:
            for s in snapshot:
                for p, body in splits(s.formula):
                    if isinstance(body, And):
                        add(wrap(p, body.left), "and-elim", (s.index,))
                        add(wrap(p, body.right), "and-elim", (s.index,))

        if rules.trust:
            for s in snapshot:
                chain = [p for p, _ in splits(s.formula)][-1]
                body = s.formula
                for _ in chain:
                    body = body.body
                # innermost pair first
                for k in range(len(chain) - 2, -1, -1):
                    outer, inner = chain[k], chain[k + 1]
                    verdict = kb.trust.verdict(outer, inner)
                    if verdict == "allowed":
                        reduced = wrap(chain[:k + 1] + chain[k + 2:], body)
                        add(reduced, "trust", (s.index,), f"{outer[0]} trusts {inner[0]}")
                    elif verdict == "refused":
                        refusals.append(Refusal(s.index, outer, inner))

        if rules.introspection:
            for s in snapshot:
                f = s.formula
                if isinstance(f, Knows) and depth(f) < depth_cap:
                    add(Knows(f.agent, f, f.context), "introspection+", (s.index,))
                if isinstance(f, Not) and isinstance(f.arg, Knows) and depth(f) < depth_cap:
                    k = f.arg
                    add(Knows(k.agent, f, k.context), "introspection-", (s.index,))

        if rules.generalization:
            for n, e in enumerate(kb.stock):
                level = lift_level[n]
                if level >= len(e.lifts):
                    continue
                f = e.formula
                for a in e.lifts[:level]:
                    f = Knows(a, f, kb.contexts.get(a))
                g = Knows(e.lifts[level], f, kb.contexts.get(e.lifts[level]))
                if f in where:
                    add(g, "generalization", (where[f],), e.name)
                    lift_level[n] += 1

        if len(steps) == before:
            complete = True
            break

    clashes = _find_contradictions(steps, where, add)
    contradiction = steps[clashes[0] - 1] if clashes else None

    # seen-twice refusals carry no extra information
    uniq, seen = [], set()
    for r in refusals:
        if (r.fact, r.outer, r.inner) not in seen:
            seen.add((r.fact, r.outer, r.inner))
            uniq.append(r)
    return Closure([s.formula for s in steps], ProofTrace(steps), contradiction, complete, uniq,
                   justs, clashes)


def _find_contradictions(steps, where, add) -> list[int]:
    found = []
    for s in list(steps):
        f = s.formula
        if isinstance(f, Knows):
            neg = Knows(f.agent, Not(f.body), f.context)
            if neg in where:
                clash = And(f, neg)
                add(clash, "contradiction", (s.index, where[neg]), f"{f.agent} knows A and not A")
                found.append(where[clash])
    return found


# -- independent step checker --------------------------------------------------

def check_step(step: Step, premise_formulas: list, kb: KnowledgeBase) -> bool:
    """Re-derive one step from its premises by direct pattern matching."""
    f, rule, prem = step.formula, step.rule, premise_formulas
    if rule == "seed":
        return any(f == g for _, g in kb.facts)
    if rule == "tautology":
        return any(f == e.formula for e in kb.stock)
    if rule == "generalization":
        if not (isinstance(f, Knows) and f.body == prem[0]):
            return False
        return any(f in _lift_chain(e, kb) for e in kb.stock)
    if rule == "and-elim":
        return any(isinstance(b, And) and f in (wrap(p, b.left), wrap(p, b.right))
                   for p, b in _all_splits(prem[0]))
    if rule == "distribution":
        a, b = prem
        for p, body in _all_splits(a):
            if not isinstance(body, Implies):
                continue
            if step.note == "chain":
                for q, other in _all_splits(b):
                    if q == p and isinstance(other, Implies) and other.left == body.right \
                            and f == wrap(p, Implies(body.left, other.right)):
                        return True
            elif b == wrap(p, body.left) and f == wrap(p, body.right):
                return True
        return False
    if rule == "trust":
        chain, body = _chain(prem[0])
        for k in range(len(chain) - 1):
            if kb.trust.verdict(chain[k], chain[k + 1]) == "allowed" \
                    and f == wrap(chain[:k + 1] + chain[k + 2:], body):
                return True
        return False
    if rule == "introspection+":
        return isinstance(prem[0], Knows) and f == Knows(prem[0].agent, prem[0], prem[0].context)
    if rule == "introspection-":
        g = prem[0]
        return isinstance(g, Not) and isinstance(g.arg, Knows) and f == Knows(g.arg.agent, g, g.arg.context)
    if rule == "contradiction":
        a, b = prem
        return (isinstance(a, Knows) and b == Knows(a.agent, Not(a.body), a.context)
                and f == And(a, b))
    return False


def _all_splits(f):
    out, prefix = [((), f)], []
    while isinstance(f, Knows):
        prefix.append((f.agent, f.context))
        f = f.body
        out.append((tuple(prefix), f))
    return out


def _chain(f):
    chain = []
    while isinstance(f, Knows):
        chain.append((f.agent, f.context))
        f = f.body
    return tuple(chain), f


def _lift_chain(e: StockEntry, kb: KnowledgeBase) -> list:
    out, f = [], e.formula
    for a in e.lifts:
        f = Knows(a, f, kb.contexts.get(a))
        out.append(f)
    return out


def validate_trace(trace: ProofTrace, kb: KnowledgeBase) -> list[int]:
    """Indices of steps that fail the independent check (empty when sound)."""
    by_index = {s.index: s.formula for s in trace.steps}
    bad = []
    for s in trace.steps:
        if any(p >= s.index or p not in by_index for p in s.premises):
            bad.append(s.index)
            continue
        if not check_step(s, [by_index[p] for p in s.premises], kb):
            bad.append(s.index)
    return bad


# -- scenario files ------------------------------------------------------------

@dataclass
class Scenario:
    agents: dict[str, str | None] = field(default_factory=dict)
    trust: list[tuple[str, str]] = field(default_factory=list)
    tautologies: dict[str, str] = field(default_factory=dict)
    lifts: dict[str, list[str]] = field(default_factory=dict)
    announcements: dict[str, str] = field(default_factory=dict)
    chain: list[tuple[str, str]] = field(default_factory=list)


def parse_scenario(text: str) -> Scenario:
    sc = Scenario()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        if word == "agent":
            parts = rest.split()
            ctx = parts[2] if len(parts) >= 3 and parts[1] == "context" else None
            sc.agents[parts[0]] = ctx
        elif word in ("trust", "chain"):
            a, _, b = rest.partition("->")
            edge = (a.strip(), b.strip())
            sc.trust.append(edge)
            if word == "chain":
                sc.chain.append(edge)
        elif word in ("tautology", "announce", "lift"):
            name, _, body = rest.partition(":")
            name, body = name.strip(), body.strip()
            if word == "tautology":
                sc.tautologies[name] = body
            elif word == "announce":
                sc.announcements[name] = body
            else:
                sc.lifts[name] = body.split()
        else:
            raise ValueError(f"line {lineno}: unknown directive {word!r}")
    for a, b in sc.trust:
        for x in (a, b):
            if x not in sc.agents:
                raise ValueError(f"trust edge mentions undeclared agent {x!r}")
    return sc


def build_kb(sc: Scenario, mode: str = "plain", drop: set[str] | None = None) -> KnowledgeBase:
    """Knowledge base from a scenario. ``drop`` removes trust edges ("a->b"),
    tautologies or announcements by name."""
    drop = drop or set()
    contexts = sc.agents if mode == "contextual" else {}
    edges = {e for e in sc.trust if f"{e[0]}->{e[1]}" not in drop}
    kb = KnowledgeBase(trust=TrustRelation(edges, mode), contexts=dict(contexts))
    for name, text in sc.tautologies.items():
        if name in drop:
            continue
        kb.stock.append(StockEntry(name, parse_formula(text, contexts), sc.lifts.get(name, [])))
    for name, text in sc.announcements.items():
        if name not in drop:
            kb.add(parse_formula(text, contexts), name)
    return kb


def shipped_scenario(name: str = "frauchiger_renner.kb") -> Scenario:
    return parse_scenario(resources.files("qfound").joinpath("data", name).read_text("utf-8"))


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


# -- the two-lab protocol ------------------------------------------------------

def fr_build_kb(mode: str = "plain", drop: set[str] | None = None) -> KnowledgeBase:
    return build_kb(shipped_scenario(), mode, drop)


@dataclass
class ProtocolRun:
    verdict: str  # "contradiction" or "consistent"
    trace: ProofTrace
    blocked_step: Step | None
    blocked_edge: tuple[str, str] | None
    closure: Closure


def fr_run(mode: str = "plain", drop: set[str] | None = None, max_depth: int = 40) -> ProtocolRun:
    """Run the two-lab derivation.

    In contextual mode the blocked step is the first trust reduction, on the way
    to the pre-experiment implication in the unrestricted proof, whose two
    agents measure in different contexts.
    """
    kb = fr_build_kb(mode, drop)
    cl = derive_closure(kb, max_depth)
    verdict = "contradiction" if cl.contradiction is not None else "consistent"
    if mode != "contextual":
        return ProtocolRun(verdict, cl.proof(), None, None, cl)

    plain_cl = derive_closure(fr_build_kb("plain", drop), max_depth)
    plain = plain_cl.proof() if plain_cl.contradiction else ProofTrace()
    sc = shipped_scenario()
    anchor = milestones(plain).get("pre_experiment_implication")
    needed = _ancestors(plain, anchor) if anchor else {s.index for s in plain.steps}
    blocked, edge = None, None
    for st in plain.steps:
        if st.rule != "trust" or st.index not in needed:
            continue
        a, _, b = st.note.partition(" trusts ")
        if sc.agents.get(a) != sc.agents.get(b):
            blocked, edge = st, (a, b)
            break
    return ProtocolRun(verdict, cl.proof() if cl.contradiction else plain, blocked, edge, cl)


def _ancestors(trace: ProofTrace, goal: int) -> set[int]:
    by_index = {s.index: s for s in trace.steps}
    seen, stack = set(), [goal]
    while stack:
        k = stack.pop()
        if k not in seen:
            seen.add(k)
            stack.extend(by_index[k].premises)
    return seen


def reaches_milestone(closure: Closure, name: str) -> bool:
    trace = ProofTrace([Step(s.index, s.rule, s.premises, s.formula, s.note) for s in closure.trace.steps])
    return milestones(trace).get(name) is not None


def ablation_targets(sc: Scenario | None = None) -> list[str]:
    """Names that can be dropped one at a time: chain trust edges, tautologies, announcements."""
    sc = sc or shipped_scenario()
    return ([f"{a}->{b}" for a, b in sc.chain] + list(sc.tautologies) + list(sc.announcements))


def _strip_context(f):
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        return Not(_strip_context(f.arg))
    if isinstance(f, And):
        return And(_strip_context(f.left), _strip_context(f.right))
    if isinstance(f, Implies):
        return Implies(_strip_context(f.left), _strip_context(f.right))
    return Knows(f.agent, _strip_context(f.body))


MILESTONES = {
    # friend's own implication, as seen through the wigners
    "friend_implication": ("coin_wigner@2", "spin_friend@2",
                           "K[spin_friend@2](K[spin_friend@2](spin_b) -> K[spin_wigner@3](~spin_lab_ok))"),
    # reached before any outcome is known
    "pre_experiment_implication": ("spin_wigner@3", "coin_wigner@2",
                                   "K[coin_wigner@2](K[coin_wigner@2](coin_lab_ok) -> K[spin_wigner@3](~spin_lab_ok))"),
}


def milestones(trace: ProofTrace) -> dict[str, int | None]:
    """Step index where each structural milestone first appears (None if absent)."""
    plain = [(_strip_context(s.formula), s.index) for s in trace.steps]
    out: dict[str, int | None] = {}
    for name, (outer, _, text) in MILESTONES.items():
        target = parse_formula(text)
        out[name] = next((i for f, i in plain
                          if isinstance(f, Knows) and f.agent == outer and f.body == target), None)
        if out[name] is None:
            out[name] = next((i for f, i in plain if _ends_with(f, outer, target)), None)
    knows_ok = parse_formula("K[spin_wigner@3](spin_lab_ok)")
    knows_not = parse_formula("K[spin_wigner@3](~spin_lab_ok)")
    hit_ok = {_prefix_before(f, knows_ok): i for f, i in plain if _prefix_before(f, knows_ok) is not None}
    both = None
    for f, i in plain:
        p = _prefix_before(f, knows_not)
        if p is not None and p in hit_ok and p and p[-1] == "spin_wigner@3":
            both = max(i, hit_ok[p])
            break
    out["wigner_both_outcomes"] = both
    return out


def _ends_with(f, outer_agent, target) -> bool:
    while isinstance(f, Knows):
        if f.agent == outer_agent and f.body == target:
            return True
        f = f.body
    return False


def _prefix_before(f, target):
    prefix = []
    while True:
        if f == target:
            return tuple(prefix)
        if not isinstance(f, Knows):
            return None
        prefix.append(f.agent)
        f = f.body


# -- protocol probabilities ----------------------------------------------------

# computational basis of each lab: (outcome a/b) x (lab memory u/w)
_LAB = {("a", "u"): 0, ("a", "w"): 1, ("b", "u"): 2, ("b", "w"): 3}


def _global_state_integer():
    """Integer coefficients of the prepared state; the true state is this / sqrt(3)."""
    psi = np.zeros(16, dtype=int)
    for coin, spin in ((("a", "u"), ("a", "u")), (("b", "w"), ("a", "u")), (("b", "w"), ("b", "w"))):
        psi[4 * _LAB[coin] + _LAB[spin]] += 1
    return psi, Fraction(1, 3)


def _lab_vector(sign: int):
    v = np.zeros(4, dtype=int)
    v[_LAB[("a", "u")]] = 1
    v[_LAB[("b", "w")]] = sign
    return v, Fraction(1, 2)


def joint_outcome_probability(coin_ok: bool, spin_ok: bool) -> Fraction:
    """Exact probability that the two wigners see the given verdicts.

    "ok" is the antisymmetric lab state (a u - b w)/sqrt2, "fail" the symmetric one.
    """
    psi, s_psi = _global_state_integer()
    v1, s1 = _lab_vector(-1 if coin_ok else 1)
    v2, s2 = _lab_vector(-1 if spin_ok else 1)
    amp = int(np.kron(v1, v2) @ psi)
    return Fraction(amp * amp) * s_psi * s1 * s2


def fr_quantum_probability() -> Fraction:
    return joint_outcome_probability(True, True)


def joint_outcome_probability_float(coin_ok: bool, spin_ok: bool) -> float:
    """Floating-point route through explicit projectors, independent of the integer one."""
    psi = np.zeros(16, dtype=complex)
    for coin, spin in ((("a", "u"), ("a", "u")), (("b", "w"), ("a", "u")), (("b", "w"), ("b", "w"))):
        psi[4 * _LAB[coin] + _LAB[spin]] += 1 / np.sqrt(3)

    def proj(ok):
        v = np.zeros(4, dtype=complex)
        v[_LAB[("a", "u")]], v[_LAB[("b", "w")]] = 1 / np.sqrt(2), (-1 if ok else 1) / np.sqrt(2)
        return np.outer(v, v.conj())

    out = np.kron(proj(coin_ok), proj(spin_ok)) @ psi
    return float(np.vdot(out, out).real)


def fr_quantum_probability_float() -> float:
    return joint_outcome_probability_float(True, True)


def coin_outcome_b_probability() -> Fraction:
    """The coin is prepared as sqrt(1/3) a + sqrt(2/3) b."""
    return Fraction(2, 3)


def expected_halting_rounds(p: Fraction | float | None = None) -> float:
    p = fr_quantum_probability() if p is None else p
    if not 0 < p <= 1:
        raise ValueError("success probability must lie in (0, 1]")
    return float(1 / Fraction(p)) if isinstance(p, (Fraction, int)) else 1.0 / p


def simulate_halting(trials: int = 100_000, seed: int = 42):
    """Repeat the protocol until both wigners report ok; returns (mean, std error)."""
    rng = np.random.default_rng(seed)
    outcomes = [(c, s) for c in (True, False) for s in (True, False)]
    probs = np.array([float(joint_outcome_probability(c, s)) for c, s in outcomes])
    rounds = np.zeros(trials, dtype=int)
    running = np.ones(trials, dtype=bool)
    while running.any():
        idx = np.flatnonzero(running)
        rounds[idx] += 1
        draw = rng.choice(len(outcomes), size=idx.size, p=probs / probs.sum())
        running[idx[draw == 0]] = False
    return float(rounds.mean()), float(rounds.std(ddof=1) / np.sqrt(trials))


def contexts_commute() -> float:
    """Commutator norm between the outcome-basis and entangled-basis projectors on one lab."""
    outcome = np.zeros((4, 4))
    for mem in ("u", "w"):
        outcome[_LAB[("a", mem)], _LAB[("a", mem)]] = 1
    ok = np.zeros(4)
    ok[_LAB[("a", "u")]], ok[_LAB[("b", "w")]] = 2 ** -0.5, -(2 ** -0.5)
    ent = np.outer(ok, ok)
    return float(np.linalg.norm(outcome @ ent - ent @ outcome))
