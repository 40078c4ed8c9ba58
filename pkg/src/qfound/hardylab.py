"""Two overlapping Mach-Zehnder interferometers, one per particle, with annihilation.

Amplitudes are kept exactly in Q(i, sqrt 2) and mirrored in floating point.
Annihilation sends the amplitude of "both particles in the overlapping arm"
to a single photon channel ``gamma``.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .report import CheckReport

GAMMA = "gamma"


class ConfigUnsupported(UserWarning):
    pass


class Surd:
    """x + y*sqrt(2) with x, y Gaussian rationals, stored as four Fractions."""

    __slots__ = ("a", "b", "c", "d")  # (a + b i) + (c + d i) sqrt2

    def __init__(self, a=0, b=0, c=0, d=0):
        self.a, self.b, self.c, self.d = (Fraction(v) for v in (a, b, c, d))

    @classmethod
    def sqrt2(cls):
        return cls(0, 0, 1, 0)

    @classmethod
    def i(cls):
        return cls(0, 1)

    def _coerce(self, other):
        if isinstance(other, Surd):
            return other
        if isinstance(other, (int, Fraction)):
            return Surd(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Surd(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.a, -self.b, -self.c, -self.d)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        # (p + q r2)(s + t r2) = ps + 2qt + (pt + qs) r2, p..t Gaussian
        p, q = (self.a, self.b), (self.c, self.d)
        s, t = (o.a, o.b), (o.c, o.d)
        rat = _cadd(_cmul(p, s), _cscale(_cmul(q, t), 2))
        irr = _cadd(_cmul(p, t), _cmul(q, s))
        return Surd(rat[0], rat[1], irr[0], irr[1])

    __rmul__ = __mul__

    def halve(self):
        return Surd(self.a / 2, self.b / 2, self.c / 2, self.d / 2)

    def conj(self):
        return Surd(self.a, -self.b, self.c, -self.d)

    def abs2(self) -> "Surd":
        return self * self.conj()

    def is_rational(self) -> bool:
        return self.b == 0 and self.c == 0 and self.d == 0

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.a

    def __complex__(self):
        r2 = 2 ** 0.5
        return complex(float(self.a) + r2 * float(self.c), float(self.b) + r2 * float(self.d))

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return (self.a, self.b, self.c, self.d) == (o.a, o.b, o.c, o.d)

    def __hash__(self):
        return hash((self.a, self.b, self.c, self.d))

    def __repr__(self):
        return f"Surd({self.a}, {self.b}, {self.c}, {self.d})"


def _cmul(x, y):
    return (x[0] * y[0] - x[1] * y[1], x[0] * y[1] + x[1] * y[0])


def _cadd(x, y):
    return (x[0] + y[0], x[1] + y[1])


def _cscale(x, k):
    return (x[0] * k, x[1] * k)


INV_SQRT2 = Surd(0, 0, Fraction(1, 2), 0)
I = Surd.i()


@dataclass(frozen=True)
class ApparatusConfig:
    bs2_plus_present: bool = True
    bs2_minus_present: bool = True

    @property
    def label(self) -> str:
        return {(False, False): "neither", (True, False): "plus only",
                (False, True): "minus only", (True, True): "both"}[
            (self.bs2_plus_present, self.bs2_minus_present)]


CONFIGS = [ApparatusConfig(p, m) for p in (False, True) for m in (False, True)]


@dataclass
class HardyAmplitudes:
    stage: str
    amps: dict  # (mode+, mode-) or GAMMA -> Surd

    def numeric(self) -> dict:
        return {k: complex(v) for k, v in self.amps.items()}

    def probabilities(self) -> dict:
        return {k: v.abs2().to_fraction() for k, v in self.amps.items()}

    def total(self) -> Fraction:
        return sum(self.probabilities().values(), Fraction(0))

    def get(self, key) -> Surd:
        return self.amps.get(key, Surd())


# single-particle maps: mode -> list of (coefficient, new mode)
FIRST_SPLITTER = {"s": [(INV_SQRT2, "v"), (I * INV_SQRT2, "u")]}
SECOND_SPLITTER = {
    "u": [(INV_SQRT2, "c"), (I * INV_SQRT2, "d")],
    "v": [(INV_SQRT2, "d"), (I * INV_SQRT2, "c")],
}
NO_SPLITTER = {"u": [(Surd(1), "c")], "v": [(Surd(1), "d")]}


def _apply(state: dict, plus_map: dict | None, minus_map: dict | None) -> dict:
    out: dict = {}
    for key, amp in state.items():
        if key == GAMMA:
            out[GAMMA] = out.get(GAMMA, Surd()) + amp
            continue
        mp, mm = key
        left = plus_map.get(mp, [(Surd(1), mp)]) if plus_map is not None else [(Surd(1), mp)]
        right = minus_map.get(mm, [(Surd(1), mm)]) if minus_map is not None else [(Surd(1), mm)]
        for (ca, a), (cb, b) in itertools.product(left, right):
            out[(a, b)] = out.get((a, b), Surd()) + amp * ca * cb
    return {k: v for k, v in out.items() if v != Surd()}


def _annihilate(state: dict) -> dict:
    out = dict(state)
    amp = out.pop(("u", "u"), None)
    if amp is not None:
        out[GAMMA] = out.get(GAMMA, Surd()) + amp
    return out


def run_stages(cfg: ApparatusConfig) -> list[HardyAmplitudes]:
    state = {("s", "s"): Surd(1)}
    stages = [HardyAmplitudes("initial", state)]
    state = _apply(state, FIRST_SPLITTER, FIRST_SPLITTER)
    stages.append(HardyAmplitudes("post_bs1", state))
    state = _annihilate(state)
    stages.append(HardyAmplitudes("post_annihilation", state))
    state = _apply(state,
                   SECOND_SPLITTER if cfg.bs2_plus_present else NO_SPLITTER,
                   SECOND_SPLITTER if cfg.bs2_minus_present else NO_SPLITTER)
    stages.append(HardyAmplitudes("final", state))
    return stages


def run_scenario(cfg: ApparatusConfig) -> HardyAmplitudes:
    return run_stages(cfg)[-1]


def single_interferometer() -> dict:
    """One particle through both splitters with nothing in the way."""
    state = {"s": Surd(1)}
    for m in (FIRST_SPLITTER, SECOND_SPLITTER):
        nxt: dict = {}
        for mode, amp in state.items():
            for c, new in m[mode]:
                nxt[new] = nxt.get(new, Surd()) + amp * c
        state = {k: v for k, v in nxt.items() if v != Surd()}
    return state


def run_scenario_float(cfg: ApparatusConfig) -> dict:
    """Same evolution in plain complex floats, as an independent cross-check."""
    r = 2 ** -0.5
    bs1 = {"s": [(r, "v"), (1j * r, "u")]}
    bs2 = {"u": [(r, "c"), (1j * r, "d")], "v": [(r, "d"), (1j * r, "c")]}
    none = {"u": [(1, "c")], "v": [(1, "d")]}
    state = {}
    for (ca, a), (cb, b) in itertools.product(bs1["s"], bs1["s"]):
        state[(a, b)] = ca * cb
    gamma = state.pop(("u", "u"))
    out = {GAMMA: gamma}
    pm = bs2 if cfg.bs2_plus_present else none
    mm = bs2 if cfg.bs2_minus_present else none
    for (a, b), amp in state.items():
        for (ca, x), (cb, y) in itertools.product(pm[a], mm[b]):
            out[(x, y)] = out.get((x, y), 0) + amp * ca * cb
    return {k: v for k, v in out.items() if abs(v) > 1e-15}


def coincidence_probability(cfg: ApparatusConfig) -> Fraction:
    """Exact probability that both dark detectors fire."""
    if cfg != ApparatusConfig(True, True):
        warnings.warn(f"coincidence is meant for both splitters present, got {cfg.label}",
                      ConfigUnsupported, stacklevel=2)
    return run_scenario(cfg).get(("d", "d")).abs2().to_fraction()


def channel_probabilities(cfg: ApparatusConfig) -> dict:
    return run_scenario(cfg).probabilities()


def lhv_search():
    """All detector-outcome assignments consistent with the classical constraints.

    Variables (C+, C-, D+, D-): C means the bright detector with the other
    splitter removed, D the dark detector with it in place. Constraints: never
    C+ and C- together; D+ implies C-; D- implies C+.
    """
    feasible = []
    for cp, cm, dp, dm in itertools.product((0, 1), repeat=4):
        if cp and cm:
            continue
        if dp and not cm:
            continue
        if dm and not cp:
            continue
        feasible.append((cp, cm, dp, dm))
    contradiction = not any(dp and dm for _, _, dp, dm in feasible)
    return feasible, contradiction


def hardy_report() -> CheckReport:
    rep = CheckReport("hardy")
    for cfg in CONFIGS:
        for st in run_stages(cfg):
            rep.add(f"{cfg.label} {st.stage} normalised", st.total() == 1, st.total(), Fraction(1))
        exact = run_scenario(cfg).numeric()
        flt = run_scenario_float(cfg)
        diff = max(abs(exact.get(k, 0) - flt.get(k, 0)) for k in set(exact) | set(flt))
        rep.add(f"{cfg.label} exact and float agree", diff <= 1e-12, diff, 0.0, 1e-12)
    neither = run_scenario(ApparatusConfig(False, False))
    rep.add("neither: no bright coincidence", neither.get(("c", "c")) == Surd(),
            complex(neither.get(("c", "c"))), 0.0)
    p = coincidence_probability(ApparatusConfig(True, True))
    rep.add("both: dark coincidence probability", p == Fraction(1, 16), p, Fraction(1, 16))
    _, contradiction = lhv_search()
    rep.add("no local assignment gives a dark coincidence", contradiction, contradiction, True)
    return rep
