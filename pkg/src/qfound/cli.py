"""Command-line driver: one subcommand per lab, JSON reports, exit codes 0/1/2."""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import acceptance
from .numkernel import TolerancePolicy
from .report import CheckReport, jsonable


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- helpers -----------------------------------------------------------------------

def _angle(text: str) -> float:
    """A float, or a multiple of pi such as 'pi', 'pi/3', '2pi/3'."""
    m = re.fullmatch(r"\s*([0-9.]*)\s*\*?\s*pi\s*(?:/\s*([0-9.]+))?\s*", text)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None


def _data_path(name: str) -> Path:
    p = Path(name)
    if p.is_file():
        return p
    shipped = acceptance.data_dir() / p.name
    if shipped.is_file():
        return shipped
    raise UsageError(f"file not found: {name}")


def _structure(path: str, tol: float):
    from .kslab import derive_structure, load_rays

    rf = load_rays(_data_path(path))
    d = rf.rays[0].dim if rf.rays else 3
    return rf, derive_structure(rf.rays, d=d, ortho_tol=max(tol, 1e-12))


def _pol(args) -> TolerancePolicy:
    return TolerancePolicy(eq_tol=args.tol)


# -- qlattice ----------------------------------------------------------------------

def cmd_qlattice_props(args):
    from .qlattice import (
        check_modular,
        check_orthomodular,
        distributivity_witness,
        modularity_gap,
        random_modular_triple,
        random_nested_pair,
    )

    pol = _pol(args)
    rng = np.random.default_rng(args.seed)
    rep = CheckReport("qlattice")
    dims = (2, args.max_dim + 1)
    bad = sum(not check_orthomodular(*random_nested_pair(int(rng.integers(*dims)), rng), pol)
              for _ in range(args.samples))
    rep.add(f"orthomodular on {args.samples} nested pairs", bad == 0, bad, 0)
    bad = sum(not check_modular(*random_modular_triple(int(rng.integers(*dims)), rng), pol)
              for _ in range(args.samples))
    rep.add(f"modular on {args.samples} triples", bad == 0, bad, 0)
    *_, gap = distributivity_witness(2, args.seed, pol)
    rep.add("distributivity witness in dim 2", gap > 0.5, gap, 0.5)
    for n in range(1, args.gap_terms + 1):
        g = modularity_gap(n, 2.0)
        rep.add(f"truncation gap n={n}", g <= 2.0 ** -n, g, 2.0 ** -n)
    return {"samples": args.samples, "max_dim": args.max_dim, "gap_terms": args.gap_terms}, rep


# -- way ---------------------------------------------------------------------------

def _apparatus(args):
    from .waylab import build_fiduciary, load_apparatus

    if getattr(args, "apparatus", None):
        return load_apparatus(_data_path(args.apparatus).read_text())
    return build_fiduciary(args.l, args.epsilon, pol=_pol(args))


def cmd_way_build(args):
    app = _apparatus(args)
    rep = CheckReport("way build")
    rep.note("cutoff N", app.N)
    want = app.expected_noise()
    got = app.measured_noise()
    rep.add("noise norm squared", abs(got - want) <= 1e-12, got, Fraction(4 * app.l, 2 * app.N + 1), 1e-12)
    rep.add("noise below epsilon", got < app.epsilon or app.l == 0, got, app.epsilon)
    rep.note("apparatus dimension", app.dim_apparatus)
    if args.out:
        from .waylab import dump_apparatus

        Path(args.out).write_text(dump_apparatus(app))
    return {"l": app.l, "epsilon": app.epsilon, "out": args.out}, rep


def cmd_way_verify(args):
    from .waylab import fiduciary_unitary, unitary_report, verify_fiduciary

    app = _apparatus(args)
    rep = verify_fiduciary(app, _pol(args))
    u = fiduciary_unitary(app, _pol(args))
    total = np.kron(app.charge_system(), np.eye(app.dim_apparatus)) + \
        np.kron(np.eye(app.dim_system), app.charge_apparatus())
    rep.extend(unitary_report(u, app.initial_vectors(), app.final_vectors(), total, args.tol), "unitary: ")
    return {"l": app.l, "epsilon": app.epsilon, "N": app.N, "apparatus": args.apparatus}, rep


def cmd_way_ozawa(args):
    rep = acceptance.c09_ozawa(args.seed, trials=args.trials)
    return {"trials": args.trials}, rep


# -- fv ----------------------------------------------------------------------------

def cmd_fv_check(args):
    from .fvlab import random_suite

    rep = random_suite(trials=args.trials, seed=args.seed, dims=tuple(args.dims), tol=args.tol)
    return {"trials": args.trials, "dims": args.dims}, rep


def cmd_fv_compose(args):
    from .fvlab import LocalFactorization, ScatteringMorphism, _random_effect, compose_instruments, random_coupling
    from .numkernel import random_density, random_unitary

    rng = np.random.default_rng(args.seed)
    ds, dp = args.dims
    rep = CheckReport("fv compose")
    t1, t2 = random_coupling(ds, dp, rng), random_coupling(ds, dp, rng)
    e1, e2 = _random_effect(dp, rng), _random_effect(dp, rng)
    s1, s2 = random_density(dp, rng), random_density(dp, rng)
    rep.extend(compose_instruments(e1, s1, t1, e2, s2, t2, random_density(ds, rng)), "shared system: ")
    fact = LocalFactorization([ds, ds], {0: "K1", 1: "K2"}, [], {("K1", "K2")})
    k1 = ScatteringMorphism.local(random_unitary(ds * dp, rng), [0], [ds, ds], dp, "K1")
    k2 = ScatteringMorphism.local(random_unitary(ds * dp, rng), [1], [ds, ds], dp, "K2")
    rep.extend(compose_instruments(e1, s1, k1, e2, s2, k2, random_density(ds * ds, rng), fact),
               "spacelike: ")
    # the order gap is informational for non-commuting couplings
    for c in rep.checks:
        if c.name == "shared system: order gap":
            c.passed, c.warn = True, True
    return {"dims": args.dims}, rep


def cmd_fv_nosignal(args):
    from .fvlab import CausalOrderViolated, nonsignaling_check, parse_fv_scenario

    path = _data_path(args.scenario)
    try:
        sc = parse_fv_scenario(path.read_text(), seed=args.seed)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    rep = CheckReport("fv nosignal")
    names = list(sc.couplings)
    if len(names) != 2 or not sc.observables:
        raise UsageError("scenario needs exactly two couplings and an observable")
    (t1, p1), (t2, p2) = sc.couplings[names[0]], sc.couplings[names[1]]
    obs_name = args.observable or next(iter(sc.observables))
    obs = sc.observables[obs_name]
    try:
        with_a, without_a, gap = nonsignaling_check(t1, t2, obs, sc.system_state, sc.probes[p1], sc.probes[p2],
                                                    sc.factorization, enforce=not args.no_enforce)
    except CausalOrderViolated as exc:
        rep.add("causal preconditions", False, str(exc))
        return {"scenario": str(args.scenario), "observable": obs_name}, rep
    rep.note(f"<{obs_name}> with both couplings", with_a)
    rep.note(f"<{obs_name}> without {names[0]}", without_a)
    rep.add("non-signalling gap", gap <= 1e-10, gap, 0.0, 1e-10)
    return {"scenario": str(args.scenario), "observable": obs_name, "enforce": not args.no_enforce}, rep


# -- hepp --------------------------------------------------------------------------

def cmd_hepp_run(args):
    from .hepplab import ChainState, reduced_coherence, reduced_coherence_trace

    rep = CheckReport("hepp run")
    for t in range(args.sites + 1):
        s = ChainState(args.c_plus, args.c_minus, args.sites, args.theta, t)
        c = reduced_coherence(s)
        if args.sites <= 12:
            r = abs(c - reduced_coherence_trace(s))
            rep.add(f"t={t} coherence", r <= 1e-12, c, reduced_coherence_trace(s), 1e-12)
        else:
            rep.note(f"t={t} coherence", c)
    return {"sites": args.sites, "theta": args.theta, "c_plus": args.c_plus, "c_minus": args.c_minus}, rep


def cmd_hepp_bell(args):
    from .hepplab import ChainState, bell_witness, reduced_coherence, truncation_check

    rep = CheckReport("hepp bell")
    want = abs(args.c_plus * args.c_minus)
    for t in range(1, args.sites + 1):
        s = ChainState(args.c_plus, args.c_minus, args.sites, math.pi, t)
        w = abs(bell_witness(s))
        rep.add(f"t={t} witness magnitude", abs(w - want) <= 1e-12, w, want, 1e-12)
        rep.add(f"t={t} reduced coherence", reduced_coherence(s) <= 1e-15, reduced_coherence(s), 0.0, 1e-15)
        if t > 1:
            cut, dist = truncation_check(s, t - 1)
            rep.add(f"t={t} witness cut to {t - 1} sites", cut <= 1e-14, cut, 0.0, 1e-14)
            rep.note(f"t={t} cut distance", dist)
    return {"sites": args.sites, "c_plus": args.c_plus, "c_minus": args.c_minus}, rep


# -- ks ----------------------------------------------------------------------------

def cmd_ks_validate(args):
    from .kslab import validate_rays

    rf, g = _structure(args.rays, args.tol)
    rep = validate_rays(rf)
    st = g.stats()
    for k in ("rays", "edges", "contexts"):
        rep.note(k, st[k])
    rep.add("no oversized cliques", st["oversized"] == 0, st["oversized"], 0)
    if st["suspicious"]:
        rep.add("near-orthogonal pairs", True, st["suspicious"], 0, warn=True)
    return {"rays": args.rays}, rep


def _pins(items):
    pins = {}
    for it in items or []:
        k, sep, v = it.partition("=")
        if not sep or v not in ("0", "1") or not k.isdigit():
            raise UsageError(f"bad pin {it!r}, expected ID=0 or ID=1")
        pins[int(k)] = int(v)
    return pins


def cmd_ks_color(args):
    from .kslab import InconsistentPins, color_search, is_valid_coloring

    _, g = _structure(args.rays, args.tol)
    pins = _pins(args.pin)
    rep = CheckReport("ks color")
    try:
        col, explored = color_search(g, pins)
    except InconsistentPins as exc:
        rep.add("pins consistent", False, str(exc))
        return {"rays": args.rays, "pins": pins}, rep
    rep.note("colorable", col is not None)
    rep.note("decision nodes", explored)
    if col is not None:
        rep.add("coloring valid", is_valid_coloring(col, g))
        rep.note("rays valued 1", sorted(k for k, v in col.items() if v == 1))
    return {"rays": args.rays, "pins": pins}, rep


def cmd_ks_gleason(args):
    from .kslab import frame_samples, gleason_fit
    from .numkernel import max_abs, random_density

    rng = np.random.default_rng(args.seed)
    rep = CheckReport("ks gleason")
    worst = 0.0
    for _ in range(args.trials):
        t = random_density(args.dim, rng)
        fit, _ = gleason_fit(frame_samples(t, args.bases, rng), args.dim)
        worst = max(worst, max_abs(fit - t), abs(np.trace(fit).real - 1))
    rep.add("recovered operators", worst <= 1e-8, worst, 0.0, 1e-8)
    return {"trials": args.trials, "bases": args.bases, "dim": args.dim}, rep


def cmd_ks_dim2(args):
    from .kslab import dim2_two_valued_measure

    if args.points % 4:
        raise UsageError("--points must be a multiple of 4")
    g = np.random.default_rng(args.seed).integers(0, 2, size=args.points // 4)
    return {"points": args.points}, dim2_two_valued_measure(g)


# -- hardy -------------------------------------------------------------------------

_CONFIGS = {"both": (True, True), "neither": (False, False), "plus": (True, False), "minus": (False, True)}


def cmd_hardy_run(args):
    from .hardylab import GAMMA, ApparatusConfig, run_scenario

    cfg = ApparatusConfig(*_CONFIGS[args.config])
    amps = run_scenario(cfg)
    rep = CheckReport("hardy run")
    probs = amps.probabilities()
    rep.add("probabilities sum to 1", amps.total() == 1, amps.total(), Fraction(1))
    for key in sorted(probs, key=str):
        label = "annihilation" if key == GAMMA else f"{key[0]}+{key[1]}-"
        rep.note(f"probability {label}", probs[key])
    return {"config": args.config}, rep


def cmd_hardy_lhv(args):
    from .hardylab import lhv_search

    feasible, contradiction = lhv_search()
    rep = CheckReport("hardy lhv")
    rep.note("feasible assignments (C+, C-, D+, D-)", [list(a) for a in feasible])
    rep.add("no assignment fires both dark detectors", contradiction)
    return {}, rep


# -- fr ----------------------------------------------------------------------------

def cmd_fr_run(args):
    from .epistemic import fr_run, milestones

    run = fr_run(args.mode, set(args.drop or []), args.max_depth)
    rep = CheckReport("fr run")
    rep.note("verdict", run.verdict)
    rep.note("proof steps", len(run.trace.steps))
    for name, idx in milestones(run.trace).items():
        rep.note(f"milestone {name}", idx)
    if args.mode == "contextual":
        rep.note("blocked edge", list(run.blocked_edge) if run.blocked_edge else None)
    if args.expect:
        rep.add("expected verdict", run.verdict == args.expect, run.verdict, args.expect)
    if args.proof and not args.quiet:
        print(run.trace.render())
    return {"mode": args.mode, "drop": sorted(args.drop or []), "max_depth": args.max_depth}, rep


def cmd_fr_prob(args):
    from .epistemic import (
        expected_halting_rounds,
        fr_quantum_probability,
        joint_outcome_probability,
        simulate_halting,
    )

    rep = CheckReport("fr prob")
    p = fr_quantum_probability()
    rep.add("P(both ok)", p == Fraction(1, 12), p, Fraction(1, 12))
    total = sum(joint_outcome_probability(a, b) for a in (True, False) for b in (True, False))
    rep.add("joint outcomes sum to 1", total == 1, total, Fraction(1))
    rep.note("expected rounds until both ok", expected_halting_rounds())
    if args.trials:
        mean, se = simulate_halting(args.trials, args.seed)
        rep.add("simulated rounds within 5 standard errors", abs(mean - 12) <= 5 * se, mean, 12.0, 5 * se)
    return {"trials": args.trials}, rep


# -- presheaf ----------------------------------------------------------------------

def _family(args):
    """(label, structure, coloring or None) for --rays or --dim2."""
    from .presheaf import dim2_coloring, dim2_grid_structure

    if args.dim2:
        if args.dim2 < 1:
            raise UsageError("--dim2 must be positive")
        gv = np.random.default_rng(args.seed).integers(0, 2, size=args.dim2)
        return f"dim-2 grid of {2 * args.dim2} rays", dim2_grid_structure(args.dim2), dim2_coloring(gv)
    _, g = _structure(args.rays, args.tol)
    return args.rays, g, None


def cmd_presheaf_sections(args):
    from .kslab import color_search
    from .presheaf import global_section_search, ray_poset

    name, g, _ = _family(args)
    rp = ray_poset(g)
    sec = global_section_search(rp.poset)
    col, _ = color_search(g)
    rep = CheckReport("presheaf sections")
    rep.note("contexts", len(rp.poset.contexts))
    rep.note("inclusions", len(rp.poset.inclusion))
    rep.note("section exists", sec is not None)
    rep.add("section verdict matches coloring verdict", (sec is None) == (col is None),
            sec is not None, col is not None)
    return {"family": name}, rep


def cmd_presheaf_roundtrip(args):
    from .kslab import color_search
    from .presheaf import valuation_section_roundtrip

    name, g, col = _family(args)
    if col is None:
        col, _ = color_search(g)
    return {"family": name}, valuation_section_roundtrip(col, g)


# -- accept ------------------------------------------------------------------------

def cmd_accept(args):
    where = Path(args.data_dir) if args.data_dir else None

    def progress(c, rep, elapsed):
        if not args.quiet:
            mark = "pass" if rep.ok else "FAIL"
            print(f"criterion {c.number:2d} [{c.group}] {c.title}: {mark} ({elapsed:.2f} s)")

    try:
        rep = acceptance.run_acceptance(args.suite, args.seed, where, progress)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return {"suite": args.suite, "data_dir": args.data_dir}, rep


# -- parser ------------------------------------------------------------------------

def _globals(p, top=False):
    d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    p.add_argument("--tol", type=float, default=d(1e-9), help="equality tolerance (default 1e-9)")
    p.add_argument("--seed", type=int, default=d(42), help="random seed (default 42)")
    p.add_argument("--report", default=d(None), help="write the JSON report here")
    p.add_argument("--quiet", action="store_true", default=d(False), help="no terminal output")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qfound", description="Numerical laboratories for foundations of quantum theory.")
    _globals(ap, top=True)
    sub = ap.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(group_sub, name, fn, help_):
        p = group_sub.add_parser(name, help=help_)
        _globals(p)
        p.set_defaults(fn=fn)
        return p

    def group(name, help_):
        g = sub.add_parser(name, help=help_)
        return g.add_subparsers(dest="action", required=True, parser_class=_Parser)

    g = group("qlattice", "projector lattice")
    p = leaf(g, "props", cmd_qlattice_props, "lattice laws on random projectors")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--max-dim", type=int, default=6)
    p.add_argument("--gap-terms", type=int, default=12)

    g = group("way", "conservation-limited measurement")
    for name, fn, h in (("build", cmd_way_build, "build the fiduciary apparatus"),
                        ("verify", cmd_way_verify, "check the apparatus and its unitary")):
        p = leaf(g, name, fn, h)
        p.add_argument("--l", type=int, default=1)
        p.add_argument("--epsilon", type=float, default=0.4)
        p.add_argument("--apparatus", help="load a dumped apparatus instead of building")
        if name == "build":
            p.add_argument("--out", help="dump the apparatus to this file")
    p = leaf(g, "ozawa", cmd_way_ozawa, "noise lower bound on random conserving couplings")
    p.add_argument("--trials", type=int, default=30)

    g = group("fv", "probe-based measurement")
    p = leaf(g, "check", cmd_fv_check, "induced-observable properties on random couplings")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--dims", type=int, nargs=2, default=[3, 3], metavar=("SYSTEM", "PROBE"))
    p = leaf(g, "compose", cmd_fv_compose, "sequential instruments versus one joint probe")
    p.add_argument("--dims", type=int, nargs=2, default=[2, 2], metavar=("SYSTEM", "PROBE"))
    p = leaf(g, "nosignal", cmd_fv_nosignal, "non-signalling check on a scenario file")
    p.add_argument("--scenario", default="fv_nosignal.scn")
    p.add_argument("--observable")
    p.add_argument("--no-enforce", action="store_true", help="skip the causal preconditions")

    g = group("hepp", "spin-chain apparatus")
    p = leaf(g, "run", cmd_hepp_run, "reduced coherence over time")
    p.add_argument("--theta", type=_angle, default=math.pi)
    for q in (p, leaf(g, "bell", cmd_hepp_bell, "global witness and its truncations")):
        q.add_argument("--sites", type=int, default=10)
        q.add_argument("--c-plus", type=float, default=0.6)
        q.add_argument("--c-minus", type=float, default=0.8)

    g = group("ks", "Kochen-Specker and Gleason")
    p = leaf(g, "validate", cmd_ks_validate, "check a ray file")
    p.add_argument("--rays", default="ks117.rays")
    p = leaf(g, "color", cmd_ks_color, "search for a 0/1 coloring")
    p.add_argument("--rays", default="ks117.rays")
    p.add_argument("--pin", action="append", metavar="ID=V")
    p = leaf(g, "gleason", cmd_ks_gleason, "recover density operators from frame functions")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--bases", type=int, default=50)
    p.add_argument("--dim", type=int, default=3)
    p = leaf(g, "dim2", cmd_ks_dim2, "two-valued measure in dimension two")
    p.add_argument("--points", type=int, default=360)

    g = group("hardy", "Hardy interferometers")
    p = leaf(g, "run", cmd_hardy_run, "exact detector probabilities")
    p.add_argument("--config", choices=sorted(_CONFIGS), default="both")
    leaf(g, "lhv", cmd_hardy_lhv, "search all local assignments")

    g = group("fr", "two-lab reasoning")
    p = leaf(g, "run", cmd_fr_run, "derive the closure")
    p.add_argument("--mode", choices=["plain", "contextual"], default="plain")
    p.add_argument("--drop", action="append", help="remove a trust edge, tautology or announcement")
    p.add_argument("--max-depth", type=int, default=60)
    p.add_argument("--expect", choices=["contradiction", "consistent"])
    p.add_argument("--proof", action="store_true", help="print the proof")
    p = leaf(g, "prob", cmd_fr_prob, "protocol probabilities")
    p.add_argument("--trials", type=int, default=0, help="also simulate this many protocol runs")

    g = group("presheaf", "contexts and global sections")
    for name, fn, h in (("sections", cmd_presheaf_sections, "search for a global section"),
                        ("roundtrip", cmd_presheaf_roundtrip, "coloring to section and back")):
        p = leaf(g, name, fn, h)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--rays", default="ks117.rays")
        src.add_argument("--dim2", type=int, metavar="N", help="grid of 2N rays in the plane")

    p = sub.add_parser("accept", help="run the acceptance criteria")
    _globals(p)
    p.add_argument("suite", nargs="?", default="all", help="all or one of " + ", ".join(acceptance.GROUPS))
    p.add_argument("--data-dir", help="read data files from here")
    p.set_defaults(fn=cmd_accept, action=None)
    return ap


# -- output ------------------------------------------------------------------------

def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def _paint(text: str, status: str, color: bool) -> str:
    if not color:
        return text
    code = {"pass": "32", "fail": "31", "warn": "33"}[status]
    return f"\033[{code}m{text}\033[0m"


def print_report(rep: CheckReport, stream=sys.stdout) -> None:
    color = stream.isatty() and "NO_COLOR" not in os.environ
    for c in rep.checks:
        value = "" if c.value is None else f"  {json.dumps(jsonable(c.value), ensure_ascii=False)}"
        print(f"{_paint(c.status.upper().ljust(4), c.status, color)}  {c.name}{value}", file=stream)
    n_fail = len(rep.failed())
    print(f"{len(rep.checks)} checks, {n_fail} failed", file=stream)


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        t0 = time.perf_counter()
        params, rep = args.fn(args)
    except UsageError as exc:
        print(f"qfound: error: {exc}", file=sys.stderr)
        return 2
    elapsed = int(round((time.perf_counter() - t0) * 1000))
    command = args.group if args.action is None else f"{args.group} {args.action}"
    if args.group == "accept":
        command = f"accept {args.suite}"
    report = {
        "command": command,
        "parameters": jsonable({**params, "tol": args.tol}),
        "checks": [c.as_dict() for c in rep.checks],
        "elapsed_ms": elapsed,
        "seed": args.seed,
    }
    if not args.quiet:
        print_report(rep)
    if args.report:
        Path(args.report).write_text(render_json(report), encoding="utf-8")
    return 0 if rep.ok else 1


def main() -> None:
    sys.exit(dispatch())
