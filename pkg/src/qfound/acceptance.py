"""The thirteen acceptance criteria as named, timed check reports."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .report import CheckReport

DATA_FILES = ("ks117.rays", "bug.rays", "frauchiger_renner.kb", "fv_nosignal.scn")


@dataclass(frozen=True)
class Criterion:
    number: int
    group: str
    title: str
    budget_s: float
    run: Callable


def data_dir() -> Path:
    return Path(str(resources.files("qfound") / "data"))


def _rays(name: str, where: Path | None):
    from .kslab import load_rays

    return load_rays((where or data_dir()) / name)


# -- hardy ------------------------------------------------------------------------

def c01_hardy_coincidence(seed: int, where=None) -> CheckReport:
    from .hardylab import GAMMA, ApparatusConfig, coincidence_probability, run_scenario_float

    rep = CheckReport("Hardy coincidence")
    cfg = ApparatusConfig(True, True)
    p = coincidence_probability(cfg)
    rep.add("dark coincidence is exactly 1/16", p == Fraction(1, 16), p, Fraction(1, 16))
    flt = run_scenario_float(cfg)
    r = abs(abs(flt[("d", "d")]) ** 2 - 1 / 16)
    rep.add("floating residual", r <= 1e-12, r, 0.0, 1e-12)
    total = sum(abs(v) ** 2 for k, v in flt.items())
    rep.add("float probabilities sum to 1", abs(total - 1) <= 1e-12, total, 1.0, 1e-12)
    rep.notes.append(f"annihilation amplitude {flt.get(GAMMA)}")
    return rep


def c02_hardy_lhv(seed: int, where=None) -> CheckReport:
    from .hardylab import lhv_search

    rep = CheckReport("Hardy local assignments")
    feasible, contradiction = lhv_search()
    rep.add("all 16 assignments examined", True, 16)
    rep.add("no feasible assignment has both dark detectors firing", contradiction,
            sum(1 for *_, dp, dm in feasible if dp and dm), 0)
    return rep


# -- two-lab protocol -----------------------------------------------------------

def c03_fr_probability(seed: int, where=None) -> CheckReport:
    from .epistemic import fr_quantum_probability, joint_outcome_probability, joint_outcome_probability_float

    rep = CheckReport("two-lab probability")
    p = fr_quantum_probability()
    rep.add("both ok is exactly 1/12", p == Fraction(1, 12), p, Fraction(1, 12))
    outcomes = [(a, b) for a in (True, False) for b in (True, False)]
    exact = sum(joint_outcome_probability(a, b) for a, b in outcomes)
    rep.add("exact joint outcomes sum to 1", exact == 1, exact, Fraction(1))
    flt = sum(joint_outcome_probability_float(a, b) for a, b in outcomes)
    rep.add("float joint outcomes sum to 1", abs(flt - 1) <= 1e-12, flt, 1.0, 1e-12)
    return rep


def c04_fr_logic(seed: int, where=None) -> CheckReport:
    from .epistemic import ablation_targets, fr_run, milestones

    rep = CheckReport("two-lab reasoning")
    plain = fr_run("plain", max_depth=60)
    rep.add("plain trust reaches the contradiction", plain.verdict == "contradiction", plain.verdict)
    ms = milestones(plain.trace)
    for name, idx in ms.items():
        rep.add(f"milestone {name}", idx is not None, idx)
    order = [ms.get("friend_implication"), ms.get("pre_experiment_implication"), ms.get("wigner_both_outcomes")]
    rep.add("milestones in proof order", None not in order and order == sorted(order), order)
    ctx = fr_run("contextual", max_depth=60)
    rep.add("contextual trust stays consistent", ctx.verdict == "consistent", ctx.verdict)
    rep.add("blocked at the coin wigner to spin friend edge",
            ctx.blocked_edge == ("coin_wigner@2", "spin_friend@2"), ctx.blocked_edge)
    for target in ablation_targets():
        v = fr_run("plain", drop={target}, max_depth=60).verdict
        rep.add(f"dropping {target} removes the contradiction", v == "consistent", v)
    return rep


# -- Kochen-Specker and friends ---------------------------------------------------

def c05_kochen_specker(seed: int, where=None) -> CheckReport:
    from .kslab import bug_forcing, color_search, derive_structure, validate_rays

    rep = CheckReport("Kochen-Specker")
    rf = _rays("ks117.rays", where)
    val = validate_rays(rf)
    rep.add("117 rays validate", val.ok, len(val.failed()), 0)
    g = derive_structure(rf.rays)
    rep.add("117 rays, 43 full contexts", (len(g.rays), len(g.contexts)) == (117, 43),
            [len(g.rays), len(g.contexts)], [117, 43])
    col, explored = color_search(g)
    rep.add("exhaustive search finds no coloring", col is None, explored)
    bug = derive_structure(_rays("bug.rays", where).rays)
    forcing = bug_forcing(bug, 1, 8)
    rep.extend(forcing, "bug: ")
    return rep


def c06_gleason(seed: int, where=None) -> CheckReport:
    from .kslab import frame_samples, gleason_fit
    from .numkernel import max_abs, random_density

    rep = CheckReport("Gleason fit")
    rng = np.random.default_rng(seed)
    worst_t, worst_w, worst_fit = 0.0, 0.0, 0.0
    for _ in range(20):
        t = random_density(3, rng)
        samples = frame_samples(t, 50, rng)
        fit, resid = gleason_fit(samples, 3)
        worst_t = max(worst_t, max_abs(fit - t))
        worst_fit = max(worst_fit, resid)
        w = max(abs(sum(ws) - 1.0) for _, ws in samples)
        worst_w = max(worst_w, w, abs(np.trace(fit).real - sum(samples[0][1])))
    rep.add("recovered operator matches", worst_t <= 1e-8, worst_t, 0.0, 1e-8)
    rep.add("sample residual", worst_fit <= 1e-8, worst_fit, 0.0, 1e-8)
    rep.add("trace equals basis weight", worst_w <= 1e-8, worst_w, 0.0, 1e-8)
    return rep


def c07_dim2(seed: int, where=None) -> CheckReport:
    from .kslab import dim2_measure, dim2_two_valued_measure

    rng = np.random.default_rng(seed)
    g = rng.integers(0, 2, size=90)
    rep = CheckReport("dimension two")
    mu = dim2_measure(g)
    rep.add("grid has 360 points", len(mu) == 360, len(mu), 360)
    rep.extend(dim2_two_valued_measure(g))
    return rep


# -- conservation laws ----------------------------------------------------------

def c08_fiduciary(seed: int, where=None) -> CheckReport:
    from .waylab import build_fiduciary, fiduciary_unitary, unitary_report, verify_fiduciary

    rep = CheckReport("fiduciary apparatus")
    for eps, n_want, noise in ((0.4, 5, Fraction(4, 11)), (0.05, 40, Fraction(4, 81))):
        app = build_fiduciary(1, eps)
        tag = f"eps={eps}: "
        rep.add(tag + "cutoff", app.N == n_want, app.N, n_want)
        measured = app.measured_noise()
        r = abs(measured - float(noise))
        rep.add(tag + "noise norm squared", r <= 1e-12 and measured < eps, measured, noise, 1e-12)
        rep.extend(verify_fiduciary(app), tag)
        u = fiduciary_unitary(app)
        psi_in, psi_out = app.initial_vectors(), app.final_vectors()
        total = np.kron(app.charge_system(), np.eye(app.dim_apparatus)) + \
            np.kron(np.eye(app.dim_system), app.charge_apparatus())
        rep.extend(unitary_report(u, psi_in, psi_out, total, 1e-9), tag)
    return rep


def c09_ozawa(seed: int, where=None, trials: int = 30) -> CheckReport:
    from .numkernel import random_hermitian, random_state_vector
    from .waylab import exact_measurement, ozawa_noise_bound, random_conserving_unitary

    rep = CheckReport("noise lower bound")
    worst = math.inf
    biggest = 0
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        d1 = int(rng.integers(2, 4))
        d2 = int(rng.integers(2, 12 // d1 + 1))
        biggest = max(biggest, d1 * d2)
        l1 = np.diag(rng.integers(-1, 2, size=d1)).astype(complex)
        l2 = np.diag(rng.integers(-1, 2, size=d2)).astype(complex)
        u = random_conserving_unitary(l1, l2, rng)
        noise_sq, bound = ozawa_noise_bound(u, random_hermitian(d1, rng), random_hermitian(d2, rng),
                                            l1, l2, random_state_vector(d1, rng), random_state_vector(d2, rng))
        worst = min(worst, noise_sq - bound)
    rep.add(f"noise squared >= bound on {trials} couplings", worst >= -1e-9, worst, 0.0, 1e-9)
    rep.add("dimensions at most 12", biggest <= 12, biggest, 12)
    ex = exact_measurement()
    rng = np.random.default_rng(seed)
    noise_sq, bound = ozawa_noise_bound(ex.unitary, ex.measured, ex.meter, ex.charge_system,
                                        ex.charge_apparatus, random_state_vector(2, rng), ex.xi)
    rep.add("exact case: noise 0", abs(noise_sq) <= 1e-10, noise_sq, 0.0, 1e-10)
    rep.add("exact case: bound 0", abs(bound) <= 1e-10, bound, 0.0, 1e-10)
    return rep


# -- probes ---------------------------------------------------------------------

def c10_fv(seed: int, where=None) -> CheckReport:
    from .fvlab import random_suite

    return random_suite(trials=50, seed=seed, dims=(3, 3))


def c11_hepp(seed: int, where=None) -> CheckReport:
    from .hepplab import (
        ChainState,
        bell_witness,
        local_cross_term,
        reduced_coherence,
        reduced_coherence_trace,
        truncation_check,
    )
    from .numkernel import random_hermitian

    rep = CheckReport("spin chain")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (4, 8, 12):
        for theta in (math.pi / 3, math.pi / 2, math.pi):
            for t in range(n + 1):
                s = ChainState(0.6, 0.8, n, theta, t)
                worst = max(worst, abs(reduced_coherence(s) - reduced_coherence_trace(s)))
    rep.add("coherence formula equals partial trace", worst <= 1e-12, worst, 0.0, 1e-12)

    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 11))
        t = int(rng.integers(1, n + 1))
        m = int(rng.integers(0, min(t, 5)))
        a = random_hermitian(2 ** (m + 1), rng)
        c = rng.normal(size=2) + 1j * rng.normal(size=2)
        c /= np.linalg.norm(c)
        worst = max(worst, abs(local_cross_term(a, m, ChainState(c[0], c[1], n, math.pi, t))))
    rep.add("local cross terms vanish (100 cases)", worst <= 1e-14, worst, 0.0, 1e-14)

    n = 10
    mags = [abs(bell_witness(ChainState(0.6, 0.8, n, math.pi, t))) for t in range(1, n + 1)]
    spread = max(mags) - min(mags)
    rep.add("witness magnitude independent of t", spread <= 1e-12, spread, 0.0, 1e-12)
    rep.add("witness magnitude equals |c+ c-|", abs(mags[0] - 0.48) <= 1e-12, mags[0], 0.48, 1e-12)
    coh = max(reduced_coherence(ChainState(0.6, 0.8, n, math.pi, t)) for t in range(1, n + 1))
    rep.add("reduced coherence is zero", coh <= 1e-15, coh, 0.0, 1e-15)
    ok, worst_cut = True, 0.0
    for t in range(1, n + 1):
        s = ChainState(0.6, 0.8, n, math.pi, t)
        w = abs(bell_witness(s))
        for m in range(t):
            cut, dist = truncation_check(s, m)
            worst_cut = max(worst_cut, cut)
            # the cross-term map has norm |c+ c-|, so dropping the tail costs at most that much
            ok &= w - cut <= dist * 0.48 + 1e-12
    rep.add("truncated witnesses lose the cross term", worst_cut <= 1e-14, worst_cut, 0.0, 1e-14)
    rep.add("quasilocal truncation bound", ok)
    return rep


# -- lattices and contexts --------------------------------------------------------

def c12_qlattice(seed: int, where=None) -> CheckReport:
    from .qlattice import (
        check_modular,
        check_orthomodular,
        distributivity_witness,
        modularity_gap,
        random_modular_triple,
        random_nested_pair,
    )

    rep = CheckReport("projector lattice")
    rng = np.random.default_rng(seed)
    bad = sum(not check_orthomodular(*random_nested_pair(int(rng.integers(2, 7)), rng)) for _ in range(1000))
    rep.add("orthomodular on 1000 nested pairs", bad == 0, bad, 0)
    bad = sum(not check_modular(*random_modular_triple(int(rng.integers(2, 7)), rng)) for _ in range(1000))
    rep.add("modular on 1000 triples", bad == 0, bad, 0)
    *_, gap = distributivity_witness(2, seed)
    rep.add("distributivity fails in dim 2", gap > 0.5, gap, 0.5)
    over = [n for n in range(1, 13) if modularity_gap(n, 2.0) > 2.0 ** -n]
    rep.add("truncation gap below 2^-n for n = 1..12", not over, over, [])
    return rep


def c13_presheaf(seed: int, where=None) -> CheckReport:
    import mpmath

    from .kslab import Ray, color_search, derive_structure
    from .presheaf import (
        characters,
        dim2_grid_structure,
        generate_context,
        global_section_search,
        random_context,
        ray_poset,
    )

    rep = CheckReport("contexts and colorings")
    ks = derive_structure(_rays("ks117.rays", where).rays)
    bug = derive_structure(_rays("bug.rays", where).rays)
    families = {
        "117 set": ks,
        "117 set without ray 1": derive_structure([r for r in ks.rays if r.id != 1]),
        "117 set plus a stray ray": derive_structure(ks.rays + [Ray(118, (mpmath.mpf(1), mpmath.mpf(2), mpmath.mpf(2)))]),
        "bug": bug,
        "one context": derive_structure(bug.rays[1:2] + bug.rays[3:4] + bug.rays[5:6]),
        "dim-2 grid": dim2_grid_structure(90),
    }
    for name, g in families.items():
        col, _ = color_search(g)
        sec = global_section_search(ray_poset(g).poset)
        rep.add(f"{name}: verdicts match", (col is None) == (sec is None),
                {"coloring": col is not None, "section": sec is not None})
    rep.add("117 set has no section", global_section_search(ray_poset(ks).poset) is None)
    rep.add("dim-2 grid has a section",
            global_section_search(ray_poset(families["dim-2 grid"]).poset) is not None)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        gens = random_context(int(rng.integers(2, 6)), rng)
        ctx = generate_context(gens)
        a = gens[0]
        for chi in characters(ctx):
            worst = max(worst, abs(chi(a @ a) - chi(a) ** 2))
    rep.add("character of A^2 equals square (100 contexts)", worst <= 1e-10, worst, 0.0, 1e-10)
    return rep


CRITERIA = [
    Criterion(1, "hardy", "Hardy coincidence probability", 1, c01_hardy_coincidence),
    Criterion(2, "hardy", "Hardy local-assignment refutation", 1, c02_hardy_lhv),
    Criterion(3, "fr", "two-lab joint probability", 1, c03_fr_probability),
    Criterion(4, "fr", "two-lab reasoning", 5, c04_fr_logic),
    Criterion(5, "ks", "Kochen-Specker 117 rays and bug", 60, c05_kochen_specker),
    Criterion(6, "ks", "Gleason fit", 10, c06_gleason),
    Criterion(7, "ks", "dimension-two measure", 1, c07_dim2),
    Criterion(8, "way", "fiduciary apparatus", 30, c08_fiduciary),
    Criterion(9, "way", "noise lower bound", 20, c09_ozawa),
    Criterion(10, "fv", "probe measurement properties", 60, c10_fv),
    Criterion(11, "hepp", "spin-chain decoherence", 30, c11_hepp),
    Criterion(12, "qlattice", "projector lattice laws", 30, c12_qlattice),
    Criterion(13, "presheaf", "sections versus colorings", 60, c13_presheaf),
]

GROUPS = sorted({c.group for c in CRITERIA})


def data_check(where: Path | None = None) -> CheckReport:
    where = where or data_dir()
    rep = CheckReport("data files")
    for name in DATA_FILES:
        rep.add(f"{name} present", (where / name).is_file(), str(where / name))
    return rep


def run_criterion(c: Criterion, seed: int = 42, where: Path | None = None) -> tuple[CheckReport, float]:
    t0 = time.perf_counter()
    try:
        rep = c.run(seed, where)
    except Exception as exc:  # a crash is a failed criterion, not an aborted run
        rep = CheckReport(c.title)
        rep.add("completed", False, f"{type(exc).__name__}: {exc}")
    elapsed = time.perf_counter() - t0
    rep.add("runtime within budget", elapsed < c.budget_s, round(elapsed, 3), c.budget_s)
    return rep, elapsed


def run_acceptance(suite: str = "all", seed: int = 42, where: Path | None = None,
                   progress: Callable | None = None) -> CheckReport:
    """Run every criterion (or one group) and collect the checks under 'C<n> ' prefixes."""
    if suite != "all" and suite not in GROUPS:
        raise ValueError(f"unknown suite {suite!r}; choose all or one of {', '.join(GROUPS)}")
    out = CheckReport(f"acceptance {suite}")
    out.extend(data_check(where), "data: ")
    for c in CRITERIA:
        if suite != "all" and c.group != suite:
            continue
        rep, elapsed = run_criterion(c, seed, where)
        out.extend(rep, f"C{c.number} ")
        if progress:
            progress(c, rep, elapsed)
    return out
