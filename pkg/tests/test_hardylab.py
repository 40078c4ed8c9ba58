import math
from fractions import Fraction

import pytest

from qfound.hardylab import (
    CONFIGS,
    GAMMA,
    ApparatusConfig,
    ConfigUnsupported,
    Surd,
    channel_probabilities,
    coincidence_probability,
    hardy_report,
    lhv_search,
    run_scenario,
    run_scenario_float,
    run_stages,
    single_interferometer,
)

r2 = math.sqrt(2)

FINAL = {
    (False, False): {GAMMA: -0.5, ("c", "d"): 0.5j, ("d", "c"): 0.5j, ("d", "d"): 0.5},
    (True, False): {GAMMA: -0.5, ("c", "d"): 1j / r2, ("d", "c"): 1j / (2 * r2), ("c", "c"): -1 / (2 * r2)},
    (False, True): {GAMMA: -0.5, ("d", "c"): 1j / r2, ("c", "d"): 1j / (2 * r2), ("c", "c"): -1 / (2 * r2)},
    (True, True): {GAMMA: -0.5, ("d", "c"): 0.25j, ("c", "d"): 0.25j, ("c", "c"): -0.75, ("d", "d"): -0.25},
}


@pytest.mark.parametrize("flags", list(FINAL))
def test_final_amplitudes(flags):
    got = run_scenario(ApparatusConfig(*flags)).numeric()
    want = FINAL[flags]
    assert set(got) == set(want)
    for k, v in want.items():
        assert abs(got[k] - v) <= 1e-12


def test_neither_has_no_bright_coincidence():
    assert run_scenario(ApparatusConfig(False, False)).get(("c", "c")) == Surd()


def test_dark_coincidence_exact():
    assert coincidence_probability(ApparatusConfig(True, True)) == Fraction(1, 16)


def test_other_configs_flagged():
    with pytest.warns(ConfigUnsupported):
        p = coincidence_probability(ApparatusConfig(False, False))
    assert p == Fraction(1, 4)


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: c.label)
def test_every_stage_normalised(cfg):
    for st in run_stages(cfg):
        assert st.total() == 1
    assert sum(channel_probabilities(cfg).values()) == 1


@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: c.label)
def test_exact_and_float_agree(cfg):
    exact = run_scenario(cfg).numeric()
    flt = run_scenario_float(cfg)
    for k in set(exact) | set(flt):
        assert abs(exact.get(k, 0) - flt.get(k, 0)) <= 1e-12


def test_mirror_symmetry():
    plus = run_scenario(ApparatusConfig(True, False)).numeric()
    minus = run_scenario(ApparatusConfig(False, True)).numeric()
    swapped = {(k if k == GAMMA else (k[1], k[0])): v for k, v in plus.items()}
    assert swapped.keys() == minus.keys()
    assert all(abs(swapped[k] - minus[k]) < 1e-15 for k in minus)


def test_single_interferometer_is_bright():
    out = single_interferometer()
    assert set(out) == {"c"}
    assert complex(out["c"]) == pytest.approx(1j)


def test_lhv_search():
    feasible, contradiction = lhv_search()
    assert (0, 0, 0, 0) in feasible
    assert (1, 1, 1, 1) not in feasible
    assert contradiction
    assert not any(dp and dm for *_, dp, dm in feasible)


def test_surd_arithmetic():
    s = Surd.sqrt2()
    assert (s * s).to_fraction() == 2
    assert (Surd.i() * Surd.i()).to_fraction() == -1
    assert Surd(1).halve().to_fraction() == Fraction(1, 2)
    with pytest.raises(ValueError):
        s.to_fraction()


def test_report_passes():
    assert hardy_report().ok
