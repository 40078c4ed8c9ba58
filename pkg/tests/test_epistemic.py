from fractions import Fraction

import pytest

from qfound.epistemic import (
    And,
    Atom,
    FormulaSyntaxError,
    Implies,
    KnowledgeBase,
    Knows,
    Not,
    StockEntry,
    TrustRelation,
    ablation_targets,
    coin_outcome_b_probability,
    contexts_commute,
    derive_closure,
    expected_halting_rounds,
    fr_build_kb,
    fr_quantum_probability,
    fr_quantum_probability_float,
    fr_run,
    joint_outcome_probability,
    joint_outcome_probability_float,
    milestones,
    parse_formula,
    parse_scenario,
    show,
    simulate_halting,
    validate_trace,
)

phi, psi = Atom("phi"), Atom("psi")


def test_parse_and_show_round_trip():
    f = parse_formula("K[a@1](K[b](x) -> ~y & z)")
    assert isinstance(f, Knows) and f.agent == "a@1" and f.time == 1
    assert parse_formula(show(f)) == f


@pytest.mark.parametrize("text", ["K[a](", "x ->", "~", "K a (x)", "x y"])
def test_parse_errors(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text)


def test_distribution():
    kb = KnowledgeBase()
    kb.add(Knows("A", phi))
    kb.add(Knows("A", Implies(phi, psi)))
    assert Knows("A", psi) in derive_closure(kb)


def test_trust_needs_an_edge():
    kb = KnowledgeBase(trust=TrustRelation({("A", "B")}))
    kb.add(Knows("A", Knows("B", phi)))
    assert Knows("A", phi) in derive_closure(kb)
    kb2 = KnowledgeBase()
    kb2.add(Knows("A", Knows("B", phi)))
    assert Knows("A", phi) not in derive_closure(kb2)


def test_contextual_trust_refuses_mismatched_contexts():
    kb = KnowledgeBase(trust=TrustRelation({("A", "B")}, "contextual"))
    kb.add(Knows("A", Knows("B", phi, "c2"), "c1"))
    cl = derive_closure(kb)
    assert not any(isinstance(f, Knows) and f.body == phi for f in cl.formulas)
    assert cl.refusals and cl.refusals[0].edge == ("A", "B")


def test_clash_is_flagged():
    kb = KnowledgeBase()
    kb.add(Knows("A", phi))
    kb.add(Knows("A", Not(phi)))
    assert derive_closure(kb).contradiction is not None


def test_monotone():
    kb = KnowledgeBase()
    kb.add(Knows("A", And(phi, psi)))
    small = set(derive_closure(kb).formulas)
    kb.add(Knows("A", Implies(psi, Atom("chi"))))
    assert small <= set(derive_closure(kb).formulas)


def test_generalization_only_lifts_stock():
    kb = KnowledgeBase(stock=[StockEntry("t", Implies(phi, phi), ["A", "B"])])
    cl = derive_closure(kb)
    assert Knows("B", Knows("A", Implies(phi, phi))) in cl


def test_bad_depth():
    with pytest.raises(ValueError):
        derive_closure(KnowledgeBase(), 0)


def test_kb_contains_lifted_rule():
    kb = fr_build_kb("plain")
    rule = parse_formula("K[coin_wigner@2](K[coin_wigner@2](coin_lab_ok) -> K[spin_friend@2](spin_b))")
    assert Knows("spin_wigner@3", rule) in kb.all_formulas()


def test_both_modes_announce():
    for mode in ("plain", "contextual"):
        assert [t for t, _ in fr_build_kb(mode).facts] == ["both_ok"]


def test_plain_run_contradiction():
    run = fr_run("plain", max_depth=60)
    assert run.verdict == "contradiction"
    assert len(run.trace) <= 60
    ms = milestones(run.trace)
    assert None not in ms.values()
    assert ms["friend_implication"] < ms["pre_experiment_implication"] < ms["wigner_both_outcomes"]


def test_plain_run_is_deterministic():
    a, b = fr_run("plain"), fr_run("plain")
    assert a.trace.render() == b.trace.render()


def test_trace_revalidates():
    run = fr_run("plain")
    assert validate_trace(run.trace, fr_build_kb("plain")) == []


def test_contextual_run():
    run = fr_run("contextual", max_depth=60)
    assert run.verdict == "consistent"
    assert run.blocked_edge == ("coin_wigner@2", "spin_friend@2")
    assert run.blocked_step.rule == "trust"


def test_dropping_announcement_breaks_contradiction():
    assert fr_run("plain", drop={"both_ok"}).verdict == "consistent"


@pytest.mark.parametrize("target", ablation_targets())
def test_each_ablation_removes_contradiction(target):
    assert fr_run("plain", drop={target}).verdict == "consistent"


def test_probabilities():
    assert fr_quantum_probability() == Fraction(1, 12)
    assert abs(fr_quantum_probability_float() - 1 / 12) <= 1e-12
    outcomes = [(a, b) for a in (True, False) for b in (True, False)]
    assert sum(joint_outcome_probability(a, b) for a, b in outcomes) == 1
    for a, b in outcomes:
        assert abs(joint_outcome_probability_float(a, b) - float(joint_outcome_probability(a, b))) <= 1e-12
    assert coin_outcome_b_probability() == Fraction(2, 3)


def test_halting():
    assert expected_halting_rounds() == 12
    assert expected_halting_rounds(1) == 1
    with pytest.raises(ValueError):
        expected_halting_rounds(0)
    mean, se = simulate_halting(100_000, seed=42)
    assert abs(mean - 12) <= 3 * se


def test_contexts_do_not_commute():
    assert contexts_commute() > 0.1


def test_scenario_rejects_unknown_agent():
    with pytest.raises(ValueError):
        parse_scenario("agent a\ntrust a -> b\n")
    with pytest.raises(ValueError):
        parse_scenario("bogus line\n")
