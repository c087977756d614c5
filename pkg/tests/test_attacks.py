import random

import pytest

from reqspec.attacks import (
    RECIPES,
    AttackConfig,
    AttackOutcome,
    evaluate_defense,
    load_thesaurus,
    rank_word_importance,
    run_attack,
    transform_word,
    validator_victim,
)
from reqspec.errors import EmptyDataset, NoCandidates
from reqspec.knowledge import load_seed_knowledge
from reqspec.shield import NGramLM, train_shield
from reqspec.validator import Validator

EXPECTED_RECIPES = {
    "A2T": ("leave_one_out", "synonym_replace"),
    "BAE": ("none", "lm_replace"),
    "BertAttack": ("leave_one_out", "lm_replace"),
    "InputReduction": ("leave_one_out", "word_remove"),
    "Pruthi": ("none", "char_perturb"),
    "PSO": ("none", "synonym_replace"),
    "PWWS": ("score_based", "synonym_replace"),
    "TextBugger": ("leave_one_out", "char_perturb"),
    "TextFooler": ("leave_one_out", "synonym_replace"),
    "DeepWordBug": ("score_based", "char_perturb"),
    "CheckList": ("none", "no_op"),
    "CLARE": ("none", "insert_merge"),
}


@pytest.fixture(scope="module")
def trained():
    kb = load_seed_knowledge()
    validator = Validator(seed=0).fit(kb)
    shield = train_shield(kb, seed=0)
    return kb, validator, shield


def keyword_victim(phrase):
    # toy victim: class is decided by the presence of one keyword
    return ("bad" if "bad" in phrase.split() else "good"), 0.9


class TestConfig:
    def test_recipe_table_is_fixed(self):
        assert RECIPES == EXPECTED_RECIPES

    def test_ranking_transform_properties(self):
        cfg = AttackConfig("DeepWordBug")
        assert cfg.ranking == "score_based"
        assert cfg.transform == "char_perturb"

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            AttackConfig("GradientAttack")

    def test_negative_budget(self):
        with pytest.raises(ValueError):
            AttackConfig("Pruthi", query_budget=-1)

    def test_unlimited_budget_default(self):
        assert AttackConfig("Pruthi").query_budget is None

    def test_outcome_invariant(self):
        with pytest.raises(ValueError):
            AttackOutcome("a", "b", "time", "time", 1, success=True)
        with pytest.raises(ValueError):
            AttackOutcome("a", "b", "time", "entity", 1, success=False)


class TestRanking:
    def test_single_token_first(self):
        assert rank_word_importance(["only"], keyword_victim) == [0]

    def test_none_is_identity(self):
        tokens = "one two three".split()
        assert rank_word_importance(tokens, keyword_victim, "none") == [0, 1, 2]

    def test_flipping_token_ranked_first(self):
        # brute force: removing "bad" flips the class, other removals do nothing
        tokens = "the weather is bad today".split()
        order = rank_word_importance(tokens, keyword_victim, "leave_one_out")
        assert order[0] == tokens.index("bad")

    def test_score_based_needs_lm(self):
        with pytest.raises(ValueError):
            rank_word_importance(["a", "b"], keyword_victim, "score_based")

    def test_score_based_prefers_rare_words(self):
        lm = NGramLM(order=3).fit(
            [["every", "day"], ["every", "night"], ["every", "morning"]]
        )
        order = rank_word_importance(["every", "zzzz"], keyword_victim, "score_based", lm)
        assert order[0] == 1

    def test_empty_tokens(self):
        with pytest.raises(ValueError):
            rank_word_importance([], keyword_victim)

    def test_unknown_ranking(self):
        with pytest.raises(ValueError):
            rank_word_importance(["a"], keyword_victim, "gradient")


class TestTransform:
    def test_char_perturb_adjacent_swap(self):
        candidates = transform_word("standing", "char_perturb", random.Random(0))
        assert "stnading" in candidates or any(
            len(c) == len("standing") for c in candidates
        )

    def test_char_perturb_homoglyphs(self):
        candidates = transform_word("stop", "char_perturb", random.Random(0), limit=50)
        assert "st0p" in candidates

    def test_char_perturb_excludes_original(self):
        assert "stop" not in transform_word("stop", "char_perturb", random.Random(0), limit=50)

    def test_synonym_from_thesaurus(self):
        thesaurus = load_thesaurus()
        assert "tiers" in transform_word(
            "levels", "synonym_replace", random.Random(0), thesaurus=thesaurus
        )

    def test_synonym_missing(self):
        with pytest.raises(NoCandidates):
            transform_word(
                "xylophone", "synonym_replace", random.Random(0), thesaurus={}
            )

    def test_word_remove(self):
        assert transform_word("solar", "word_remove", random.Random(0)) == [""]

    def test_lm_replace_in_vocabulary(self):
        lm = NGramLM(order=3).fit([["every", "day"], ["every", "night"]])
        candidates = transform_word("morning", "lm_replace", random.Random(0), lm=lm)
        assert candidates
        assert set(candidates) <= {"every", "day", "night"}

    def test_no_op_yields_nothing(self):
        assert transform_word("word", "no_op", random.Random(0)) == []

    def test_empty_word(self):
        with pytest.raises(ValueError):
            transform_word("", "char_perturb", random.Random(0))

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            transform_word("word", "bit_flip", random.Random(0))


class TestRunAttack:
    def test_empty_dataset(self):
        with pytest.raises(EmptyDataset):
            run_attack(AttackConfig("Pruthi"), [], keyword_victim)

    def test_constant_victim_never_flips(self):
        victim = lambda phrase: ("time", 1.0)
        report = run_attack(
            AttackConfig("Pruthi"), [("every day", "time")], victim
        )
        assert report.success_rate == 0.0

    def test_zero_budget_is_a_no_op(self, trained):
        _, validator, _ = trained
        victim = validator_victim(validator)
        report = run_attack(
            AttackConfig("Pruthi", query_budget=0), [("every day", "time")], victim
        )
        outcome = report.outcomes[0]
        assert not outcome.success
        assert outcome.perturbed == outcome.original
        assert outcome.queries_used == 0

    def test_checklist_is_no_op(self, trained):
        kb, validator, _ = trained
        victim = validator_victim(validator)
        dataset = [(e.phrase, e.category) for e in kb.vocabulary[:20]]
        report = run_attack(AttackConfig("CheckList"), dataset, victim)
        assert report.success_rate == 0.0
        assert all(o.perturbed == o.original for o in report.outcomes)

    def test_success_definition_holds_on_requery(self, trained):
        kb, validator, shield = trained
        victim = validator_victim(validator)
        dataset = [(e.phrase, e.category) for e in kb.vocabulary[:30]]
        report = run_attack(
            AttackConfig("DeepWordBug"), dataset, victim, lm=shield.lm
        )
        assert report.success_rate > 0
        for outcome in report.outcomes:
            before, _ = victim(outcome.original)
            after, _ = victim(outcome.perturbed)
            assert outcome.victim_before == before
            assert outcome.victim_after == after
            assert outcome.success == (after != before)

    def test_deterministic(self, trained):
        kb, validator, shield = trained
        victim = validator_victim(validator)
        dataset = [(e.phrase, e.category) for e in kb.vocabulary[:15]]
        cfg = AttackConfig("TextBugger", seed=5)
        a = run_attack(cfg, dataset, victim, lm=shield.lm)
        b = run_attack(cfg, dataset, victim, lm=shield.lm)
        assert a == b

    def test_char_attack_beats_unshielded_validator(self, trained):
        kb, validator, shield = trained
        victim = validator_victim(validator)
        dataset = [(e.phrase, e.category) for e in kb.vocabulary[:100]]
        report = run_attack(
            AttackConfig("DeepWordBug"), dataset, victim, lm=shield.lm
        )
        assert report.success_rate > 0.5


class TestDefense:
    def test_char_attacks_blocked_and_fpr_low(self, trained):
        kb, validator, shield = trained
        victim = validator_victim(validator)
        thesaurus = load_thesaurus()
        dataset = [(e.phrase, e.category) for e in kb.vocabulary[:50]]
        benign = [e.phrase for e in kb.vocabulary]
        configs = [AttackConfig(n) for n in ("DeepWordBug", "Pruthi", "TextBugger")]
        report = evaluate_defense(
            configs, shield, victim, dataset, benign, thesaurus=thesaurus, lm=shield.lm
        )
        for name in ("DeepWordBug", "Pruthi", "TextBugger"):
            stats = report.per_attack[name]
            assert stats["shielded_success_rate"] <= 0.05
            # shield monotonicity
            assert stats["shielded_success_rate"] <= stats["success_rate"]
        assert report.benign_false_positive_rate <= 0.05

    def test_monotonicity_across_all_recipes(self, trained):
        kb, validator, shield = trained
        victim = validator_victim(validator)
        thesaurus = load_thesaurus()
        dataset = [(e.phrase, e.category) for e in kb.vocabulary[:25]]
        configs = [AttackConfig(name) for name in RECIPES]
        report = evaluate_defense(
            configs, shield, victim, dataset, [], thesaurus=thesaurus, lm=shield.lm
        )
        assert set(report.per_attack) == set(RECIPES)
        for stats in report.per_attack.values():
            assert stats["shielded_success_rate"] <= stats["success_rate"]
        assert report.per_attack["CheckList"]["success_rate"] == 0.0

    def test_empty_attack_list_reports_fpr_only(self, trained):
        kb, _, shield = trained
        benign = [e.phrase for e in kb.vocabulary[:30]]
        report = evaluate_defense([], shield, keyword_victim, [("x", "time")], benign)
        assert report.per_attack == {}
        assert 0.0 <= report.benign_false_positive_rate <= 0.05
