import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reqspec.errors import UntrainedDiscriminator
from reqspec.knowledge import load_seed_knowledge
from reqspec.shield import (
    EMBED_DIM,
    NGramLM,
    ShieldVerdict,
    FilterResult,
    damerau_levenshtein,
    embed_phrase,
    inferential_mapping,
    literal_correction,
    perturb_phrase,
    train_shield,
)

WORDS = st.text(alphabet="abcdef01", min_size=0, max_size=8)


class TestDamerauLevenshtein:
    def test_identity(self):
        assert damerau_levenshtein("abc", "abc") == 0

    def test_kitten(self):
        assert damerau_levenshtein("kitten", "sitting") == 3

    def test_transposition(self):
        assert damerau_levenshtein("ab", "ba") == 1

    def test_unrestricted_edit(self):
        # the restricted (OSA) variant gives 3 here; the true metric gives 2
        assert damerau_levenshtein("ca", "abc") == 2

    def test_leet_case_examples(self):
        assert damerau_levenshtein("m0rninGs", "mornings") == 2
        assert damerau_levenshtein("tr1anGl3s", "triangles") == 3

    @settings(max_examples=200, deadline=None)
    @given(WORDS, WORDS)
    def test_symmetry_and_identity(self, a, b):
        d = damerau_levenshtein(a, b)
        assert d == damerau_levenshtein(b, a)
        assert (d == 0) == (a == b)

    @settings(max_examples=200, deadline=None)
    @given(WORDS, WORDS, WORDS)
    def test_triangle_inequality(self, a, b, c):
        assert damerau_levenshtein(a, c) <= (
            damerau_levenshtein(a, b) + damerau_levenshtein(b, c)
        )


def toy_lm():
    lm = NGramLM(order=3)
    lm.fit(
        [
            ["in", "the", "mornings"],
            ["in", "the", "evenings"],
            ["on", "the", "campus"],
            ["near", "the", "triangles"],
        ]
    )
    return lm


class TestLiteralCorrection:
    def test_leet_morning_corrected(self):
        result = literal_correction("in the m0rninGs", toy_lm(), budget=2)
        assert result.triggered
        assert result.corrected == "in the mornings"

    def test_clean_phrase_untouched(self):
        result = literal_correction("in the mornings", toy_lm(), budget=2)
        assert not result.triggered
        assert result.corrected == "in the mornings"

    def test_triangles_uncorrectable(self):
        # three case-sensitive edits exceed the budget of 2
        result = literal_correction("tr1anGl3s", toy_lm(), budget=2)
        assert result.triggered
        assert result.corrected == "tr1anGl3s"

    def test_context_breaks_ties(self):
        # "evenigns" is 1 transposition from "evenings"
        result = literal_correction("in the evenigns", toy_lm(), budget=2)
        assert result.corrected == "in the evenings"

    def test_negative_budget_rejected(self):
        with pytest.raises(ValueError):
            literal_correction("x", toy_lm(), budget=-1)


class TestEmbedding:
    def test_empty_is_zero(self):
        assert not embed_phrase("").any()

    def test_unit_norm(self):
        assert np.linalg.norm(embed_phrase("at the gates")) == pytest.approx(1.0)

    def test_deterministic(self):
        assert np.array_equal(embed_phrase("abc def"), embed_phrase("abc def"))

    def test_mask_applied(self):
        mask = np.zeros(EMBED_DIM)
        assert not embed_phrase("at the gates", mask).any()

    def test_mask_dim_checked(self):
        with pytest.raises(ValueError):
            embed_phrase("x", np.ones(5))

    def test_neighbor_phrases_closer(self):
        a = embed_phrase("at the gates")
        b = embed_phrase("at the doors")
        c = embed_phrase("on the campus")
        assert np.linalg.norm(a - b) < np.linalg.norm(a - c)


def test_inferential_requires_training():
    with pytest.raises(UntrainedDiscriminator):
        inferential_mapping(np.zeros(EMBED_DIM), None)


def test_verdict_composition_enforced():
    with pytest.raises(ValueError):
        ShieldVerdict(
            malicious=True,
            literal=FilterResult(False),
            inferential=FilterResult(False),
        )


@pytest.fixture(scope="module")
def seed_shield(tmp_path_factory):
    kb = load_seed_knowledge()
    log = tmp_path_factory.mktemp("audit") / "shield.jsonl"
    return train_shield(kb, seed=0, audit_path=log), kb, log


class TestShieldCheck:
    def test_clean_vocab_phrase_benign(self, seed_shield):
        shield, kb, _ = seed_shield
        verdict = shield.shield_check(kb.vocabulary[0].phrase)
        assert not verdict.malicious

    def test_leet_phrase_malicious(self, seed_shield):
        shield, kb, _ = seed_shield
        phrase = kb.vocabulary[0].phrase
        mangled = phrase.replace("e", "3").replace("o", "0")
        if mangled == phrase:
            mangled = phrase + "x7z"
        verdict = shield.shield_check(mangled)
        assert verdict.malicious

    def test_deterministic(self, seed_shield):
        shield, _, _ = seed_shield
        a = shield.shield_check("in the mornings")
        b = shield.shield_check("in the mornings")
        assert a == b

    def test_composition_invariant_on_calls(self, seed_shield):
        shield, kb, _ = seed_shield
        rng = random.Random(1)
        for e in kb.vocabulary[:20]:
            for phrase in (e.phrase, perturb_phrase(e.phrase, rng)):
                v = shield.shield_check(phrase)
                assert v.malicious == (v.literal.triggered or v.inferential.triggered)

    def test_false_positive_bound(self, seed_shield):
        shield, kb, _ = seed_shield
        flagged = sum(
            shield.shield_check(e.phrase).malicious for e in kb.vocabulary
        )
        assert flagged / len(kb.vocabulary) <= 0.05

    def test_audit_log_hashes_phrases(self, seed_shield):
        shield, _, log = seed_shield
        shield.shield_check("purely for the log")
        lines = [json.loads(l) for l in log.read_text().splitlines()]
        assert lines
        for record in lines:
            assert "phrase" not in record
            assert len(record["phrase_sha256"]) == 64
            assert {"malicious", "literal_triggered", "ts"} <= set(record)

    def test_debug_flag_stores_raw(self, tmp_path):
        kb = load_seed_knowledge()
        shield = train_shield(
            kb, seed=0, audit_path=tmp_path / "log.jsonl", debug=True
        )
        shield.shield_check("raw phrase here")
        record = json.loads((tmp_path / "log.jsonl").read_text().splitlines()[-1])
        assert record["phrase"] == "raw phrase here"


def test_discriminator_separates_perturbations(seed_shield=None):
    kb = load_seed_knowledge()
    shield = train_shield(kb, seed=3)
    rng = random.Random(99)
    benign = [e.phrase for e in kb.vocabulary]
    ok_benign = sum(
        not inferential_mapping(
            embed_phrase(p, shield.mask), shield.discriminator
        ).triggered
        for p in benign
    )
    assert ok_benign / len(benign) >= 0.95
    perturbed = [perturb_phrase(p, rng, n_edits=3) for p in benign]
    caught = sum(
        inferential_mapping(
            embed_phrase(p, shield.mask), shield.discriminator
        ).triggered
        for p in perturbed
    )
    assert caught / len(perturbed) >= 0.60
