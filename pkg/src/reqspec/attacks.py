"""Adversarial attack harness against phrase classifiers.

Twelve named recipes pair a word-importance ranking with a word
transformation strategy.  An attack greedily perturbs the highest-ranked
words of each input and counts a success when the victim's class flips.
``evaluate_defense`` replays the same attacks through the shield to measure
how much of the success rate survives, plus the benign false-positive rate.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import EmptyDataset, NoCandidates
from .shield import NGramLM, Shield
from .validator import Validator

UNLIMITED: Optional[int] = None

RANKINGS = ("none", "leave_one_out", "score_based")
TRANSFORMS = ("char_perturb", "synonym_replace", "word_remove", "insert_merge", "lm_replace", "no_op")

# recipe -> (word importance ranking, word transformation strategy)
RECIPES: Dict[str, Tuple[str, str]] = {
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

_HOMOGLYPHS = {"o": "0", "0": "o", "l": "1", "1": "l", "e": "3", "3": "e"}

# victim protocol: phrase -> (category, confidence)
Victim = Callable[[str], Tuple[str, float]]


@dataclass(frozen=True)
class AttackConfig:
    name: str
    query_budget: Optional[int] = UNLIMITED
    seed: int = 0

    def __post_init__(self):
        if self.name not in RECIPES:
            raise ValueError(f"unknown attack {self.name!r}")
        if self.query_budget is not UNLIMITED and self.query_budget < 0:
            raise ValueError("query_budget must be >= 0 or UNLIMITED")

    @property
    def ranking(self) -> str:
        return RECIPES[self.name][0]

    @property
    def transform(self) -> str:
        return RECIPES[self.name][1]


@dataclass(frozen=True)
class AttackOutcome:
    original: str
    perturbed: str
    victim_before: str
    victim_after: str
    queries_used: int
    success: bool

    def __post_init__(self):
        if self.success != (self.victim_after != self.victim_before):
            raise ValueError("success must equal (victim_after != victim_before)")


@dataclass(frozen=True)
class AttackReport:
    config: AttackConfig
    outcomes: Tuple[AttackOutcome, ...]
    success_rate: float


def validator_victim(validator: Validator) -> Victim:
    """Adapt a trained validator into the (category, confidence) protocol."""

    def victim(phrase: str) -> Tuple[str, float]:
        key, uncertainty = validator.classify_with_uncertainty(phrase)
        return key, 1.0 - uncertainty

    return victim


def load_thesaurus(path: Optional[Path] = None) -> Dict[str, List[str]]:
    if path is None:
        path = Path(__file__).parent / "data" / "thesaurus.tsv"
    table: Dict[str, List[str]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        word, synonym = line.split("\t")
        table.setdefault(word, []).append(synonym)
        table.setdefault(synonym, []).append(word)
    return table


def rank_word_importance(
    tokens: Sequence[str],
    victim: Victim,
    ranking: str = "leave_one_out",
    lm: Optional[NGramLM] = None,
) -> List[int]:
    """Order token indices by attack priority, most important first."""
    if not tokens:
        raise ValueError("need at least one token")
    if ranking not in RANKINGS:
        raise ValueError(f"unknown ranking {ranking!r}")
    indices = list(range(len(tokens)))
    if ranking == "none" or len(tokens) == 1:
        return indices
    if ranking == "leave_one_out":
        label, confidence = victim(" ".join(tokens))
        scores = []
        for i in indices:
            rest = " ".join(t for j, t in enumerate(tokens) if j != i) or ""
            new_label, new_confidence = victim(rest) if rest else (label, confidence)
            drop = confidence - new_confidence
            if new_label != label:
                drop += 1.0  # class flips dominate confidence changes
            scores.append(drop)
        return sorted(indices, key=lambda i: (-scores[i], i))
    # score_based: n-gram surprisal heuristic, rarest-in-context first
    if lm is None:
        raise ValueError("score_based ranking needs a language model")
    context = ["<s>"] * (lm.order - 1)
    scores = []
    for token in tokens:
        scores.append(-lm.logprob(token.lower(), context))
        context.append(token.lower())
    return sorted(indices, key=lambda i: (-scores[i], i))


def transform_word(
    word: str,
    strategy: str,
    rng: random.Random,
    thesaurus: Optional[Dict[str, List[str]]] = None,
    lm: Optional[NGramLM] = None,
    limit: int = 10,
) -> List[str]:
    """Candidate replacements for one word under a transformation strategy."""
    if not word:
        raise ValueError("word must be non-empty")
    if strategy not in TRANSFORMS:
        raise ValueError(f"unknown transform {strategy!r}")
    if strategy == "no_op":
        return []
    if strategy == "word_remove":
        return [""]
    if strategy == "synonym_replace":
        if thesaurus is None:
            raise NoCandidates("no thesaurus supplied")
        candidates = [c for c in thesaurus.get(word.lower(), []) if c != word]
        if not candidates:
            raise NoCandidates(f"no synonym for {word!r}")
        return candidates[:limit]
    if strategy == "lm_replace":
        if lm is None:
            raise NoCandidates("no language model supplied")
        words = [w for w in lm.vocabulary if w != word.lower() and w != "<s>"]
        if not words:
            raise NoCandidates("language model vocabulary is empty")
        context = ["<s>"] * (lm.order - 1)
        words.sort(key=lambda w: (-lm.logprob(w, context), w))
        return words[:limit]
    if strategy == "insert_merge":
        # neighbor-word insertion (duplicate or common filler) and merges
        # with neighbours happen at substitution time in run_attack
        return [f"{word} {word}", f"the {word}", f"{word} the"][:limit]
    # char_perturb: swaps, deletes, inserts, homoglyphs, case flips
    letters = "abcdefghijklmnopqrstuvwxyz"
    candidates = []
    for i in range(len(word) - 1):
        candidates.append(word[:i] + word[i + 1] + word[i] + word[i + 2:])
    if len(word) > 1:
        for i in range(len(word)):
            candidates.append(word[:i] + word[i + 1:])
    for _ in range(3):
        i = rng.randrange(len(word) + 1)
        candidates.append(word[:i] + rng.choice(letters) + word[i:])
    for i, ch in enumerate(word):
        if ch.lower() in _HOMOGLYPHS:
            candidates.append(word[:i] + _HOMOGLYPHS[ch.lower()] + word[i + 1:])
        if ch.isalpha():
            candidates.append(word[:i] + ch.swapcase() + word[i + 1:])
    unique = [c for c in dict.fromkeys(candidates) if c != word]
    if not unique:
        raise NoCandidates(f"no perturbation for {word!r}")
    return unique[:limit]


def _merge_candidates(tokens: Sequence[str], i: int) -> List[str]:
    phrases = []
    if i + 1 < len(tokens):
        merged = list(tokens)
        merged[i] = tokens[i] + tokens[i + 1]
        del merged[i + 1]
        phrases.append(" ".join(merged))
    return phrases


def _attack_one(
    cfg: AttackConfig,
    phrase: str,
    victim: Victim,
    rng: random.Random,
    thesaurus: Optional[Dict[str, List[str]]],
    lm: Optional[NGramLM],
) -> AttackOutcome:
    label, confidence = victim(phrase)
    budget = cfg.query_budget
    queries = 0

    def query(text: str) -> Optional[Tuple[str, float]]:
        nonlocal queries
        if budget is not UNLIMITED and queries >= budget:
            return None
        queries += 1
        return victim(text)

    tokens = phrase.split()
    if cfg.transform == "no_op" or not tokens:
        return AttackOutcome(phrase, phrase, label, label, 0, False)

    counting_victim = lambda text: query(text) or (label, confidence)
    if cfg.ranking == "none":
        order = list(range(len(tokens)))
    else:
        order = rank_word_importance(tokens, counting_victim, cfg.ranking, lm)

    # removed words become "" placeholders so ranked indices stay valid
    current = list(tokens)
    current_confidence = confidence
    for i in order:
        if i >= len(current) or not current[i]:
            continue
        try:
            candidates = transform_word(
                current[i], cfg.transform, rng, thesaurus=thesaurus, lm=lm
            )
        except NoCandidates:
            continue
        phrases = []
        for cand in candidates:
            replaced = list(current)
            replaced[i] = cand
            text = " ".join(w for w in replaced if w)
            if text and text != phrase:
                phrases.append((text, replaced))
        if cfg.transform == "insert_merge":
            for p in _merge_candidates([w for w in current if w], i):
                if p != phrase:
                    phrases.append((p, p.split()))
        best = None
        for text, replaced in phrases:
            result = query(text)
            if result is None:
                break  # budget exhausted
            new_label, new_confidence = result
            if new_label != label:
                return AttackOutcome(phrase, text, label, new_label, queries, True)
            if best is None or new_confidence < best[2]:
                best = (text, replaced, new_confidence)
        if best is not None and best[2] < current_confidence:
            current, current_confidence = best[1], best[2]
        if budget is not UNLIMITED and queries >= budget:
            break
    perturbed = " ".join(w for w in current if w) or phrase
    if budget == 0:
        perturbed = phrase
    return AttackOutcome(phrase, perturbed, label, label, queries, False)


def run_attack(
    cfg: AttackConfig,
    dataset: Sequence[Tuple[str, str]],
    victim: Victim,
    thesaurus: Optional[Dict[str, List[str]]] = None,
    lm: Optional[NGramLM] = None,
) -> AttackReport:
    """Attack every dataset phrase; deterministic for a given cfg and victim."""
    if not dataset:
        raise EmptyDataset("attack dataset is empty")
    rng = random.Random(cfg.seed)
    outcomes = tuple(
        _attack_one(cfg, phrase, victim, rng, thesaurus, lm) for phrase, _ in dataset
    )
    success_rate = sum(o.success for o in outcomes) / len(outcomes)
    return AttackReport(cfg, outcomes, success_rate)


@dataclass(frozen=True)
class DefenseReport:
    per_attack: Dict[str, Dict[str, float]] = field(default_factory=dict)
    benign_false_positive_rate: float = 0.0


def evaluate_defense(
    attacks: Sequence[AttackConfig],
    shield: Shield,
    victim: Victim,
    dataset: Sequence[Tuple[str, str]],
    benign_set: Sequence[str],
    thesaurus: Optional[Dict[str, List[str]]] = None,
    lm: Optional[NGramLM] = None,
) -> DefenseReport:
    """Success rates with and without the shield, plus the benign FPR.

    With the shield in front, a perturbed input only counts as a success if
    the shield passes it AND the victim still flips.
    """
    per_attack: Dict[str, Dict[str, float]] = {}
    for cfg in attacks:
        report = run_attack(cfg, dataset, victim, thesaurus=thesaurus, lm=lm)
        shielded = [
            o
            for o in report.outcomes
            if o.success and not shield.shield_check(o.perturbed).malicious
        ]
        per_attack[cfg.name] = {
            "success_rate": report.success_rate,
            "shielded_success_rate": len(shielded) / len(report.outcomes),
        }
    flagged = sum(shield.shield_check(p).malicious for p in benign_set)
    fpr = flagged / len(benign_set) if benign_set else 0.0
    return DefenseReport(per_attack=per_attack, benign_false_positive_rate=fpr)
