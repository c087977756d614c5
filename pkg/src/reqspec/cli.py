"""Operator command line: synthesis, training, translation, attacks, serving.

Exit codes: 0 success, 1 validation/data errors, 2 usage errors.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import sastl
from .attacks import (
    RECIPES,
    AttackConfig,
    evaluate_defense,
    load_thesaurus,
    run_attack,
    validator_victim,
)
from .errors import ReqspecError
from .knowledge import (
    knowledge_stats,
    load_knowledge,
    load_seed_knowledge,
    save_knowledge,
    VocabularyEntry,
)
from .online import OnlineLearner
from .shield import train_shield
from .synthesis import SynthesisConfig, synthesize
from .tagger import evaluate_tagger, load_model, save_model, tag, train_tagger
from .translator import translate
from .validator import Validator


def _load_kb(path):
    return load_knowledge(Path(path)) if path else load_seed_knowledge()


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _guard(fn):
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ReqspecError as exc:
            _fail(str(exc))

    wrapper.__name__ = fn.__name__
    return wrapper


@click.group()
def main() -> None:
    """English city requirements to SaSTL formal specifications."""


kb_option = click.option("--kb", type=click.Path(exists=True), default=None,
                         help="Knowledge base directory (default: bundled seed).")
json_option = click.option("--json", "as_json", is_flag=True, help="JSON output.")


@main.command()
@click.option("--lambda", "lambda_", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@kb_option
@_guard
def synth(lambda_, seed, out, kb) -> None:
    """Synthesize annotated requirements from patterns and vocabulary."""
    base = _load_kb(kb)
    vocabs = {k: v for k, v in base.vocab_by_category().items() if v}
    reqs = synthesize(vocabs, base.patterns, SynthesisConfig(lambda_=lambda_, seed=seed))
    with open(out, "w", encoding="utf-8") as fh:
        for req in reqs:
            fh.write(json.dumps({
                "text": req.text,
                "spans": [{"start": s.start, "end": s.end, "key": s.key} for s in req.spans],
            }, ensure_ascii=False) + "\n")
    click.echo(f"wrote {len(reqs)} requirements to {out}")


@main.command()
@click.option("--out", type=click.Path(), required=True)
@click.option("--epochs", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--synth-lambda", type=int, default=1, show_default=True,
              help="Augment the corpus with synthesized requirements.")
@kb_option
@_guard
def train(out, epochs, seed, synth_lambda, kb) -> None:
    """Train the slot tagger and save the model."""
    base = _load_kb(kb)
    corpus = list(base.corpus)
    if synth_lambda > 0:
        vocabs = {k: v for k, v in base.vocab_by_category().items() if v}
        corpus += synthesize(vocabs, base.patterns,
                             SynthesisConfig(lambda_=synth_lambda, seed=seed))
    model = train_tagger(corpus, base, epochs=epochs, seed=seed)
    save_model(model, out)
    click.echo(f"trained on {len(corpus)} requirements; model saved to {out}")


@main.command("tag")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.argument("text")
@json_option
@_guard
def tag_command(model_path, text, as_json) -> None:
    """Tag one requirement and show the extracted slots."""
    model = load_model(model_path)
    result = translate(text, model)
    rows = [
        {"key": key, "text": slot.text, "status": slot.status}
        for key, slot in result.slots.items()
    ]
    if as_json:
        click.echo(json.dumps({"tags": tag(model, text).tags, "slots": rows}))
    else:
        for row in rows:
            click.echo(f"{row['key']:<12}{row['status']:<12}{row['text']}")


@main.command("translate")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.argument("text")
@json_option
@_guard
def translate_command(model_path, text, as_json) -> None:
    """Translate one requirement to a formula (or show open queries)."""
    model = load_model(model_path)
    result = translate(text, model)
    formula = sastl.render_formula(result.formula) if result.formula else None
    if as_json:
        click.echo(json.dumps({
            "formula": formula,
            "template": result.template,
            "queries": list(result.queries),
        }))
    elif result.queries:
        for query in result.queries:
            click.echo(query)
    else:
        click.echo(formula)
        click.echo(result.template)


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epochs", type=int, default=8, show_default=True)
@kb_option
@_guard
def chat(seed, epochs, kb) -> None:
    """Interactive dialogue in the terminal (same protocol as the service)."""
    base = _load_kb(kb)
    click.echo("training models, one moment...")
    learner = OnlineLearner.bootstrap(base, seed=seed, epochs=epochs)
    cache = learner.open_session()
    answers = {}
    requirement = None
    click.echo("enter a requirement (empty line to quit)")
    while True:
        text = click.prompt(">", default="", show_default=False).strip()
        if not text:
            break
        if requirement is None:
            requirement = text
        else:
            result = translate(requirement, learner.model, cache, answers)
            open_keys = [k for k in ("entity", "quantifier", "location", "condition", "time")
                         if result.queries and k in result.queries[0]]
            key = open_keys[0] if open_keys else None
            if key is not None:
                ingest = learner.ingest_clarification(cache.session_id, text, key)
                if not ingest.cached:
                    click.echo("that answer was rejected by the input filter")
                else:
                    answers[key] = text
        result = translate(requirement, learner.model, cache, answers)
        if result.queries:
            click.echo(result.queries[0])
        else:
            click.echo(f"formula:  {sastl.render_formula(result.formula)}")
            click.echo(f"sentence: {result.template}")
            requirement, answers = None, {}
            click.echo("enter a requirement (empty line to quit)")


@main.command("eval")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True,
              help="Directory containing corpus.jsonl (and optional vocabulary).")
@json_option
@_guard
def eval_command(model_path, corpus_path, as_json) -> None:
    """Evaluate a tagger model on an annotated corpus."""
    model = load_model(model_path)
    corpus = load_knowledge(Path(corpus_path)).corpus
    metrics = evaluate_tagger(model, corpus)
    values = {
        "token-acc": metrics.token_acc,
        "sent-acc": metrics.sent_acc,
        "precision": metrics.precision,
        "recall": metrics.recall,
        "f1": metrics.f1,
    }
    if as_json:
        click.echo(json.dumps({**values, "per_key_f1": metrics.per_key_f1}))
    else:
        for name, value in values.items():
            click.echo(f"{name:<12}{value:.4f}")


@main.command()
@click.option("--name", type=click.Choice(sorted(RECIPES)), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--limit", type=int, default=50, show_default=True,
              help="Number of KB phrases to attack.")
@json_option
@kb_option
@_guard
def attack(name, seed, limit, as_json, kb) -> None:
    """Run one attack recipe against the unshielded validator."""
    base = _load_kb(kb)
    validator = Validator(seed=seed).fit(base)
    shield = train_shield(base, seed=seed)
    dataset = [(e.phrase, e.category) for e in base.vocabulary[:limit]]
    report = run_attack(AttackConfig(name, seed=seed), dataset,
                        validator_victim(validator),
                        thesaurus=load_thesaurus(), lm=shield.lm)
    if as_json:
        click.echo(json.dumps({
            "name": name,
            "success_rate": report.success_rate,
            "outcomes": [
                {"original": o.original, "perturbed": o.perturbed,
                 "before": o.victim_before, "after": o.victim_after,
                 "queries": o.queries_used, "success": o.success}
                for o in report.outcomes
            ],
        }))
    else:
        click.echo(f"{name}: success rate {report.success_rate:.2%} "
                   f"over {len(report.outcomes)} phrases")


@main.command("defense-eval")
@click.option("--names", default=None,
              help="Comma-separated recipes (default: all twelve).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--limit", type=int, default=25, show_default=True)
@json_option
@kb_option
@_guard
def defense_eval(names, seed, limit, as_json, kb) -> None:
    """Success rates with and without the shield, plus benign FPR."""
    base = _load_kb(kb)
    validator = Validator(seed=seed).fit(base)
    shield = train_shield(base, seed=seed)
    wanted = names.split(",") if names else sorted(RECIPES)
    for name in wanted:
        if name not in RECIPES:
            _fail(f"unknown attack {name!r}")
    configs = [AttackConfig(n, seed=seed) for n in wanted]
    dataset = [(e.phrase, e.category) for e in base.vocabulary[:limit]]
    benign = [e.phrase for e in base.vocabulary]
    report = evaluate_defense(configs, shield, validator_victim(validator),
                              dataset, benign, thesaurus=load_thesaurus(),
                              lm=shield.lm)
    if as_json:
        click.echo(json.dumps({
            "per_attack": report.per_attack,
            "benign_false_positive_rate": report.benign_false_positive_rate,
        }))
    else:
        click.echo(f"{'attack':<16}{'SR':>8}{'SR+shield':>12}")
        for name in wanted:
            stats = report.per_attack[name]
            click.echo(f"{name:<16}{stats['success_rate']:>8.2%}"
                       f"{stats['shielded_success_rate']:>12.2%}")
        click.echo(f"benign FPR: {report.benign_false_positive_rate:.2%}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@_guard
def serve(config_path) -> None:
    """Start the HTTP service."""
    import uvicorn

    from .service import ServiceConfig, build_learner, create_app

    config = ServiceConfig.load(Path(config_path) if config_path else None)
    app = create_app(build_learner(config), config)
    uvicorn.run(app, host=config.host, port=config.port)


@main.group("kb")
def kb_group() -> None:
    """Knowledge-base inspection and import."""


@kb_group.command()
@json_option
@kb_option
@_guard
def stats(as_json, kb) -> None:
    """Show vocabulary, pattern, and corpus counts."""
    counts = knowledge_stats(_load_kb(kb))
    if as_json:
        click.echo(json.dumps(counts))
    else:
        for name, value in counts.items():
            click.echo(f"{name:<14}{value}")


@kb_group.command("import")
@click.option("--vocab", "vocab_path", type=click.Path(exists=True), required=True,
              help="TSV file: category<TAB>phrase per line.")
@click.option("--out", type=click.Path(), required=True,
              help="Knowledge base directory to write.")
@kb_option
@_guard
def import_command(vocab_path, out, kb) -> None:
    """Merge vocabulary entries into a knowledge base."""
    base = _load_kb(kb)
    added = 0
    for lineno, line in enumerate(
        Path(vocab_path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            _fail(f"{vocab_path}:{lineno}: expected category<TAB>phrase")
        try:
            entry = VocabularyEntry(fields[0], fields[1], provenance="online")
        except ValueError as exc:
            _fail(f"{vocab_path}:{lineno}: {exc}")
        grown = base.add_vocabulary(entry)
        if grown is not base:
            added += 1
        base = grown
    save_knowledge(base, out)
    click.echo(f"imported {added} entries into {out}")


if __name__ == "__main__":
    main()
