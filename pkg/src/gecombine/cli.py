"""Command-line interface.

Commands map one-to-one onto the library: extract-edits, combine, rerank,
evaluate, oracle, lm-train, train-qe, train-esc, correlate, fluency, and
dump-config. Every command accepts --config/--seed/--workers/--json, and
exit codes separate configuration problems (2), scorer failures (3), and
I/O or format problems (4).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import pickle
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from gecombine import combine as combine_mod
from gecombine import config as config_mod
from gecombine import editclf, evaluate, m2, remote, scorers, training
from gecombine.edits import edit_union, extract_edits, tokenize
from gecombine.errors import (
    FormatError,
    GecombineError,
    LengthMismatch,
    ModelNotLoaded,
    ScorerFailure,
)
from gecombine.ngram import NGramModel, train_ngram

ENDPOINT_ENV = "GECOMBINE_SCORER"


def _read_lines(path: str) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def _read_corpus(path: str) -> list[list[str]]:
    return [tokenize(line) for line in _read_lines(path)]


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _check_aligned(counts: dict[str, int]) -> None:
    lengths = set(counts.values())
    if len(lengths) > 1:
        detail = ", ".join(f"{name}: {n} lines" for name, n in sorted(counts.items()))
        raise LengthMismatch(f"corpora are misaligned ({detail})")


def _named_paths(values: list[str]) -> list[tuple[str, str]]:
    out = []
    for value in values:
        if "=" in value:
            name, path = value.split("=", 1)
        else:
            name, path = Path(value).stem, value
        out.append((name, path))
    if len({name for name, _ in out}) != len(out):
        raise ValueError("hypothesis system names must be unique")
    return out


def _load_config(args: argparse.Namespace) -> config_mod.RunConfig:
    overrides = {
        "seed": getattr(args, "seed", None),
        "workers": getattr(args, "workers", None),
        "alpha": getattr(args, "alpha", None),
        "beta": getattr(args, "beta", None),
        "beam_size": getattr(args, "beam_size", None),
        "scorer": getattr(args, "scorer", None),
        "endpoint": getattr(args, "endpoint", None),
        "lm": getattr(args, "lm", None),
        "labeler": getattr(args, "labeler", None),
        "edit_classifier": getattr(args, "edit_classifier", None),
        "gamma": getattr(args, "gamma", None),
        "epochs": getattr(args, "epochs", None),
        "learning_rate": getattr(args, "learning_rate", None),
        "group_size": getattr(args, "group_size", None),
    }
    cfg = config_mod.load_config(getattr(args, "config", None), overrides)
    env_endpoint = os.environ.get(ENDPOINT_ENV)
    if env_endpoint:
        cfg.endpoint = env_endpoint
    return cfg


def _build_scorer(cfg: config_mod.RunConfig, reference_path: str | None, sources=None):
    if cfg.scorer == "uniform":
        return scorers.UniformScorer()
    if cfg.scorer == "ngram":
        if cfg.lm is None:
            raise ValueError("scorer 'ngram' needs --lm (or lm= in [run])")
        return scorers.NGramScorer(NGramModel.load(cfg.lm))
    if cfg.scorer == "qe":
        if cfg.labeler is None:
            raise ValueError("scorer 'qe' needs --labeler (or labeler= in [run])")
        return training.TokenLabeler.load(cfg.labeler)
    if cfg.scorer == "oracle":
        if reference_path is None:
            raise ValueError("scorer 'oracle' needs --reference")
        refs = _read_corpus(reference_path)
        if sources is not None and len(refs) != len(sources):
            raise LengthMismatch(
                f"corpora are misaligned (reference: {len(refs)} lines, source: {len(sources)} lines)"
            )
        if sources is None:
            raise ValueError("oracle scorer needs the source corpus")
        return scorers.ReferenceOracleScorer.from_pairs(list(zip(sources, refs)))
    if cfg.scorer == "external":
        if cfg.endpoint is None:
            raise ValueError(
                f"scorer 'external' needs --endpoint (or the {ENDPOINT_ENV} variable)"
            )
        return remote.connect(cfg.endpoint)
    raise ValueError(f"unknown scorer {cfg.scorer!r}")


# ---------------------------------------------------------------------------
# sentence workers (module level so process pools can import them)

_POOL: dict = {}


def _pool_init(blob: bytes) -> None:
    global _POOL
    _POOL = pickle.loads(blob)


def _combine_one(task: tuple[int, list[str], list[tuple[str, list[str]]]]) -> tuple[str, dict]:
    index, source, per_system = task
    scorer = _POOL["scorer"]
    cfg = _POOL["config"]
    clf = _POOL["classifier"]
    union = edit_union(
        [(name, extract_edits(source, hyp)) for name, hyp in per_system], source
    )
    if clf is not None:
        union = clf.annotate(union)
    cand = combine_mod.beam_combine(source, union, scorer, cfg.combiner)
    bd = cand.breakdown
    record = {
        "index": index,
        "source": " ".join(source),
        "output": " ".join(cand.realized),
        "applied": [[e.start, e.end, e.replacement_text()] for e in cand.applied],
        "union_size": len(union.edits),
        "q": bd.q,
        "v": bd.v,
        "es": bd.es,
        "q_prime": bd.q_prime,
    }
    return " ".join(cand.realized), record


def _rerank_one(task: tuple[int, list[str], list[list[str]]]) -> tuple[str, dict]:
    index, source, candidates = task
    scorer = _POOL["scorer"]
    best = combine_mod.rerank(source, candidates, scorer)
    return " ".join(best), {"index": index, "output": " ".join(best)}


def _map_sentences(worker, tasks, state: dict, workers: int):
    if workers <= 1:
        global _POOL
        _POOL = state
        return [worker(t) for t in tasks]
    blob = pickle.dumps(state)
    with ProcessPoolExecutor(max_workers=workers, initializer=_pool_init, initargs=(blob,)) as ex:
        return list(ex.map(worker, tasks, chunksize=8))


# ---------------------------------------------------------------------------
# commands


def cmd_extract_edits(args: argparse.Namespace) -> int:
    sources = _read_corpus(args.source)
    hyps = _read_corpus(args.hypothesis)
    _check_aligned({args.source: len(sources), args.hypothesis: len(hyps)})
    blocks = []
    for source, hyp in zip(sources, hyps):
        edits = extract_edits(source, hyp)
        blocks.append(m2.M2Sentence(source=tuple(source), annotations={0: edits}))
    _write_text(args.output, m2.emit_m2(blocks))
    return 0


def cmd_combine(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    sources = _read_corpus(args.source)
    systems = _named_paths(args.hypothesis)
    corpora = {name: _read_corpus(path) for name, path in systems}
    counts = {args.source: len(sources)}
    counts.update({name: len(corpus) for name, corpus in corpora.items()})
    _check_aligned(counts)

    classifier = None
    if cfg.edit_classifier is not None:
        classifier = editclf.EditClassifier.load(cfg.edit_classifier)
    if cfg.combiner.beta > 0.0 and classifier is None:
        raise ValueError(
            "beta > 0 requires a trained edit classifier (--edit-classifier)"
        )
    scorer = _build_scorer(cfg, getattr(args, "reference", None), sources)
    workers = cfg.workers
    if isinstance(scorer, remote.ExternalScorer):
        workers = 1  # pipes cannot be shared across worker processes

    tasks = [
        (i, src, [(name, corpora[name][i]) for name, _ in systems])
        for i, src in enumerate(sources)
    ]
    state = {"scorer": scorer, "config": cfg, "classifier": classifier}
    try:
        results = _map_sentences(_combine_one, tasks, state, workers)
    finally:
        scorer.close()
    _write_text(args.output, "".join(line + "\n" for line, _ in results))
    if args.report is not None:
        report = "".join(json.dumps(rec, sort_keys=True) + "\n" for _, rec in results)
        Path(args.report).write_text(report, encoding="utf-8")
    return 0


def cmd_rerank(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    sources = _read_corpus(args.source)
    corpora = [_read_corpus(path) for path in args.hypotheses]
    counts = {args.source: len(sources)}
    counts.update({path: len(c) for path, c in zip(args.hypotheses, corpora)})
    _check_aligned(counts)
    scorer = _build_scorer(cfg, getattr(args, "reference", None), sources)
    workers = cfg.workers
    if isinstance(scorer, remote.ExternalScorer):
        workers = 1
    tasks = [
        (i, src, [corpus[i] for corpus in corpora]) for i, src in enumerate(sources)
    ]
    try:
        results = _map_sentences(_rerank_one, tasks, {"scorer": scorer}, workers)
    finally:
        scorer.close()
    _write_text(args.output, "".join(line + "\n" for line, _ in results))
    return 0


def _load_gold(path: str) -> tuple[list[list[str]], list[dict[int, list]]]:
    sentences = m2.parse_m2(Path(path).read_text(encoding="utf-8"))
    sources = [list(s.source) for s in sentences]
    gold = [s.annotations for s in sentences]
    return sources, gold


def _print_score(args: argparse.Namespace, score: evaluate.CorpusScore) -> None:
    if args.json:
        print(json.dumps(score.as_dict(), sort_keys=True))
    else:
        d = score.as_dict()
        print(f"TP {d['tp']}  FP {d['fp']}  FN {d['fn']}")
        print(
            f"precision {d['precision']:.4f}  recall {d['recall']:.4f}  "
            f"F0.5 {d['f05']:.4f}"
        )


def cmd_evaluate(args: argparse.Namespace) -> int:
    sources, gold = _load_gold(args.gold)
    hyps = _read_corpus(args.hypothesis)
    _check_aligned({args.gold: len(sources), args.hypothesis: len(hyps)})
    hyp_edits = [extract_edits(s, h) for s, h in zip(sources, hyps)]
    score = evaluate.corpus_f05(hyp_edits, gold)
    if args.against is not None:
        other = _read_corpus(args.against)
        _check_aligned({args.gold: len(sources), args.against: len(other)})
        other_edits = [extract_edits(s, h) for s, h in zip(sources, other)]
        p = evaluate.bootstrap_significance(
            hyp_edits, other_edits, gold, samples=args.samples, seed=args.seed or 0
        )
        if args.json:
            out = score.as_dict()
            out["p_value"] = p
            print(json.dumps(out, sort_keys=True))
        else:
            _print_score(args, score)
            print(f"bootstrap p (claim: hypothesis beats --against) {p:.4f}")
        return 0
    _print_score(args, score)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    sources, gold = _load_gold(args.gold)
    systems = _named_paths(args.hypothesis)
    corpora = {name: _read_corpus(path) for name, path in systems}
    counts = {args.gold: len(sources)}
    counts.update({name: len(c) for name, c in corpora.items()})
    _check_aligned(counts)
    outputs = []
    hyp_edits = []
    chosen_gold = []
    for i, source in enumerate(sources):
        union = edit_union(
            [(name, extract_edits(source, corpora[name][i])) for name, _ in systems],
            source,
        )
        annotator = gold[i].get(args.annotator, [])
        cand = combine_mod.oracle_combine(union, annotator)
        outputs.append(" ".join(cand.realized))
        hyp_edits.append(list(cand.applied))
        chosen_gold.append({args.annotator: annotator})
    score = evaluate.corpus_f05(hyp_edits, chosen_gold)
    if args.output is not None:
        _write_text(args.output, "".join(line + "\n" for line in outputs))
    _print_score(args, score)
    return 0


def cmd_lm_train(args: argparse.Namespace) -> int:
    corpus = _read_corpus(args.input)
    model = train_ngram(corpus, order=args.order, k=args.k)
    model.save(args.output)
    if args.json:
        print(json.dumps({"sentences": len(corpus), "vocab": len(model.vocab)}))
    return 0


def cmd_train_qe(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    sources = _read_corpus(args.source)
    refs = _read_corpus(args.reference)
    systems = _named_paths(args.hypothesis)
    corpora = {name: _read_corpus(path) for name, path in systems}
    counts = {args.source: len(sources), args.reference: len(refs)}
    counts.update({name: len(c) for name, c in corpora.items()})
    _check_aligned(counts)
    corpus = []
    for name, _ in systems:
        for src, hyp, ref in zip(sources, corpora[name], refs):
            corpus.append((src, hyp, ref))
    labeler = training.train_token_labeler(corpus, cfg.train)
    labeler.save(args.output)
    if args.json:
        print(
            json.dumps(
                {
                    "instances": len(corpus),
                    "initial_loss": labeler.history[0],
                    "final_loss": labeler.history[-1],
                }
            )
        )
    return 0


def cmd_train_esc(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    sources, gold = _load_gold(args.gold)
    systems = _named_paths(args.hypothesis)
    corpora = {name: _read_corpus(path) for name, path in systems}
    counts = {args.gold: len(sources)}
    counts.update({name: len(c) for name, c in corpora.items()})
    _check_aligned(counts)
    records = []
    for i, source in enumerate(sources):
        union = edit_union(
            [(name, extract_edits(source, corpora[name][i])) for name, _ in systems],
            source,
        )
        records.append((union, gold[i].get(args.annotator, [])))
    roster = [name for name, _ in systems]
    clf = editclf.train_edit_classifier(
        records,
        roster,
        learning_rate=args.learning_rate or 2.0,
        epochs=args.epochs or 300,
        seed=cfg.seed,
    )
    clf.save(args.output)
    if args.json:
        print(json.dumps({"edits": sum(len(u.edits) for u, _ in records)}))
    return 0


def _read_floats(path: str) -> list[float]:
    out = []
    for i, line in enumerate(_read_lines(path), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            out.append(float(line))
        except ValueError:
            raise FormatError(i, f"not a number: {line!r}") from None
    return out


def cmd_correlate(args: argparse.Namespace) -> int:
    x = _read_floats(args.scores)
    y = _read_floats(args.targets)
    _check_aligned({args.scores: len(x), args.targets: len(y)})
    rho = evaluate.spearman(x, y)
    result = {"spearman": rho, "n": len(x)}
    if args.against is not None:
        z = _read_floats(args.against)
        _check_aligned({args.scores: len(x), args.against: len(z)})
        rho2 = evaluate.spearman(z, y)
        r23 = evaluate.spearman(x, z)
        w = evaluate.williams_test(rho, rho2, r23, len(x))
        result.update(
            {
                "spearman_against": rho2,
                "williams_t": w.t,
                "dof": w.dof,
                "p_value": w.p_value,
            }
        )
    if args.json:
        print(json.dumps(result, sort_keys=True))
    else:
        print(f"Spearman rho {rho:.4f} over {len(x)} points")
        if args.against is not None:
            print(
                f"against: rho {result['spearman_against']:.4f}, "
                f"Williams t {result['williams_t']:.4f} "
                f"(dof {result['dof']}, p {result['p_value']:.4f})"
            )
    return 0


def cmd_fluency(args: argparse.Namespace) -> int:
    model = NGramModel.load(args.lm)
    corpus = _read_corpus(args.input)
    median = evaluate.fluency_report(corpus, model)
    if args.json:
        print(json.dumps({"median_perplexity": median, "sentences": len(corpus)}))
    else:
        print(f"median perplexity {median:.4f} over {len(corpus)} sentences")
    return 0


def cmd_dump_config(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    sys.stdout.write(config_mod.dump_config(cfg))
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file; flags override it")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--workers", type=int, help="sentence-parallel worker count")
    p.add_argument("--json", action="store_true", help="machine-readable output")


def _add_scorer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scorer", choices=("uniform", "ngram", "qe", "oracle", "external"))
    p.add_argument("--lm", help="n-gram model artifact for the ngram scorer")
    p.add_argument("--labeler", help="trained token-label artifact for the qe scorer")
    p.add_argument("--reference", help="reference corpus for the oracle scorer")
    p.add_argument("--endpoint", help="external scorer endpoint (tcp:HOST:PORT or a command)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gecombine",
        description="Combine grammatical-error-correction systems by quality-estimation beam search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-edits", help="align two corpora and emit their edits as M2")
    p.add_argument("source")
    p.add_argument("hypothesis")
    p.add_argument("-o", "--output")
    _add_common(p)
    p.set_defaults(func=cmd_extract_edits)

    p = sub.add_parser("combine", help="beam-search combination of several systems")
    p.add_argument("--source", required=True)
    p.add_argument(
        "--hypothesis",
        action="append",
        required=True,
        metavar="NAME=PATH",
        help="per-system corrections, repeatable",
    )
    p.add_argument("-o", "--output")
    p.add_argument("--report", help="write per-sentence JSON records here")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--beam-size", dest="beam_size", type=int)
    p.add_argument("--edit-classifier", dest="edit_classifier")
    _add_scorer_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("rerank", help="pick the best hypothesis per sentence")
    p.add_argument("--source", required=True)
    p.add_argument("hypotheses", nargs="+", help="candidate corpora, one sentence per line")
    p.add_argument("-o", "--output")
    _add_scorer_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("evaluate", help="corpus F0.5 against M2 gold")
    p.add_argument("hypothesis")
    p.add_argument("--gold", required=True)
    p.add_argument("--against", help="second system for bootstrap significance")
    p.add_argument("--samples", type=int, default=100)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle", help="upper-bound combination from gold edits")
    p.add_argument("--gold", required=True)
    p.add_argument("--hypothesis", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--annotator", type=int, default=0)
    p.add_argument("-o", "--output")
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("lm-train", help="train the n-gram language model")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--k", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=cmd_lm_train)

    p = sub.add_parser("train-qe", help="train the token-label scorer")
    p.add_argument("--source", required=True)
    p.add_argument("--hypothesis", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--reference", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--group-size", dest="group_size", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_train_qe)

    p = sub.add_parser("train-esc", help="train the edit classifier")
    p.add_argument("--gold", required=True)
    p.add_argument("--hypothesis", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--annotator", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_train_esc)

    p = sub.add_parser("correlate", help="Spearman correlation and Williams test")
    p.add_argument("scores", help="one score per line")
    p.add_argument("targets", help="one target value per line")
    p.add_argument("--against", help="competing scores for the Williams test")
    _add_common(p)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("fluency", help="median perplexity of a corpus")
    p.add_argument("input")
    p.add_argument("--lm", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_fluency)

    p = sub.add_parser("dump-config", help="print the effective configuration")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--beam-size", dest="beam_size", type=int)
    p.add_argument("--edit-classifier", dest="edit_classifier")
    _add_scorer_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_dump_config)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScorerFailure, ModelNotLoaded) as exc:
        print(f"scorer error: {exc}", file=sys.stderr)
        return 3
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, GecombineError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
