"""End-to-end checks pinning search, scoring, training, and CLI behaviour.

Each test prints one [ACCEPTANCE] verdict line so the suite's outcome can
be scraped from the run log. Criteria 7, 8, and 10 share a seeded
five-system benchmark (see benchmark_corpus); criterion 11 only runs once
the scorer sidecar has been built.
"""

import dataclasses
import math
import random
import shutil
import subprocess
import time
from pathlib import Path
from types import SimpleNamespace

import pytest

from benchmark_corpus import LEXICON, SYSTEM_NAMES, build_benchmark
from conftest import (
    CORRECTION_TEXT,
    PUBLISHED_EDITS,
    SOURCE_TEXT,
    HashTokenScorer,
    random_instance,
)

from gecombine import remote
from gecombine.cli import main
from gecombine.combine import beam_combine, brute_force_combine, oracle_combine
from gecombine.edits import (
    Edit,
    LabelVector,
    apply_edits,
    edit_union,
    extract_edits,
)
from gecombine.editclf import train_edit_classifier
from gecombine.evaluate import (
    CorpusScore,
    bootstrap_significance,
    corpus_f05,
    spearman,
    williams_test,
)
from gecombine.losses import (
    aggregate_q_grad,
    bce_loss_grad,
    gap_loss,
    rank_loss,
    rank_loss_grad,
    word_loss,
)
from gecombine.ngram import train_ngram
from gecombine.scorers import NGramScorer, ReferenceOracleScorer
from gecombine.scoring import (
    CombinerConfig,
    aggregate_q,
    biased_score,
    edit_score,
    voting_score,
)

SIDECAR_MAIN = Path(__file__).resolve().parents[1] / "sidecar" / "dist" / "main.js"


def _emit(capsys, criterion, ok):
    with capsys.disabled():
        print(f"\n[ACCEPTANCE] criterion {criterion}: {'PASS' if ok else 'FAIL'}")


# ---------------------------------------------------------------------------
# shared five-system benchmark (criteria 7, 8, 10)


@pytest.fixture(scope="module")
def bench():
    data = build_benchmark()
    scorer = NGramScorer(train_ngram(data.lm_corpus, order=2, k=0.1))
    unions = [
        edit_union(
            [(name, data.system_edits[name][i]) for name in SYSTEM_NAMES],
            data.sources[i],
        )
        for i in range(len(data.sources))
    ]
    half = len(data.sources) // 2
    classifier = train_edit_classifier(
        [(unions[i], data.gold[i][0]) for i in range(half)],
        list(SYSTEM_NAMES),
        learning_rate=2.0,
        epochs=300,
        seed=0,
    )
    return SimpleNamespace(
        data=data, scorer=scorer, classifier=classifier, unions=unions, half=half
    )


def _combined_f05(bench, config, annotate):
    applied = []
    for i in range(bench.half, len(bench.data.sources)):
        union = bench.unions[i]
        if annotate:
            union = bench.classifier.annotate(union)
        cand = beam_combine(bench.data.sources[i], union, bench.scorer, config)
        applied.append(list(cand.applied))
    gold = [bench.data.gold[i] for i in range(bench.half, len(bench.data.sources))]
    return corpus_f05(applied, gold).f05


def _base_f05s(bench):
    gold = [bench.data.gold[i] for i in range(bench.half, len(bench.data.sources))]
    out = {}
    for name in SYSTEM_NAMES:
        hyp = [
            bench.data.system_edits[name][i]
            for i in range(bench.half, len(bench.data.sources))
        ]
        out[name] = corpus_f05(hyp, gold).f05
    return out


# ---------------------------------------------------------------------------
# criteria


def test_criterion_1_published_pair_fidelity(capsys):
    ok = False
    try:
        started = time.monotonic()
        source = SOURCE_TEXT.split()
        correction = CORRECTION_TEXT.split()
        edits = extract_edits(source, correction)
        assert [
            (e.start, e.end, e.replacement_text()) for e in edits
        ] == PUBLISHED_EDITS
        assert " ".join(apply_edits(source, edits)) == CORRECTION_TEXT
        assert time.monotonic() - started < 1.0
        ok = True
    finally:
        _emit(capsys, 1, ok)


def test_criterion_2_beam_agrees_with_brute_force(capsys):
    ok = False
    try:
        started = time.monotonic()
        rng = random.Random(42)
        default_width = CombinerConfig(alpha=0.4, beta=0.3, beam_size=16)
        optimal = 0
        for i in range(500):
            source, union = random_instance(rng, max_edits=10, with_p_es=True)
            scorer = HashTokenScorer(seed=42000 + i)
            full_width = dataclasses.replace(
                default_width, beam_size=max(1, 2 ** len(union.edits))
            )
            best = brute_force_combine(source, union, scorer, full_width)
            exhaustive = beam_combine(source, union, scorer, full_width)
            assert (
                abs(exhaustive.breakdown.q_prime - best.breakdown.q_prime) <= 1e-12
            )
            beamed = beam_combine(source, union, scorer, default_width)
            if beamed.breakdown.q_prime >= best.breakdown.q_prime - 1e-12:
                optimal += 1
        assert optimal >= 495  # at least 99% of 500
        assert time.monotonic() - started < 120.0
        ok = True
    finally:
        _emit(capsys, 2, ok)


def _ideal_scorer_suite():
    """50 sentences with two injected errors and one tempting bad edit each."""
    rng = random.Random(7)
    rows = []
    for i in range(50):
        reference = [rng.choice(LEXICON) for _ in range(rng.randint(6, 9))]
        # keep the corruptions apart: adjacent edits would be re-extracted
        # as one wide edit and stop matching the per-position gold
        while True:
            corrupted = sorted(rng.sample(range(len(reference)), 2))
            if corrupted[1] - corrupted[0] >= 2:
                break
        source = list(reference)
        for pos in corrupted:
            source[pos] = f"e{i}p{pos}"
        gold = [Edit(pos, pos + 1, (reference[pos],)) for pos in corrupted]
        clean = [j for j in range(len(reference)) if j not in corrupted]
        junk_pos = rng.choice(clean)
        wrong = rng.choice([w for w in LEXICON if w != reference[junk_pos]])
        bad = Edit(junk_pos, junk_pos + 1, (wrong,))
        rows.append((source, reference, gold, bad))
    return rows


def test_criterion_3_ideal_scorer_ordering_and_recovery(capsys):
    ok = False
    try:
        rows = _ideal_scorer_suite()
        scorer = ReferenceOracleScorer.from_pairs(
            [(source, reference) for source, reference, _, _ in rows]
        )
        config = CombinerConfig()
        for source, reference, gold, bad in rows:
            # start from a partial correction so both orderings are strict
            hyp = apply_edits(source, [gold[0]])
            q_mid = scorer.score(source, hyp)
            q_plus = scorer.score(source, apply_edits(source, gold))
            q_minus = scorer.score(source, apply_edits(source, [gold[0], bad]))
            assert q_plus > q_mid > q_minus

            union = edit_union(
                [("s1", gold), ("s2", gold), ("s3", [bad])], source
            )
            for edit in gold:
                assert edit.key() in {e.key() for e in union.edits}
            cand = beam_combine(source, union, scorer, config)
            assert cand.realized == tuple(reference)
        ok = True
    finally:
        _emit(capsys, 3, ok)


def test_criterion_4_oracle_precision_and_monotonicity(capsys, bench):
    ok = False
    try:
        data = bench.data
        f05s = []
        for count in range(1, len(SYSTEM_NAMES) + 1):
            applied = []
            for i in range(len(data.sources)):
                union = edit_union(
                    [
                        (name, data.system_edits[name][i])
                        for name in SYSTEM_NAMES[:count]
                    ],
                    data.sources[i],
                )
                cand = oracle_combine(union, data.gold[i][0])
                applied.append(list(cand.applied))
            score = corpus_f05(applied, data.gold)
            assert score.precision == 1.0
            assert score.fp == 0
            f05s.append(score.f05)
        assert all(later >= earlier for earlier, later in zip(f05s, f05s[1:]))
        assert f05s[-1] > f05s[0]
        ok = True
    finally:
        _emit(capsys, 4, ok)


def _central_difference(fn, values, index, step=1e-6):
    upper = list(values)
    lower = list(values)
    upper[index] += step
    lower[index] -= step
    return (fn(upper) - fn(lower)) / (2.0 * step)


def _agrees(numeric, analytic, rtol=1e-5):
    scale = max(abs(numeric), abs(analytic), 1e-8)
    return abs(numeric - analytic) <= rtol * scale


def test_criterion_5_gradients_match_finite_differences(capsys):
    ok = False
    try:
        rng = random.Random(55)

        for _ in range(100):  # word- and gap-label losses
            m = rng.randint(1, 6)
            for size, loss in ((m, word_loss), (m + 1, gap_loss)):
                pred = [rng.uniform(0.02, 0.98) for _ in range(size)]
                gold = [rng.choice((0.0, 1.0)) for _ in range(size)]
                weights = [rng.uniform(0.25, 3.0) for _ in range(size)]

                def evaluate_at(xs, loss=loss, size=size):
                    if loss is word_loss:
                        labels = LabelVector(tuple(xs), (1.0,) * (size + 1))
                        gold_labels = LabelVector(tuple(gold), (1.0,) * (size + 1))
                    else:
                        labels = LabelVector((1.0,) * max(size - 1, 0), tuple(xs))
                        gold_labels = LabelVector(
                            (1.0,) * max(size - 1, 0), tuple(gold)
                        )
                    return loss(labels, gold_labels, weights)

                analytic = bce_loss_grad(pred, gold, weights)
                for i in range(size):
                    numeric = _central_difference(evaluate_at, pred, i)
                    assert _agrees(numeric, analytic[i])

        for _ in range(100):  # pairwise rank loss
            size = rng.randint(2, 5)
            qs = [rng.uniform(0.05, 0.95) for _ in range(size)]
            ys = [rng.choice((0.0, 0.5, 1.0)) for _ in range(size)]
            mu = rng.choice((1.0, 5.0, 9.0))
            analytic = rank_loss_grad(list(zip(qs, ys)), mu=mu)
            for i in range(size):
                numeric = _central_difference(
                    lambda xs: rank_loss(list(zip(xs, ys)), mu=mu), qs, i
                )
                assert _agrees(numeric, analytic[i])

        for _ in range(100):  # aggregate quality score
            m = rng.randint(0, 5)
            w = [rng.uniform(0.05, 0.95) for _ in range(m)]
            g = [rng.uniform(0.05, 0.95) for _ in range(m + 1)]
            dw, dg = aggregate_q_grad(LabelVector(tuple(w), tuple(g)))
            for i in range(m):
                numeric = _central_difference(
                    lambda xs: aggregate_q(LabelVector(tuple(xs), tuple(g))), w, i
                )
                assert _agrees(numeric, dw[i])
            for j in range(m + 1):
                numeric = _central_difference(
                    lambda xs: aggregate_q(LabelVector(tuple(w), tuple(xs))), g, j
                )
                assert _agrees(numeric, dg[j])

        assert rank_loss([(0.4, 1.0), (0.4, 0.0)]) == math.log(2.0)
        ok = True
    finally:
        _emit(capsys, 5, ok)


def test_criterion_6_score_algebra_goldens(capsys):
    ok = False
    try:
        q = aggregate_q(LabelVector((0.5, 0.5), (1.0, 1.0, 1.0)))
        assert abs(q - 0.7578582832551991) <= 1e-9

        source = ["a", "b", "c"]
        first = Edit(0, 1, ("x",))
        second = Edit(2, 3, ("y",))
        union = edit_union(
            [("s1", [first, second]), ("s2", [first, second]), ("s3", [second])],
            source,
        )
        assert abs(voting_score(union.edits, union) - 5.0 / 6.0) <= 1e-9

        third = Edit(1, 2, ("z",))
        union_es = edit_union([("only", [first, third, second])], source)
        union_es.p_es = {first.key(): 0.9, third.key(): 0.8, second.key(): 0.4}
        es = edit_score([first, third], union_es)
        assert abs(es - 0.755952629936924) <= 1e-9

        biased = biased_score(0.8, 0.9, 0.7, CombinerConfig(alpha=0.4, beta=0.5))
        assert abs(biased - 0.7174489713913235) <= 1e-9

        rng = random.Random(6)
        for _ in range(200):
            qv = rng.uniform(0.05, 1.0)
            vv = rng.uniform(0.05, 1.0)
            ev = rng.uniform(0.05, 1.0)
            alpha = rng.uniform(0.0, 1.0)
            no_es = biased_score(qv, vv, ev, CombinerConfig(alpha=alpha, beta=0.0))
            assert abs(no_es - qv * vv**alpha) <= 1e-12
            raw = biased_score(qv, vv, ev, CombinerConfig(alpha=0.0, beta=0.0))
            assert raw == qv
        ok = True
    finally:
        _emit(capsys, 6, ok)


def test_criterion_7_combination_beats_every_base_system(capsys, bench):
    ok = False
    try:
        started = time.monotonic()
        bases = _base_f05s(bench)
        full = _combined_f05(
            bench, CombinerConfig(alpha=0.4, beta=0.3, beam_size=16), annotate=True
        )
        assert all(full > base for base in bases.values()), (full, bases)

        with_v = _combined_f05(
            bench, CombinerConfig(alpha=0.4, beta=0.0, beam_size=16), annotate=False
        )
        plain_q = _combined_f05(
            bench, CombinerConfig(alpha=0.0, beta=0.0, beam_size=16), annotate=False
        )
        assert full >= with_v >= plain_q, (full, with_v, plain_q)
        assert time.monotonic() - started < 300.0
        ok = True
    finally:
        _emit(capsys, 7, ok)


def test_criterion_8_wide_beam_never_loses_to_greedy(capsys, bench):
    ok = False
    try:
        wide = _combined_f05(
            bench, CombinerConfig(alpha=0.4, beta=0.3, beam_size=16), annotate=True
        )
        greedy = _combined_f05(
            bench, CombinerConfig(alpha=0.4, beta=0.3, beam_size=1), annotate=True
        )
        assert wide >= greedy, (wide, greedy)
        ok = True
    finally:
        _emit(capsys, 8, ok)


def _williams_reference(r12, r13, r23, n):
    det = 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23
    rbar = (r12 + r13) / 2.0
    numerator = (r12 - r13) * math.sqrt((n - 1) * (1.0 + r23))
    denominator = math.sqrt(
        2.0 * det * (n - 1) / (n - 3) + rbar * rbar * (1.0 - r23) ** 3
    )
    return numerator / denominator


def test_criterion_9_evaluation_micro_goldens(capsys):
    ok = False
    try:
        score = CorpusScore(tp=3, fp=1, fn=2)
        assert abs(score.f05 - 0.71429) <= 1e-5

        assert abs(spearman([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 4.0, 3.0]) - 0.8) <= 1e-12

        ours = williams_test(0.6, 0.4, 0.5, 50)
        assert abs(ours.t - _williams_reference(0.6, 0.4, 0.5, 50)) <= 1e-9

        rows = _ideal_scorer_suite()
        gold = [{0: gold_edits} for _, _, gold_edits, _ in rows]
        ours_edits = [[gold_edits[0]] for _, _, gold_edits, _ in rows]
        theirs_edits = [[] for _ in rows]
        first = bootstrap_significance(
            ours_edits, theirs_edits, gold, samples=300, seed=17
        )
        second = bootstrap_significance(
            ours_edits, theirs_edits, gold, samples=300, seed=17
        )
        assert first == second
        ok = True
    finally:
        _emit(capsys, 9, ok)


def test_criterion_10_worker_count_is_invisible(capsys, bench, tmp_path):
    ok = False
    try:
        data = bench.data
        src = tmp_path / "src.txt"
        src.write_text(
            "".join(" ".join(tokens) + "\n" for tokens in data.sources),
            encoding="utf-8",
        )
        hyp_flags = []
        for name in SYSTEM_NAMES:
            path = tmp_path / f"{name}.txt"
            path.write_text(
                "".join(
                    " ".join(tokens) + "\n" for tokens in data.system_outputs[name]
                ),
                encoding="utf-8",
            )
            hyp_flags += ["--hypothesis", f"{name}={path}"]
        clean = tmp_path / "clean.txt"
        clean.write_text(
            "".join(" ".join(tokens) + "\n" for tokens in data.lm_corpus),
            encoding="utf-8",
        )
        lm = tmp_path / "model.lm.json"
        assert main(["lm-train", str(clean), "-o", str(lm), "--order", "2", "--k", "0.1"]) == 0

        outputs = []
        for workers in ("1", "8"):
            for attempt in range(3):
                out = tmp_path / f"out-w{workers}-{attempt}.txt"
                report = tmp_path / f"report-w{workers}-{attempt}.jsonl"
                code = main(
                    [
                        "combine",
                        "--source", str(src),
                        *hyp_flags,
                        "--scorer", "ngram",
                        "--lm", str(lm),
                        "--workers", workers,
                        "-o", str(out),
                        "--report", str(report),
                    ]
                )
                assert code == 0
                outputs.append(out.read_bytes() + report.read_bytes())
        assert all(blob == outputs[0] for blob in outputs[1:])
        ok = True
    finally:
        _emit(capsys, 10, ok)


def _stub_q(m, word=0.7, gap=0.9):
    return (word**m * gap ** (m + 1)) ** (1.0 / (2 * m + 1))


@pytest.mark.skipif(
    not SIDECAR_MAIN.exists() or shutil.which("node") is None,
    reason="scorer sidecar is not built",
)
def test_criterion_11_sidecar_bridge(capsys):
    ok = False
    tcp_process = None
    try:
        node = shutil.which("node")
        stdio = remote.connect(f"{node} {SIDECAR_MAIN} stub")
        try:
            golden = stdio.score(["a", "b", "c"], ["a", "b", "c"])
            assert abs(golden - (0.7**3 * 0.9**4) ** (1.0 / 7.0)) <= 1e-9

            # soak: every request must come back exactly once with the
            # label shape for its own hypothesis length
            answered = 0
            for start in range(0, 10_000, 250):
                pairs = []
                for offset in range(250):
                    m = 1 + (start + offset) % 7
                    tokens = [f"t{k}" for k in range(m)]
                    pairs.append((tokens, tokens))
                values = stdio.score_batch(pairs)
                assert len(values) == 250
                for (_, hyp), value in zip(pairs, values):
                    assert abs(value - _stub_q(len(hyp))) <= 1e-9
                answered += len(values)
            assert answered == 10_000

            tcp_process = subprocess.Popen(
                [node, str(SIDECAR_MAIN), "stub", "--tcp", "0"],
                stdout=subprocess.DEVNULL,
                stderr=subprocess.PIPE,
                text=True,
            )
            banner = tcp_process.stderr.readline().strip()
            port = int(banner.rsplit(" ", 1)[-1])
            tcp = remote.connect(f"tcp:127.0.0.1:{port}")
            try:
                rng = random.Random(99)
                config = CombinerConfig()
                for _ in range(12):
                    source, union = random_instance(rng, max_edits=6)
                    over_stdio = beam_combine(source, union, stdio, config)
                    over_tcp = beam_combine(source, union, tcp, config)
                    assert over_stdio.realized == over_tcp.realized
            finally:
                tcp.close()
        finally:
            stdio.close()
        ok = True
    finally:
        if tcp_process is not None:
            tcp_process.terminate()
            tcp_process.wait(timeout=10)
        _emit(capsys, 11, ok)
