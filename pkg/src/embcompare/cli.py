"""Command-line entry point.

Subcommands:

* ``compare``   -- end-to-end comparison of two embedding files
* ``analogy``   -- analogy-task accuracy for one embedding
* ``agreement`` -- Krippendorff's alpha between two answer files
* ``synth``     -- generate a synthetic embedding pair with ground truth

JSON goes to stdout (or ``--out``); a short human-readable summary goes to
stderr.  Exit codes: 0 success, 1 input or validation error, 2 internal
numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .alignment import one_to_one_score
from .analogy_eval import (
    ANSWERED,
    agreement_report,
    evaluate,
    krippendorff_alpha,
    parse_analogy_file,
    read_answers_csv,
    write_answers_csv,
)
from .cca import NumericalError, cca_fit
from .column_stats import DEFAULT_BINS, correlation_matrix, histogram
from .embedding_io import align_vocabularies, parse_embedding, write_glove_text
from .synthgen import (
    SynthSpec,
    derive_pair,
    random_embedding,
    random_invertible,
    random_permutation,
    random_sign_mask,
)

THREADS_ENV = "EMBCOMPARE_THREADS"


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; remap to 1 (input error)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _resolve_workers(flag_value: int | None) -> int:
    if flag_value is not None:
        if flag_value < 1:
            raise ValueError(f"--threads must be a positive integer, got {flag_value}")
        return flag_value
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            n = 0
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _note(*lines: str) -> None:
    for line in lines:
        print(line, file=sys.stderr)


def _tool_block() -> dict:
    return {"name": "embcompare", "version": __version__}


def cmd_compare(args) -> int:
    workers = _resolve_workers(args.threads)
    left = parse_embedding(args.left, format_hint=args.format)
    right = parse_embedding(args.right, format_hint=args.format)
    pair = align_vocabularies(left, right)

    kappa = correlation_matrix(pair, workers=workers)
    kappa_hist = histogram(kappa.values.ravel(), bins=args.bins, with_kde=args.kde)
    matching = one_to_one_score(kappa, use_abs=args.abs_correlation)
    cca_result = cca_fit(pair, regularization=args.regularization)

    agreement_block = None
    if args.questions:
        questions = parse_analogy_file(args.questions, lowercase=args.lowercase)
        if not questions:
            raise ValueError(f"questions file {args.questions!r} has no questions")
        agreement = agreement_report(
            left,
            right,
            questions,
            scores={
                "zeta_1to1": matching.zeta_1to1,
                "zeta_cca": cca_result.zeta_cca,
            },
            workers=workers,
        )
        agreement_block = agreement.to_json_dict()

    if args.plots_dir:
        plots = Path(args.plots_dir)
        plots.mkdir(parents=True, exist_ok=True)
        kappa_hist.write_csv(plots / "hist_kappa.csv")
        matched_hist = histogram(
            matching.matched_correlations, bins=args.bins, with_kde=args.kde
        )
        matched_hist.write_csv(plots / "hist_matched.csv")
        cca_hist = histogram(
            cca_result.correlations, bins=args.bins, with_kde=args.kde
        )
        cca_hist.write_csv(plots / "hist_cca.csv")
        if args.kde:
            for h, stem in (
                (kappa_hist, "hist_kappa"),
                (matched_hist, "hist_matched"),
                (cca_hist, "hist_cca"),
            ):
                if h.kde_points is not None:
                    h.write_kde_csv(plots / f"{stem}_kde.csv")
        matching.write_matched_csv(plots / "matched_sorted.csv")
        cca_result.write_correlations_csv(plots / "cca_sorted.csv")

    # --threads is deliberately not echoed: outputs are worker-invariant,
    # so reports stay byte-identical across thread counts
    config = {
        "left": str(args.left),
        "right": str(args.right),
        "format": args.format,
        "abs_correlation": args.abs_correlation,
        "regularization": args.regularization,
        "bins": args.bins,
        "kde": args.kde,
        "questions": args.questions,
        "lowercase": args.lowercase,
    }
    report = {
        "tool": _tool_block(),
        "config": config,
        "inputs": {
            "left": {"name": left.name, "words": left.n_words, "dims": left.n_dims},
            "right": {"name": right.name, "words": right.n_words, "dims": right.n_dims},
            "shared_vocabulary": pair.shared_count,
            "dropped_left": pair.dropped_left,
            "dropped_right": pair.dropped_right,
        },
        "kappa": {
            "median": kappa_hist.median,
            "histogram": kappa_hist.to_json_dict(),
            "degenerate_left": list(kappa.degenerate_left),
            "degenerate_right": list(kappa.degenerate_right),
        },
        "one_to_one": {
            **matching.to_json_dict(),
            "matched_correlations_sorted": [
                float(v) for v in matching.sorted_matched()
            ],
        },
        "cca": cca_result.to_json_dict(),
        "zeta": {
            "zeta_1to1": matching.zeta_1to1,
            "zeta_cca": cca_result.zeta_cca,
        },
        "analogy_agreement": agreement_block,
    }
    if not args.no_timestamp:
        report["generated_at"] = datetime.now(timezone.utc).isoformat()
    _emit(report, args.out)

    _note(
        f"{left.name} ({left.n_words} x {left.n_dims})  vs  "
        f"{right.name} ({right.n_words} x {right.n_dims})",
        f"shared vocabulary: {pair.shared_count} "
        f"(dropped {pair.dropped_left} left, {pair.dropped_right} right)",
        f"kappa median:      {kappa_hist.median:+.4f}",
        f"zeta_1to1:         {matching.zeta_1to1:+.4f}",
        f"zeta_cca:          {cca_result.zeta_cca:+.4f}  "
        f"(k={cca_result.k}, ridge={cca_result.regularization:.3g})",
    )
    if agreement_block is not None:
        _note(f"analogy alpha:     {agreement_block['alpha']:+.4f}")
    return 0


def cmd_analogy(args) -> int:
    workers = _resolve_workers(args.threads)
    emb = parse_embedding(args.embedding, format_hint=args.format)
    questions = parse_analogy_file(args.questions, lowercase=args.lowercase)
    if not questions:
        raise ValueError(f"questions file {args.questions!r} has no questions")
    report = evaluate(emb, questions, workers=workers)
    if args.answers_csv:
        write_answers_csv(questions, report.answers, args.answers_csv)

    accuracy_key = "accuracy_oov_wrong" if args.count_oov_wrong else "accuracy"
    doc = {
        "tool": _tool_block(),
        "config": {
            "embedding": str(args.embedding),
            "questions": str(args.questions),
            "format": args.format,
            "count_oov_wrong": args.count_oov_wrong,
            "lowercase": args.lowercase,
            "oov_convention": "count_wrong" if args.count_oov_wrong else "skip",
        },
        "evaluation": report.to_json_dict(),
        "headline_accuracy": report.total.to_json_dict()[accuracy_key],
    }
    _emit(doc, args.out)

    total = report.total
    _note(
        f"{emb.name}: {total.correct}/{total.answered} answered correctly, "
        f"{total.skipped} skipped",
        f"headline accuracy ({doc['config']['oov_convention']}): "
        f"{doc['headline_accuracy']}",
    )
    return 0


def cmd_agreement(args) -> int:
    rows_a = read_answers_csv(args.answers_a)
    rows_b = read_answers_csv(args.answers_b)
    if len(rows_a) != len(rows_b):
        raise ValueError(
            f"answer files differ in length: {len(rows_a)} vs {len(rows_b)}"
        )
    labels_a = [r["predicted"] if r["status"] == ANSWERED else None for r in rows_a]
    labels_b = [r["predicted"] if r["status"] == ANSWERED else None for r in rows_b]
    result = krippendorff_alpha(labels_a, labels_b)
    disagreements = [
        {
            "question_index": int(ra["question_index"]),
            "a": ra["a"],
            "b": ra["b"],
            "c": ra["c"],
            "d": ra["d"],
            "predicted_left": ra["predicted"],
            "predicted_right": rb["predicted"],
        }
        for ra, rb, la, lb in zip(rows_a, rows_b, labels_a, labels_b)
        if la is not None and lb is not None and la != lb
    ]
    doc = {
        "tool": _tool_block(),
        "config": {
            "answers_a": str(args.answers_a),
            "answers_b": str(args.answers_b),
        },
        "alpha": result.alpha,
        "n_items": result.n_items,
        "n_excluded": result.n_excluded,
        "n_agreements": result.n_agreements,
        "degenerate": result.degenerate,
        "disagreements": disagreements,
    }
    _emit(doc, args.out)
    _note(
        f"alpha: {result.alpha:+.4f} over {result.n_items} items "
        f"({result.n_excluded} excluded, {len(disagreements)} disagreements)"
    )
    return 0


def cmd_synth(args) -> int:
    base = random_embedding(args.rows, args.dims, args.seed, name=args.name)
    if args.transform == "identity":
        transforms = ()
    elif args.transform == "permutation":
        transforms = (random_permutation(args.dims, args.seed),)
    elif args.transform == "sign_flip":
        transforms = (random_sign_mask(args.dims, args.seed),)
    elif args.transform == "linear":
        transforms = (random_invertible(args.dims, args.seed),)
    else:  # argparse choices make this unreachable
        raise ValueError(f"unknown transform {args.transform!r}")
    spec = SynthSpec(
        n_rows=args.rows,
        n_dims=args.dims,
        transforms=transforms,
        noise_sigma=args.sigma,
        seed=args.seed,
    )
    pair, truth = derive_pair(base, spec)
    write_glove_text(pair.left, args.out_left)
    write_glove_text(pair.right, args.out_right)
    if args.truth:
        Path(args.truth).write_text(truth.to_json() + "\n", encoding="utf-8")
    _note(
        f"wrote {args.rows} x {args.dims} pair "
        f"(transform={args.transform}, sigma={args.sigma}, seed={args.seed}) "
        f"to {args.out_left} / {args.out_right}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="embcompare",
        description="Measure how consistent two word-embedding spaces are.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help=f"worker threads (default: ${THREADS_ENV} or CPU count); "
            "never changes results",
        )
        p.add_argument("--out", default=None, help="write JSON here instead of stdout")

    p = sub.add_parser("compare", help="compare two embedding files end to end")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument(
        "--format",
        choices=["auto", "word2vec_text", "glove_text"],
        default="auto",
    )
    p.add_argument(
        "--abs-correlation",
        action="store_true",
        help="match dimensions on |correlation| (sign-flip symmetry); "
        "reports signed and absolute matched values",
    )
    p.add_argument(
        "--regularization",
        type=float,
        default=None,
        help="absolute CCA ridge; default scales with each side's covariance",
    )
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--kde", action="store_true", help="add KDE curves to histograms")
    p.add_argument("--plots-dir", default=None, help="write plot-ready CSVs here")
    p.add_argument(
        "--questions", default=None, help="analogy questions file for agreement"
    )
    p.add_argument("--lowercase", action="store_true")
    p.add_argument(
        "--no-timestamp",
        action="store_true",
        help="omit generated_at (for byte-identical reports)",
    )
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("analogy", help="analogy-task accuracy for one embedding")
    p.add_argument("embedding")
    p.add_argument("questions")
    p.add_argument(
        "--format",
        choices=["auto", "word2vec_text", "glove_text"],
        default="auto",
    )
    p.add_argument(
        "--count-oov-wrong",
        action="store_true",
        help="headline accuracy counts skipped questions as wrong",
    )
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--answers-csv", default=None, help="write per-question answers")
    common(p)
    p.set_defaults(func=cmd_analogy)

    p = sub.add_parser("agreement", help="alpha between two answers CSVs")
    p.add_argument("answers_a")
    p.add_argument("answers_b")
    common(p)
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("synth", help="generate a synthetic embedding pair")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--dims", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--transform",
        choices=["identity", "permutation", "sign_flip", "linear"],
        default="identity",
    )
    p.add_argument("--sigma", type=float, default=0.0, help="noise level")
    p.add_argument("--name", default=None)
    p.add_argument("--out-left", required=True)
    p.add_argument("--out-right", required=True)
    p.add_argument("--truth", default=None, help="write ground-truth JSON here")
    common(p)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse --help/--version or usage error
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"embcompare: numerical error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"embcompare: numerical error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"embcompare: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
