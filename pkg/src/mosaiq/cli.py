"""Command-line interface.

Subcommands: clean, score, fit, eval, bon, serve. Every command is
deterministic for fixed flags and input bytes (seeds are explicit,
outputs carry no timestamps). Exit codes: 0 on success, 2 on
validation or input errors, 1 on service startup failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import jsonio
from .cleaning import (
    CleaningConfig,
    aggregate_mos,
    audit_batches,
    mitigate_outliers,
    rater_reliability,
    split_train_test,
)
from .fusion import FitConfig, TieMode, fit_weights, fused_scores_for_pairs
from .jsonio import ParseError
from .metrics import benchmark_report, optimize_threshold, render_metric_table
from .model import AnnotationRecord, SchemaError, _is_valid_raw_score, validate_dataset
from .rewards import best_of_n
from .scoring import score_from_logits
from .service import load_service_config, run_service


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _parse_split_ratio(text: str) -> tuple[int, int]:
    try:
        train, test = text.split(":")
        return (int(train), int(test))
    except ValueError:
        raise ValueError(f"split ratio must look like 4:1, got {text!r}") from None


def _read_annotations_strict(path) -> list[AnnotationRecord]:
    """Parse annotations, rejecting out-of-range scores with line numbers."""
    records = []
    for lineno, obj in jsonio.iter_jsonl(path):
        try:
            rec = AnnotationRecord.from_dict(obj)
        except SchemaError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        if not _is_valid_raw_score(rec.score):
            raise ParseError(
                path, lineno, f"score {rec.score!r} is not an integer in [1, 5]"
            )
        records.append(rec)
    return records


def cmd_clean(args) -> int:
    config = CleaningConfig(
        srcc_min=args.srcc_min,
        z_max=args.z_max,
        audit_fraction=args.audit_fraction,
        audit_accuracy_min=args.audit_accuracy_min,
        split_ratio=_parse_split_ratio(args.split_ratio),
        rng_seed=args.seed,
    )
    records = _read_annotations_strict(args.input)
    if not records:
        raise ValueError(f"{args.input}: no annotation records")

    report = validate_dataset(records)
    if report.duplicates:
        listed = "; ".join(
            f"({i}, {d.value}, {a})" for i, d, a in report.duplicates[:10]
        )
        raise ValueError(f"duplicate (image, dimension, annotator) keys: {listed}")

    if args.gold:
        gold = jsonio.read_gold(args.gold)
        audits = audit_batches(records, gold, config)
        for a in audits:
            verdict = "accepted" if a.accepted else "REJECTED"
            print(
                f"audit batch {a.batch_id or '(default)'}: sampled {a.sampled_count}"
                f"/{a.batch_size}, accuracy {a.accuracy:.4f}, {verdict}"
            )
        if args.audit_report:
            jsonio.write_jsonl(args.audit_report, (a.to_dict() for a in audits))

    raw_mos = aggregate_mos(records)
    rater_reports = rater_reliability(records, raw_mos, config)
    flagged = sorted(
        {r.annotator_id for r in rater_reports if r.flagged and r.dimension is not None}
    )
    if flagged:
        print(f"flagged raters (srcc < {config.srcc_min:g}): {', '.join(flagged)}")
    if args.rater_report:
        jsonio.write_jsonl(args.rater_report, (r.to_dict() for r in rater_reports))

    cleaned, mos = mitigate_outliers(records, config)
    jsonio.write_mos_records(args.out, mos)
    outliers = sum(m.outlier_count for m in mos)
    print(
        f"clean: {len(records)} annotations -> {len(mos)} mos records, "
        f"{outliers} outlier score(s) replaced"
    )

    if bool(args.train_out) != bool(args.test_out):
        raise ValueError("--train-out and --test-out must be given together")
    if args.train_out:
        train, test = split_train_test(mos, config)
        jsonio.write_mos_records(args.train_out, train)
        jsonio.write_mos_records(args.test_out, test)
        print(f"split: {len(train)} train / {len(test)} test")
    return 0


def cmd_score(args) -> int:
    records = jsonio.read_logit_records(args.logits)
    if not records:
        raise ValueError(f"{args.logits}: no logit records")
    rows = sorted(
        ((r.image_id, r.dimension, score_from_logits(r.logits)) for r in records),
        key=lambda row: (row[0], row[1].position),
    )
    jsonio.write_score_rows(args.out, rows)
    print(f"score: wrote {len(rows)} scores for {len({r[0] for r in rows})} image(s)")
    return 0


def cmd_fit(args) -> int:
    pairs = jsonio.read_preference_pairs(args.pairs)
    config = FitConfig(
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        l2=args.l2,
        tie_mode=TieMode.from_string(args.tie_mode),
        rng_seed=args.seed,
    )
    result = fit_weights(pairs, config)
    jsonio.write_weights(args.out, result)
    print(
        f"fit: pairs_used={result.pair_count_used} tie_mode={result.tie_mode.value} "
        f"iterations={result.iterations} converged={result.converged} "
        f"final_loss={result.final_loss:.6f}"
    )
    return 0


def cmd_eval(args) -> int:
    rows = jsonio.read_score_rows(args.pred)
    mos = jsonio.read_mos_records(args.mos)
    reports = benchmark_report(jsonio.scores_by_dimension(rows), mos)
    print(render_metric_table({args.method: reports}))

    report_rows = [r.to_dict() for r in reports]
    if args.pairs:
        if not args.weights:
            raise ValueError("eval with --pairs requires --weights")
        pairs = jsonio.read_preference_pairs(args.pairs)
        weights, _meta = jsonio.read_weights(args.weights)
        fused = fused_scores_for_pairs(pairs, weights)
        result = optimize_threshold(
            pairs, fused, lo=args.lo, hi=args.hi, step=args.step, method=args.method
        )
        print(
            f"rank accuracy ({result.method}): {result.rank_accuracy:.4f} "
            f"at threshold {result.threshold:g} over {result.n_pairs} pairs"
        )
        report_rows.append(result.to_dict())
    if args.report:
        jsonio.write_jsonl(args.report, report_rows)
    return 0


def cmd_bon(args) -> int:
    sets = jsonio.read_candidate_sets(args.candidates)
    if not sets:
        raise ValueError(f"{args.candidates}: no candidate rows")
    weights, _meta = jsonio.read_weights(args.weights)
    results = [(s.prompt_id, best_of_n(s, weights)) for s in sets]
    jsonio.write_bon_results(args.out, results)
    print(f"bon: ranked {len(results)} candidate set(s)")
    return 0


def cmd_serve(args) -> int:
    config = load_service_config(
        args.config,
        host=args.host,
        port=args.port,
        data_dir=args.data_dir,
        weights_path=args.weights,
        auth_token=args.auth_token,
        rng_seed=args.seed,
        backend_mode=args.backend_mode,
        backend_endpoint=args.backend_endpoint,
        backend_logits_path=args.backend_logits,
    )
    print(f"serving on {config.host}:{config.port} (data_dir={config.data_dir})")
    try:
        run_service(config)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mosaiq",
        description="Interior-image aesthetic quality toolkit: clean annotations, "
        "score from rating-word logits, fit fusion weights, evaluate, rank, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("clean", help="aggregate annotations into MOS with audits and reports")
    p.add_argument("--in", dest="input", required=True, help="annotations jsonl")
    p.add_argument("--out", required=True, help="output MOS jsonl")
    p.add_argument("--gold", help="gold labels jsonl for batch audits")
    p.add_argument("--audit-report", help="write audit results jsonl")
    p.add_argument("--rater-report", help="write rater reliability jsonl")
    p.add_argument("--train-out", help="write stratified train MOS jsonl")
    p.add_argument("--test-out", help="write stratified test MOS jsonl")
    p.add_argument("--srcc-min", type=float, default=0.6)
    p.add_argument("--z-max", type=float, default=2.0)
    p.add_argument("--audit-fraction", type=float, default=0.10)
    p.add_argument("--audit-accuracy-min", type=float, default=0.85)
    p.add_argument("--split-ratio", default="4:1")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("score", help="turn rating-word logits into per-dimension scores")
    p.add_argument("--logits", required=True, help="logit records jsonl")
    p.add_argument("--out", required=True, help="output score rows jsonl")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("fit", help="fit fusion weights from preference pairs")
    p.add_argument("--pairs", required=True, help="preference pairs jsonl")
    p.add_argument("--out", required=True, help="output weights json")
    p.add_argument("--tie-mode", default="soft_half", choices=["soft_half", "drop"])
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("--grad-tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="correlations vs MOS, optional rank accuracy on pairs")
    p.add_argument("--pred", required=True, help="score rows jsonl")
    p.add_argument("--mos", required=True, help="MOS jsonl")
    p.add_argument("--pairs", help="preference pairs jsonl for rank accuracy")
    p.add_argument("--weights", help="weights json (required with --pairs)")
    p.add_argument("--report", help="write machine-readable report jsonl")
    p.add_argument("--method", default="fused", help="method label for the table")
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=4.0)
    p.add_argument("--step", type=float, default=0.005)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bon", help="rank candidate sets by fused score")
    p.add_argument("--candidates", required=True, help="candidate rows jsonl")
    p.add_argument("--weights", required=True, help="weights json")
    p.add_argument("--out", required=True, help="output ranking jsonl")
    p.set_defaults(func=cmd_bon)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--data-dir", help="service data directory")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--weights", help="weights json path")
    p.add_argument("--auth-token")
    p.add_argument("--seed", type=int)
    p.add_argument("--backend-mode", choices=["file_offline", "remote_service"])
    p.add_argument("--backend-logits", help="offline logits jsonl")
    p.add_argument("--backend-endpoint", help="remote scoring endpoint URL")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, SchemaError, ValueError) as exc:
        return _fail(str(exc))
    except FileNotFoundError as exc:
        return _fail(f"{exc.filename}: file not found")


if __name__ == "__main__":
    sys.exit(main())
