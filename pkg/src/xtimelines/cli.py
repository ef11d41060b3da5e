"""Command-line entry point.

Subcommands: ``extract`` writes one timeline file per target entity,
``score`` compares system timelines against gold ones, ``experiment``
drives the randomized 50-50 and percentage-sweep protocols, and ``stats``
prints the event-capture and anchor-accuracy diagnostics.

Exit codes: 0 success, 1 usage error, 2 data error. No subcommand touches
the network; the knowledge tables are local TSV snapshots, found via
flags or the XTIMELINES_RESOURCES directory.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from . import harness
from .errors import DataError, ParseError
from .harness import (
    LAYER_CR,
    LAYER_NERNED,
    LAYER_SRL,
    LAYER_TIME,
    SWEEP_VARIANTS,
    SYSTEMS,
    entity_slug,
)
from .resources import load_tables
from .scorer import MODES, weighted_f1_mean
from .timeline import parse_timeline, serialize_timeline

RESOURCE_ENV = "XTIMELINES_RESOURCES"

_MASK_NAMES = {
    "srl": LAYER_SRL,
    "nerned": LAYER_NERNED,
    "cr": LAYER_CR,
    "time": LAYER_TIME,
}

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fmt(x) -> str:
    return f"{x:.6f}"


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _add_resource_flags(parser):
    parser.add_argument("--redirects", help="redirect table TSV")
    parser.add_argument("--interlang", help="interlanguage-link table TSV")
    parser.add_argument("--predmatrix", help="predicate role alignment TSV")


def _resource_path(explicit, filename):
    if explicit:
        return explicit
    base = os.environ.get(RESOURCE_ENV)
    if base:
        candidate = Path(base) / filename
        if candidate.exists():
            return candidate
    return None


def _load_tables(args, parser, require_matrix=False):
    redirects = _resource_path(args.redirects, "redirects.tsv")
    interlang = _resource_path(args.interlang, "interlang.tsv")
    predmatrix = _resource_path(args.predmatrix, "predmatrix.tsv")
    if require_matrix and predmatrix is None:
        parser.error("this invocation needs --predmatrix (or a table in $"
                     + RESOURCE_ENV + ")")
    return load_tables(redirects, interlang, predmatrix)


def _systems_arg(value):
    systems = [s.strip() for s in value.split(",") if s.strip()]
    for s in systems:
        if s not in SYSTEMS:
            raise argparse.ArgumentTypeError(f"unknown system {s!r}")
    return systems


def _metrics_arg(value):
    if value == "all":
        return list(MODES)
    metrics = [m.strip() for m in value.split(",") if m.strip()]
    for m in metrics:
        if m not in MODES:
            raise argparse.ArgumentTypeError(f"unknown metric {m!r}")
    return metrics


def _mask_arg(value):
    layers = []
    for item in value.split(","):
        item = item.strip().lower()
        if not item:
            continue
        if item not in _MASK_NAMES:
            raise argparse.ArgumentTypeError(
                f"unknown layer {item!r} (choose from {', '.join(_MASK_NAMES)})")
        layers.append(_MASK_NAMES[item])
    return frozenset(layers)


def build_parser() -> _Parser:
    parser = _Parser(prog="xtimelines",
                     description="Entity timeline extraction, scoring, and experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="write one .timeline file per target")
    p_extract.add_argument("--manifest", required=True)
    p_extract.add_argument("--system", choices=SYSTEMS, default="dlt")
    p_extract.add_argument("--mode", default="crosslingual",
                           help="en, es (monolingual), multilingual, or crosslingual")
    p_extract.add_argument("--out", required=True)
    p_extract.add_argument("--jobs", type=int, default=1)
    _add_resource_flags(p_extract)

    p_score = sub.add_parser("score", help="score system timelines against gold")
    p_score.add_argument("--system-dir", required=True)
    p_score.add_argument("--gold-dir", required=True)
    p_score.add_argument("--metric", type=_metrics_arg, default=list(MODES),
                         help="basic, strict, relaxed, or all (default all)")
    p_score.add_argument("--average", choices=("counts", "event-weighted"), default="counts",
                         help="micro average by aggregated counts, or the "
                              "event-weighted mean of per-timeline F1s")
    p_score.add_argument("--out", help="directory for CSV reports")

    p_exp = sub.add_parser("experiment", help="randomized evaluation protocols")
    exp_sub = p_exp.add_subparsers(dest="protocol", required=True)

    p_5050 = exp_sub.add_parser("5050", help="random half-and-half non-parallel splits")
    p_5050.add_argument("--manifest", required=True)
    p_5050.add_argument("--n", type=int, default=1000)
    p_5050.add_argument("--seed", type=int, required=True)
    p_5050.add_argument("--systems", type=_systems_arg, default=list(SYSTEMS))
    p_5050.add_argument("--metrics", type=_metrics_arg, default=["strict", "relaxed"])
    p_5050.add_argument("--out", required=True)
    p_5050.add_argument("--jobs", type=int, default=1)
    _add_resource_flags(p_5050)

    p_sweep = exp_sub.add_parser("sweep", help="vary the documents used per language")
    p_sweep.add_argument("--manifest", required=True)
    p_sweep.add_argument("--variant", choices=SWEEP_VARIANTS, required=True)
    p_sweep.add_argument("--seed", type=int, required=True)
    p_sweep.add_argument("--systems", type=_systems_arg, default=list(SYSTEMS))
    p_sweep.add_argument("--sets-per-point", type=int, default=harness.SWEEP_SETS_PER_POINT)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--jobs", type=int, default=1)
    _add_resource_flags(p_sweep)

    p_stats = sub.add_parser("stats", help="error-analysis diagnostics")
    stats_sub = p_stats.add_subparsers(dest="diagnostic", required=True)

    p_capture = stats_sub.add_parser("capture", help="share of gold events found")
    p_capture.add_argument("--manifest", required=True)
    p_capture.add_argument("--system", choices=SYSTEMS, default="dlt")
    p_capture.add_argument("--mask", type=_mask_arg, default=frozenset(harness.LAYERS),
                           help="comma list of srl,nerned,cr,time")
    p_capture.add_argument("--out", help="directory for the CSV report")
    _add_resource_flags(p_capture)

    p_anchor = stats_sub.add_parser("anchors", help="anchor accuracy on matched events")
    p_anchor.add_argument("--manifest", required=True)
    p_anchor.add_argument("--system", choices=SYSTEMS, default="dlt")
    p_anchor.add_argument("--out", help="directory for the CSV report")
    _add_resource_flags(p_anchor)

    return parser


def _write_timelines(timelines, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for slug in sorted(timelines):
        path = out_dir / f"{slug}.timeline"
        path.write_text(serialize_timeline(timelines[slug]), encoding="utf-8")
        print(f"wrote {path} ({len(timelines[slug].rows)} rows)", file=sys.stderr)


def cmd_extract(args, parser):
    tables = _load_tables(args, parser, require_matrix=args.system == "cle")
    corpus = harness.load_corpus(args.manifest)
    mode = args.mode
    if mode == "multilingual":
        for language in corpus.languages():
            timelines = harness.run_extraction(corpus, args.system, tables, language=language)
            _write_timelines(timelines, Path(args.out) / language)
    elif mode == "crosslingual":
        timelines = harness.run_extraction(corpus, args.system, tables)
        _write_timelines(timelines, args.out)
    else:
        if mode not in corpus.languages():
            parser.error(f"--mode must be multilingual, crosslingual, or one of "
                         f"{'/'.join(corpus.languages())}; got {mode!r}")
        timelines = harness.run_extraction(corpus, args.system, tables, language=mode)
        _write_timelines(timelines, args.out)
    return EXIT_OK


def _read_timeline_dir(directory):
    timelines = {}
    for file in sorted(Path(directory).glob("*.timeline")):
        timelines[file.stem] = parse_timeline(file.read_text(encoding="utf-8"),
                                              source=str(file))
    return timelines


def cmd_score(args, parser):
    gold = _read_timeline_dir(args.gold_dir)
    if not gold:
        raise DataError(f"no .timeline files under {args.gold_dir}")
    system = _read_timeline_dir(args.system_dir)
    extra = sorted(set(system) - set(gold))
    if extra:
        print(f"warning: system timelines without gold counterpart ignored: "
              f"{', '.join(extra)}", file=sys.stderr)

    per_rows = []
    corpus_rows = []
    for mode in args.metric:
        rows, corpus_score = harness.score_run(system, gold, mode)
        for slug, pair, warning in rows:
            if warning:
                print(f"warning: {warning}", file=sys.stderr)
            per_rows.append((slug, mode, pair))
        if args.average == "event-weighted":
            weights = [len(gold[slug].mentions()) for slug, _, _ in rows]
            headline = weighted_f1_mean([pair for _, pair, _ in rows], weights)
            corpus_rows.append((mode, corpus_score, headline))
        else:
            corpus_rows.append((mode, corpus_score, None))

    print(f"{'timeline':<24} {'metric':<8} {'P':>7} {'R':>7} {'F1':>7}")
    for slug, mode, pair in per_rows:
        print(f"{slug:<24} {mode:<8} {100 * pair.precision:>7.2f} "
              f"{100 * pair.recall:>7.2f} {100 * pair.f1:>7.2f}")
    for mode, corpus_score, headline in corpus_rows:
        line = (f"{'micro average':<24} {mode:<8} {100 * corpus_score.precision:>7.2f} "
                f"{100 * corpus_score.recall:>7.2f} {100 * corpus_score.f1:>7.2f}")
        if headline is not None:
            line += f"   event-weighted F1 {100 * headline:.2f}"
        print(line)

    if args.out:
        _write_csv(Path(args.out) / "scores.csv",
                   ["timeline", "metric", "sys_reduced", "ref_reduced",
                    "precision_matched", "recall_matched", "precision", "recall", "f1"],
                   [[slug, mode, pair.sys_reduced, pair.ref_reduced,
                     pair.precision_matched, pair.recall_matched,
                     _fmt(pair.precision), _fmt(pair.recall), _fmt(pair.f1)]
                    for slug, mode, pair in per_rows])
        _write_csv(Path(args.out) / "corpus.csv",
                   ["metric", "sys_reduced", "ref_reduced", "precision_matched",
                    "recall_matched", "precision", "recall", "f1"],
                   [[mode, score.sys_reduced, score.ref_reduced, score.precision_matched,
                     score.recall_matched, _fmt(score.precision), _fmt(score.recall),
                     _fmt(score.f1)]
                    for mode, score, _ in corpus_rows])
    return EXIT_OK


def cmd_experiment_5050(args, parser):
    tables = _load_tables(args, parser, require_matrix="cle" in args.systems)
    corpus = harness.load_corpus(args.manifest)
    splits, summaries, ttests = harness.run_split_experiment(
        corpus, tables, seed=args.seed, n=args.n,
        systems=args.systems, modes=args.metrics, jobs=args.jobs)
    _write_csv(Path(args.out) / "splits.csv",
               ["split", "system", "metric", "precision", "recall", "f1"],
               [[index, system, mode, _fmt(s.precision), _fmt(s.recall), _fmt(s.f1)]
                for index, system, mode, s in splits])
    _write_csv(Path(args.out) / "summary.csv",
               ["system", "metric", "score", "min", "q1", "median", "q3", "max", "mean"],
               [[system, mode, kind, _fmt(st.minimum), _fmt(st.q1), _fmt(st.median),
                 _fmt(st.q3), _fmt(st.maximum), _fmt(st.mean)]
                for system, mode, kind, st in summaries])
    _write_csv(Path(args.out) / "ttests.csv",
               ["metric", "system_a", "system_b", "t", "p", "degenerate"],
               [[mode, a, b, _fmt(r.statistic), _fmt(r.p_value), int(r.degenerate)]
                for mode, a, b, r in ttests])
    for mode, a, b, r in ttests:
        print(f"paired t-test {a} vs {b} ({mode} F1): t={r.statistic:.3f} p={r.p_value:.2e}"
              + (" (degenerate)" if r.degenerate else ""))
    return EXIT_OK


def cmd_experiment_sweep(args, parser):
    tables = _load_tables(args, parser, require_matrix="cle" in args.systems)
    corpus = harness.load_corpus(args.manifest)
    rows = harness.run_sweep(corpus, tables, variant=args.variant, seed=args.seed,
                             systems=args.systems, sets_per_point=args.sets_per_point,
                             jobs=args.jobs)
    _write_csv(Path(args.out) / "sweep.csv",
               ["variant", "percentage", "system", "metric",
                "mean_precision", "mean_recall", "mean_f1"],
               [[variant, percent, system, mode, _fmt(p), _fmt(r), _fmt(f1)]
                for variant, percent, system, mode, p, r, f1 in rows])
    print(f"wrote {Path(args.out) / 'sweep.csv'} ({len(rows)} points)", file=sys.stderr)
    return EXIT_OK


def cmd_stats_capture(args, parser):
    tables = _load_tables(args, parser)
    corpus = harness.load_corpus(args.manifest)
    stats = harness.event_capture_stats(corpus, tables, args.system, args.mask)
    mask_label = "+".join(sorted(args.mask)) or "none"
    print(f"{'group':<8} {'gold':>6} {'captured':>9} {'percent':>8}   system={args.system} layers={mask_label}")
    for stat in stats:
        print(f"{stat.group:<8} {stat.gold_mentions:>6} {stat.captured:>9} "
              f"{stat.percentage:>8.2f}")
    if args.out:
        _write_csv(Path(args.out) / "capture.csv",
                   ["group", "system", "layers", "gold_mentions", "captured", "percentage"],
                   [[stat.group, args.system, mask_label, stat.gold_mentions,
                     stat.captured, _fmt(stat.percentage)] for stat in stats])
    return EXIT_OK


def cmd_stats_anchors(args, parser):
    tables = _load_tables(args, parser)
    corpus = harness.load_corpus(args.manifest)
    stats = harness.anchor_accuracy(corpus, tables, args.system)
    print(f"{'group':<8} {'matched':>8} {'correct':>8} {'accuracy':>9}   system={args.system}")
    for stat in stats:
        shown = "N/A" if stat.accuracy is None else f"{stat.accuracy:.4f}"
        print(f"{stat.group:<8} {stat.matched:>8} {stat.correct:>8} {shown:>9}")
    if args.out:
        _write_csv(Path(args.out) / "anchor_accuracy.csv",
                   ["group", "system", "matched", "correct", "accuracy"],
                   [[stat.group, args.system, stat.matched, stat.correct,
                     "NA" if stat.accuracy is None else _fmt(stat.accuracy)]
                    for stat in stats])
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "extract":
            return cmd_extract(args, parser)
        if args.command == "score":
            return cmd_score(args, parser)
        if args.command == "experiment":
            if args.protocol == "5050":
                return cmd_experiment_5050(args, parser)
            return cmd_experiment_sweep(args, parser)
        if args.command == "stats":
            if args.diagnostic == "capture":
                return cmd_stats_capture(args, parser)
            return cmd_stats_anchors(args, parser)
        parser.error(f"unknown command {args.command!r}")
    except (ParseError, DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
