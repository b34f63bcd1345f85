"""Command-line entry point: ``simplicial {ingest,synth,sample,train,report}``.

Every stage reads and writes plain files so stages can be rerun on their own.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import statistics
import sys
import time
from collections import defaultdict
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Optional, Sequence

from .imputation import DEFAULT_RATES, METHODS, MetricsReport, error_histogram, run_experiment, transfer_experiment
from .ingest import complex_stats, filter_corpus, parse_corpus, project_to_complex, sample_papers, write_corpus
from .seeding import derive_seed
from .snn import TrainConfig, TrainingDivergedError, write_model
from .storage import atomic_write_text, load_citation_complex, save_citation_complex, sha256_file
from .synthetic import synthetic_corpus

log = logging.getLogger("simplicial")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3
METRIC_COLUMNS = ("method", "dimension", "rate", "sample", "accuracy", "mean_abs_error")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def _float_list(raw: str) -> list[float]:
    try:
        return [float(t) for t in raw.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}") from None


def _int_list(raw: str) -> list[int]:
    try:
        return [int(t) for t in raw.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}") from None


class Run:
    """Collects provenance for one command and writes ``manifest.json``."""

    def __init__(self, command: str, args: argparse.Namespace, out_dir: Path):
        self.command = command
        self.out_dir = out_dir
        self.config = {k: (str(v) if isinstance(v, Path) else v)
                       for k, v in sorted(vars(args).items()) if k != "func"}
        self.inputs: dict[str, str] = {}
        self.outputs: list[Path] = []
        self.timings: dict[str, float] = {}
        self._t = time.perf_counter()

    def input(self, path: Path) -> None:
        if path.is_dir():
            for f in sorted(path.iterdir()):
                if f.is_file() and f.name != "manifest.json":
                    self.inputs[str(f)] = sha256_file(f)
        else:
            self.inputs[str(path)] = sha256_file(path)

    def stage(self, name: str) -> None:
        now = time.perf_counter()
        self.timings[name] = round(now - self._t, 6)
        self._t = now

    def finish(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        cfg = self.out_dir / "config.json"
        atomic_write_text(cfg, json.dumps({"command": self.command, **self.config}, indent=2, sort_keys=True, default=str) + "\n")
        files = sorted(set(self.outputs + [cfg]))
        manifest = {
            "command": self.command,
            "tool_version": _tool_version(),
            "config": self.config,
            "inputs": self.inputs,
            "outputs": {str(p.relative_to(self.out_dir)): sha256_file(p) for p in files},
            "timings_s": self.timings,
        }
        atomic_write_text(self.out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def _read_corpus(path: Path, fmt: str):
    try:
        with open(path) as fh:
            return parse_corpus(fh, fmt)
    except OSError as exc:
        raise DataError(f"cannot read corpus {path}: {exc}") from exc


def cmd_ingest(args) -> int:
    corpus = _read_corpus(args.corpus, args.format)
    kept = filter_corpus(corpus, args.min_citations, args.max_authors)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    write_corpus(kept, buf)
    atomic_write_text(out, buf.getvalue())
    if len(corpus) == 0:
        log.warning("input corpus %s is empty", args.corpus)
    print(f"papers read: {len(corpus)}  malformed skipped: {corpus.skipped}  kept after filter: {len(kept)}")
    return 0


def cmd_synth(args) -> int:
    corpus = synthetic_corpus(args.papers, args.max_authors, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    write_corpus(corpus, buf)
    atomic_write_text(out, buf.getvalue())
    print(f"wrote {len(corpus)} synthetic papers to {out}")
    return 0


def cmd_sample(args) -> int:
    out = Path(args.out)
    run = Run("sample", args, out)
    run.input(args.corpus)
    corpus = _read_corpus(args.corpus, args.format)
    if len(corpus) == 0:
        raise DataError(f"corpus {args.corpus} is empty")
    papers = sample_papers(corpus, args.walk_length, derive_seed(args.seed, "walk"))
    run.stage("sample")
    cc = project_to_complex(papers)
    run.outputs += save_citation_complex(cc, out)
    ids = out / "papers.txt"
    atomic_write_text(ids, "".join(f"{p.paper_id}\n" for p in papers))
    run.outputs.append(ids)
    run.stage("project")
    run.finish()
    counts = complex_stats(cc)
    print(f"sampled {len(papers)} distinct papers (walk length {args.walk_length})")
    print("dimension " + " ".join(f"{d:>6}" for d in range(len(counts))))
    print("simplices " + " ".join(f"{c:>6}" for c in counts))
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        iterations=args.iterations,
        lr=args.lr,
        seed=args.seed,
        widths=tuple(args.layers),
        degree=args.degree,
        slope=args.slope,
        standardize=args.standardize,
        normalize_laplacian=args.normalize_laplacian,
    )


def _write_report(report: MetricsReport, out: Path, bin_width: float) -> list[Path]:
    paths = []
    buf = io.StringIO()
    report.write_csv(buf)
    paths.append(out / "metrics.csv")
    atomic_write_text(paths[-1], buf.getvalue())

    lines = ["method,rate,sample,bin_low,bin_high,count\n"]
    for (method, rate, sample), err in report.errors.items():
        for lo, hi, c in error_histogram(err, bin_width):
            lines.append(f"{method},{rate!r},{sample},{lo!r},{hi!r},{c}\n")
    paths.append(out / "histogram.csv")
    atomic_write_text(paths[-1], "".join(lines))

    if report.losses:
        lines = ["rate,sample,iteration,loss\n"]
        for (rate, sample), hist in report.losses.items():
            lines += [f"{rate!r},{sample},{i},{v!r}\n" for i, v in enumerate(hist)]
        paths.append(out / "losses.csv")
        atomic_write_text(paths[-1], "".join(lines))

    for (rate, sample), model in report.models.items():
        buf = io.StringIO()
        write_model(model, buf)
        paths.append(out / "models" / f"model_rate{rate:g}_sample{sample}.txt")
        paths[-1].parent.mkdir(parents=True, exist_ok=True)
        atomic_write_text(paths[-1], buf.getvalue())
    return paths


def cmd_train(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run = Run("train", args, out)
    run.input(args.complex)
    config = _train_config(args)
    cc = load_citation_complex(args.complex)
    if args.dimension not in cc.cochains:
        raise DataError(f"complex {args.complex} has no cochain in dimension {args.dimension}")
    run.stage("load")
    if args.transfer is not None:
        run.input(args.transfer)
        target = load_citation_complex(args.transfer)
        report = MetricsReport()
        for ri, rate in enumerate(args.rates):
            part = transfer_experiment(cc, target, args.dimension, rate, config, args.seed,
                                       n_samples=args.samples, rate_index=ri)
            report.rows += part.rows
            report.errors.update(part.errors)
            report.losses.update(part.losses)
            report.models.update(part.models)
    else:
        report = run_experiment(cc, args.dimension, args.rates, args.samples, config, args.seed,
                                baselines_only=args.baselines_only)
    run.stage("experiment")
    run.outputs += _write_report(report, out, args.bin_width)
    run.finish()
    _print_summary(report.summary())
    return 0


def _print_summary(rows) -> None:
    print(f"{'method':<16}{'dim':>4}{'rate':>7}{'accuracy':>20}")
    for method, dim, rate, mean, std in rows:
        print(f"{method:<16}{dim:>4}{rate:>7.2f}{mean:>12.2f} ± {std:<6.2f}")


def load_metrics(path: Path) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in METRIC_COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read metrics file {path}: {exc}") from exc
    try:
        return [{"method": r["method"], "dimension": int(r["dimension"]), "rate": float(r["rate"]),
                 "sample": int(r["sample"]), "accuracy": float(r["accuracy"]),
                 "mean_abs_error": float(r["mean_abs_error"])} for r in rows]
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed row ({exc})") from exc


def aggregate_metrics(paths: Sequence[Path]) -> list[tuple[str, int, float, float, float, int]]:
    """``(method, dimension, rate, mean, std, n)`` over all rows of all files."""
    rows, dims = [], set()
    for path in paths:
        file_rows = load_metrics(path)
        dims.update(r["dimension"] for r in file_rows)
        if len(dims) > 1:
            raise DataError(f"{path}: dimension differs from earlier metrics files ({sorted(dims)})")
        rows += file_rows
    groups: dict[tuple[str, int, float], list[float]] = defaultdict(list)
    for r in rows:
        groups[(r["method"], r["dimension"], r["rate"])].append(r["accuracy"])
    order = lambda k: (k[2], METHODS.index(k[0]) if k[0] in METHODS else len(METHODS), k[0])
    out = []
    for key in sorted(groups, key=order):
        accs = groups[key]
        std = statistics.stdev(accs) if len(accs) > 1 else 0.0
        out.append((*key, statistics.fmean(accs), std, len(accs)))
    return out


def cmd_report(args) -> int:
    summary = aggregate_metrics(args.metrics)
    _print_summary([row[:5] for row in summary])
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        run = Run("report", args, out)
        for p in args.metrics:
            run.input(p)
        lines = ["method,dimension,rate,mean,std,n\n"]
        lines += [f"{m},{d},{r!r},{mu!r},{sd!r},{n}\n" for m, d, r, mu, sd, n in summary]
        atomic_write_text(out / "summary.csv", "".join(lines))
        methods = sorted({m for m, *_ in summary}, key=lambda m: METHODS.index(m) if m in METHODS else 99)
        table = {(m, r): (mu, sd) for m, _, r, mu, sd, _ in summary}
        rates = sorted({r for _, _, r, *_ in summary})
        header = "rate," + ",".join(f"{m}_mean,{m}_std" for m in methods) + "\n"
        body = []
        for r in rates:
            cells = []
            for m in methods:
                mu, sd = table.get((m, r), (float("nan"), float("nan")))
                cells += [repr(mu), repr(sd)]
            body.append(f"{r!r}," + ",".join(cells) + "\n")
        atomic_write_text(out / "plot_data.csv", header + "".join(body))
        run.outputs += [out / "summary.csv", out / "plot_data.csv"]
        run.finish()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simplicial", description="Simplicial neural networks for citation imputation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse and filter a paper/author corpus")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--format", choices=("s2orc", "tsv"), default="s2orc")
    p.add_argument("--min-citations", type=int, default=5)
    p.add_argument("--max-authors", type=int, default=10)
    p.add_argument("--out", type=Path, required=True, help="filtered corpus (tsv)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="write a seeded synthetic corpus (tsv)")
    p.add_argument("--papers", type=int, default=30)
    p.add_argument("--max-authors", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="random-walk sample and project to a coauthorship complex")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--format", choices=("s2orc", "tsv"), default="tsv")
    p.add_argument("--walk-length", type=int, default=80)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="damage, train, impute and score")
    p.add_argument("--complex", type=Path, required=True, help="directory written by 'sample'")
    p.add_argument("--dimension", type=int, default=1)
    p.add_argument("--rates", type=_float_list, default=list(DEFAULT_RATES))
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--layers", type=_int_list, default=[1, 30, 30, 1])
    p.add_argument("--degree", type=int, default=5)
    p.add_argument("--slope", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--standardize", action="store_true", help="affine-standardize inputs (extension)")
    p.add_argument("--normalize-laplacian", action="store_true", help="divide L by its top eigenvalue (extension)")
    p.add_argument("--baselines-only", action="store_true")
    p.add_argument("--transfer", type=Path, metavar="EVAL_COMPLEX",
                   help="apply the model trained on --complex to this complex")
    p.add_argument("--bin-width", type=float, default=1.0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("report", help="aggregate metrics files")
    p.add_argument("metrics", type=Path, nargs="+")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "samples", 1) < 1:
            raise UsageError("--samples must be at least 1")
        if getattr(args, "iterations", 1) < 1:
            raise UsageError("--iterations must be at least 1")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDivergedError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ValueError, KeyError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
