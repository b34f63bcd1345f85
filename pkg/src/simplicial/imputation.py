"""Missing-citation imputation: damage protocol, metrics, baselines, experiments."""

from __future__ import annotations

import logging
import math
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO

import numpy as np

from .complex import cofaces, faces
from .ingest import CitationComplex
from .seeding import derive_seed
from .snn import SnnModel, TrainConfig, init_model, model_forward, standardization, train
from .spectral import hodge_laplacian

log = logging.getLogger(__name__)

DEFAULT_RATES = (0.1, 0.2, 0.3, 0.4, 0.5)
METHODS = ("snn", "global_mean", "global_median", "neighbors_mean")


@dataclass(frozen=True)
class ImputationTask:
    """A cochain with some entries hidden and replaced by the median of the rest."""

    true: np.ndarray
    damaged: np.ndarray
    known_mask: np.ndarray
    dimension: int = 0

    @property
    def missing_mask(self) -> np.ndarray:
        return ~self.known_mask


def n_missing(rate: float, n: int) -> int:
    return max(1, int(round(rate * n)))


def damage(values, rate: float, seed: int, dimension: int = 0) -> ImputationTask:
    """Hide ``round(rate * n)`` entries (at least one) chosen uniformly at random."""
    true = np.asarray(getattr(values, "values", values), dtype=float)
    n = len(true)
    if n < 2:
        raise ValueError("need at least two values to damage")
    if not 0.0 < rate < 1.0:
        raise ValueError(f"missing rate must lie in (0, 1), got {rate}")
    k = n_missing(rate, n)
    if k >= n:
        raise ValueError(f"rate {rate} would hide all {n} values")
    rng = np.random.default_rng(seed)
    missing = rng.choice(n, size=k, replace=False)
    known = np.ones(n, dtype=bool)
    known[missing] = False
    damaged = true.copy()
    damaged[~known] = np.median(true[known])
    return ImputationTask(true, damaged, known, dimension)


def _missing(true, known_mask) -> np.ndarray:
    missing = ~np.asarray(known_mask, dtype=bool)
    if not missing.any():
        raise ValueError("no missing entries to evaluate")
    return missing


def accuracy(imputed, true, known_mask) -> float:
    """Percentage of missing entries imputed within 10% of the true value (inclusive)."""
    imputed, true = np.asarray(imputed, dtype=float), np.asarray(true, dtype=float)
    missing = _missing(true, known_mask)
    ok = np.abs(imputed[missing] - true[missing]) <= 0.10 * np.abs(true[missing])
    return 100.0 * float(ok.mean())


def abs_error_distribution(imputed, true, known_mask) -> np.ndarray:
    imputed, true = np.asarray(imputed, dtype=float), np.asarray(true, dtype=float)
    missing = _missing(true, known_mask)
    return np.abs(imputed[missing] - true[missing])


def error_histogram(errors, bin_width: float = 1.0) -> list[tuple[float, float, int]]:
    """``(low, high, count)`` rows over half-open bins ``[low, high)`` starting at 0."""
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        return []
    n_bins = int(math.floor(errors.max() / bin_width)) + 1
    counts = np.bincount(np.floor(errors / bin_width).astype(int), minlength=n_bins)
    return [(i * bin_width, (i + 1) * bin_width, int(c)) for i, c in enumerate(counts)]


def baseline_global(task: ImputationTask, statistic: str = "median") -> np.ndarray:
    known = task.true[task.known_mask]
    if statistic == "mean":
        fill = float(np.mean(known))
    elif statistic == "median":
        fill = float(np.median(known))
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    out = task.true.copy()
    out[task.missing_mask] = fill
    return out


def baseline_neighbors_mean(
    task: ImputationTask,
    citation_complex: CitationComplex,
    masks: Optional[dict[int, np.ndarray]] = None,
) -> np.ndarray:
    """Mean of the known values on the faces and cofaces of each missing simplex.

    ``masks`` optionally marks known entries in neighbouring dimensions;
    by default they are all known. Simplices with no usable neighbour get
    the median of the known values in their own dimension.
    """
    cx = citation_complex.complex
    k = task.dimension
    masks = dict(masks or {})
    masks.setdefault(k, task.known_mask)
    level = cx.simplices[k]
    fallback = float(np.median(task.true[task.known_mask]))
    out = task.true.copy()

    def usable(s):
        d, pos = cx.index[s]
        m = masks.get(d)
        if m is not None and not m[pos]:
            return None
        return citation_complex.cochains[d].values[pos]

    n_fallback = 0
    for pos in np.flatnonzero(task.missing_mask):
        s = level[pos]
        vals = [v for nb in faces(s) + cofaces(cx, s) if (v := usable(nb)) is not None]
        if vals:
            out[pos] = float(np.mean(vals))
        else:
            out[pos] = fallback
            n_fallback += 1
    if n_fallback:
        log.info("neighbors mean fell back to the median for %d simplices", n_fallback)
    return out


@dataclass
class MetricsRow:
    method: str
    dimension: int
    rate: float
    sample: int
    accuracy: float
    mean_abs_error: float


@dataclass
class MetricsReport:
    rows: list[MetricsRow] = field(default_factory=list)
    errors: dict[tuple[str, float, int], np.ndarray] = field(default_factory=dict)
    losses: dict[tuple[float, int], list[float]] = field(default_factory=dict)
    models: dict[tuple[float, int], SnnModel] = field(default_factory=dict)

    def accuracies(self, method: str, rate: float) -> list[float]:
        return [r.accuracy for r in self.rows if r.method == method and r.rate == rate]

    def summary(self) -> list[tuple[str, int, float, float, float]]:
        """``(method, dimension, rate, mean, std)`` per method and rate; std is the sample std."""
        out = []
        keys = sorted({(r.method, r.dimension, r.rate) for r in self.rows},
                      key=lambda t: (t[2], _method_order(t[0]), t[1]))
        for method, dim, rate in keys:
            accs = [r.accuracy for r in self.rows if (r.method, r.dimension, r.rate) == (method, dim, rate)]
            std = statistics.stdev(accs) if len(accs) > 1 else 0.0
            out.append((method, dim, rate, statistics.fmean(accs), std))
        return out

    def write_csv(self, stream: TextIO) -> None:
        stream.write("method,dimension,rate,sample,accuracy,mean_abs_error\n")
        for r in self.rows:
            stream.write(f"{r.method},{r.dimension},{r.rate!r},{r.sample},{r.accuracy!r},{r.mean_abs_error!r}\n")


def _method_order(m: str) -> int:
    return METHODS.index(m) if m in METHODS else len(METHODS)


def _score(report: MetricsReport, method: str, task: ImputationTask, imputed, rate: float, sample: int) -> None:
    err = abs_error_distribution(imputed, task.true, task.known_mask)
    report.rows.append(MetricsRow(method, task.dimension, rate, sample,
                                  accuracy(imputed, task.true, task.known_mask), float(err.mean())))
    report.errors[(method, rate, sample)] = err


def _baselines(report, task, citation_complex, rate, sample) -> None:
    _score(report, "global_mean", task, baseline_global(task, "mean"), rate, sample)
    _score(report, "global_median", task, baseline_global(task, "median"), rate, sample)
    _score(report, "neighbors_mean", task, baseline_neighbors_mean(task, citation_complex), rate, sample)


def _train_snn(laplacian, task: ImputationTask, config: TrainConfig, seed: int):
    model = init_model(config.widths, config.degree, config.slope, seed=seed, dimension=task.dimension)
    return train(model, laplacian, task.damaged, task.true, task.known_mask, config)


def run_experiment(
    citation_complex: CitationComplex,
    dimension: int,
    rates: Sequence[float] = DEFAULT_RATES,
    n_samples: int = 5,
    config: Optional[TrainConfig] = None,
    seed: int = 0,
    baselines_only: bool = False,
) -> MetricsReport:
    """Damage, impute and score every (rate, sample) cell.

    Cell ``(r, s)`` damages with ``derive_seed(seed, "damage", r, s)`` and
    initialises the network with ``derive_seed(seed, "init", r, s)``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    config = config or TrainConfig()
    values = citation_complex.cochain(dimension)
    lap = None if baselines_only else hodge_laplacian(citation_complex.complex, dimension,
                                                      normalize=config.normalize_laplacian)
    report = MetricsReport()
    for ri, rate in enumerate(rates):
        for s in range(n_samples):
            task = damage(values, rate, derive_seed(seed, "damage", ri, s), dimension)
            if not baselines_only:
                model, history = _train_snn(lap, task, config, derive_seed(seed, "init", ri, s))
                _score(report, "snn", task, model_forward(model, lap, task.damaged), rate, s)
                report.losses[(rate, s)] = history
                report.models[(rate, s)] = model
            _baselines(report, task, citation_complex, rate, s)
    return report


def transfer_experiment(
    train_complex: CitationComplex,
    eval_complex: CitationComplex,
    dimension: int,
    rate: float,
    config: Optional[TrainConfig] = None,
    seed: int = 0,
    n_samples: int = 1,
    rate_index: int = 0,
) -> MetricsReport:
    """Train on ``train_complex``, impute on ``eval_complex`` with the frozen model.

    Seeds follow :func:`run_experiment` so that passing the same complex twice
    reproduces the in-domain cell for ``rate_index``.
    """
    config = config or TrainConfig()
    lap_train = hodge_laplacian(train_complex.complex, dimension, normalize=config.normalize_laplacian)
    lap_eval = hodge_laplacian(eval_complex.complex, dimension, normalize=config.normalize_laplacian)
    report = MetricsReport()
    for s in range(n_samples):
        damage_seed = derive_seed(seed, "damage", rate_index, s)
        source = damage(train_complex.cochain(dimension), rate, damage_seed, dimension)
        target = damage(eval_complex.cochain(dimension), rate, damage_seed, dimension)
        model, history = _train_snn(lap_train, source, config, derive_seed(seed, "init", rate_index, s))
        if config.standardize:
            # restandardize against the evaluation complex's known values
            model.shift, model.scale = standardization(target.damaged, target.known_mask)
        _score(report, "snn", target, model_forward(model, lap_eval, target.damaged), rate, s)
        report.losses[(rate, s)] = history
        report.models[(rate, s)] = model
        _baselines(report, target, eval_complex, rate, s)
    return report
