"""Dataset ingestion, method x seed experiment grids and report emission."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from . import gmm, kmeans
from .covariance import RegularizationMethod
from .datagen import DatasetSpec, generate
from .errors import InsufficientData, InvalidParameter, InvalidState, ParseError, RegmixError
from .gmm import FitConfig
from .metrics import ari, centroid_index, class_means, nmi, wilcoxon_signed_rank
from .search import GMMLocalSearch, KMeansLocalSearch, SearchConfig, hgs, multi_start, random_swap

log = logging.getLogger(__name__)

METHODS = ("kmeans", "kmeans_hg", "gmm", "gmm_ms", "gmm_rs", "gmm_hg")


# --------------------------------------------------------------------------- datasets


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_dataset(path, has_labels=True):
    """Read a comma-separated numeric table.

    A first row containing any non-numeric cell is treated as a header. When
    ``has_labels`` is set the last column holds nonnegative integer labels.
    Returns ``(data, labels)`` with ``labels`` None when absent.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    rows = [(i, r) for i, r in enumerate(csv.reader(io.StringIO(text)), start=1) if any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise ParseError(f"{path} holds no data rows")
    width = len(rows[0][1])
    min_width = 2 if has_labels else 1
    if width < min_width:
        raise ParseError("too few columns", row=rows[0][0])
    values = np.empty((len(rows), width))
    for r, (lineno, cells) in enumerate(rows):
        if len(cells) != width:
            raise ParseError(f"expected {width} cells, found {len(cells)}", row=lineno)
        for col, cell in enumerate(cells):
            try:
                values[r, col] = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r}", row=lineno, column=col + 1) from None
            if not math.isfinite(values[r, col]):
                raise ParseError(f"non-finite cell {cell!r}", row=lineno, column=col + 1)
    if not has_labels:
        return values, None
    raw = values[:, -1]
    if np.any(raw != np.round(raw)) or np.any(raw < 0):
        bad = int(np.flatnonzero((raw != np.round(raw)) | (raw < 0))[0])
        raise ParseError("labels must be nonnegative integers", row=rows[bad][0], column=width)
    return values[:, :-1], raw.astype(int)


def save_dataset(path, data, labels=None, header=True):
    data = np.asarray(data, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            names = [f"x{j + 1}" for j in range(data.shape[1])]
            writer.writerow(names + (["label"] if labels is not None else []))
        for i, row in enumerate(data):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            writer.writerow(cells)


def standardize(data):
    """Z-score each feature; constant features are only centered."""
    data = np.asarray(data, dtype=float)
    sd = data.std(axis=0)
    sd[sd == 0] = 1.0
    return (data - data.mean(axis=0)) / sd


# --------------------------------------------------------------------------- configs


@dataclass(frozen=True)
class MethodSpec:
    method: str
    regularizer: RegularizationMethod = RegularizationMethod()

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameter(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")

    @property
    def tag(self) -> str:
        if self.method.startswith("kmeans"):
            return self.method
        return f"{self.method}_{self.regularizer.tag}"

    @classmethod
    def parse(cls, item) -> "MethodSpec":
        """Accept ``"gmm_hg"``, ``"gmm_hg:shrunk"`` or ``{"method": ..., "regularizer": ...}``."""
        if isinstance(item, MethodSpec):
            return item
        if isinstance(item, dict):
            return cls(item["method"], RegularizationMethod.parse(item.get("regularizer", "empirical")))
        name, _, reg = str(item).partition(":")
        return cls(name, RegularizationMethod.parse(reg or "empirical"))


@dataclass
class ExperimentConfig:
    dataset: Union[str, DatasetSpec]
    methods: List[MethodSpec]
    k: Optional[int] = None
    runs: int = 10
    seeds: Optional[List[int]] = None
    has_labels: bool = True
    standardize: bool = False
    fit: FitConfig = FitConfig()
    search: SearchConfig = SearchConfig()
    reference: Optional[str] = None

    def __post_init__(self):
        self.methods = [MethodSpec.parse(m) for m in self.methods]
        if not self.methods:
            raise InvalidParameter("at least one method is required")
        if self.runs < 1:
            raise InvalidParameter("runs must be >= 1")
        if self.seeds is None:
            self.seeds = list(range(1, self.runs + 1))
        if isinstance(self.dataset, DatasetSpec) and self.k is None:
            self.k = self.dataset.k
        if self.k is None or self.k < 1:
            raise InvalidParameter("k must be given and positive")

    @classmethod
    def from_dict(cls, doc, base_dir=None) -> "ExperimentConfig":
        doc = dict(doc)
        ds = doc.pop("dataset")
        if isinstance(ds, dict) and "synthetic" in ds:
            dataset = DatasetSpec(**ds["synthetic"])
        else:
            path = ds["path"] if isinstance(ds, dict) else ds
            if isinstance(ds, dict) and "has_labels" in ds:
                doc.setdefault("has_labels", ds["has_labels"])
            if base_dir is not None and not Path(path).is_absolute() and not Path(path).exists():
                path = str(Path(base_dir) / path)
            dataset = path
        fit = FitConfig(**doc.pop("fit", {}))
        search = doc.pop("search", {})
        search = SearchConfig(**search)
        return cls(dataset=dataset, fit=fit, search=search, **doc)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
            return cls.from_dict(doc, base_dir=path.parent)
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"bad experiment config {path}: {exc}") from exc


@dataclass
class RunRecord:
    method: str
    seed: int
    fitness: float = math.nan
    ari: Optional[float] = None
    nmi: Optional[float] = None
    ci: Optional[int] = None
    wall_time_seconds: float = 0.0
    failed: bool = False
    error: str = ""

    def metrics(self):
        return {k: v for k, v in asdict(self).items() if k != "wall_time_seconds"}


# --------------------------------------------------------------------------- running


def _local_search(spec: MethodSpec, fit):
    if spec.method.startswith("kmeans"):
        return KMeansLocalSearch(fit)
    return GMMLocalSearch(spec.regularizer, fit)


def fit_method(data, k, spec: MethodSpec, seed, fit=FitConfig(), search=SearchConfig()):
    """Run one method once; returns the fitted solution."""
    spec = MethodSpec.parse(spec)
    ls = _local_search(spec, fit)
    cfg = SearchConfig(search.n_it, search.pi_min, search.pi_max, seed)
    strategy = spec.method.partition("_")[2]
    if strategy == "":
        rng = np.random.default_rng(seed)
        return ls.improve(data, ls.init(data, k, rng))
    driver = {"ms": multi_start, "rs": random_swap, "hg": hgs}[strategy]
    return driver(data, k, ls, cfg).best


def predict_labels(data, sol):
    if isinstance(sol, kmeans.CentroidSolution):
        return kmeans.assign(data, sol.centers)[0]
    return gmm.predict(data, sol)


def run_one(data, labels, k, spec, seed, fit=FitConfig(), search=SearchConfig()) -> RunRecord:
    spec = MethodSpec.parse(spec)
    record = RunRecord(spec.tag, int(seed))
    start = time.perf_counter()
    try:
        sol = fit_method(data, k, spec, seed, fit, search)
    except RegmixError as exc:
        record.wall_time_seconds = time.perf_counter() - start
        record.failed = True
        record.error = f"{type(exc).__name__}: {exc}"
        log.warning("%s seed %s failed: %s", spec.tag, seed, record.error)
        return record
    record.wall_time_seconds = time.perf_counter() - start
    record.fitness = float(sol.fitness)
    if labels is not None:
        pred = predict_labels(data, sol)
        record.ari = ari(labels, pred)
        record.nmi = nmi(labels, pred)
        truth_centers = class_means(data, labels)
        if truth_centers.shape == sol.means.shape:
            record.ci = centroid_index(truth_centers, sol.means)
    return record


def prepare_data(config: ExperimentConfig):
    if isinstance(config.dataset, DatasetSpec):
        data, truth = generate(config.dataset)
        labels = truth.labels
    else:
        data, labels = load_dataset(config.dataset, config.has_labels)
    if config.standardize:
        data = standardize(data)
    return data, labels


def run_experiment(config: ExperimentConfig, data=None, labels=None) -> List[RunRecord]:
    """Every (method, seed) cell of the grid, sorted by method tag then seed."""
    if data is None:
        data, labels = prepare_data(config)
    records = []
    for spec in config.methods:
        for seed in config.seeds:
            records.append(run_one(data, labels, config.k, spec, seed, config.fit, config.search))
    records.sort(key=lambda r: (r.method, r.seed))
    return records


# --------------------------------------------------------------------------- reports

SUMMARY_FIELDS = (
    "method", "runs", "failed",
    "ari_mean", "ari_std", "nmi_mean", "nmi_std", "ci_mean", "ci_std",
    "fitness_mean", "time_mean", "wilcoxon_p",
)


def _stats(values):
    vals = [float(v) for v in values if v is not None and not math.isnan(float(v))]
    if not vals:
        return None, None
    arr = np.array(vals)
    return float(arr.mean()), float(arr.std())


def summarize(records, reference=None):
    """Per-method aggregates over successful runs, ordered by method tag."""
    if not records:
        raise InvalidState("no records to summarize")
    by_method = {}
    for r in records:
        by_method.setdefault(r.method, []).append(r)
    rows = []
    ref_ari = None
    if reference is not None and reference in by_method:
        ref_ari = {r.seed: r.ari for r in by_method[reference] if not r.failed and r.ari is not None}
    for method in sorted(by_method):
        group = sorted(by_method[method], key=lambda r: r.seed)
        ok = [r for r in group if not r.failed]
        row = {"method": method, "runs": len(ok), "failed": len(group) - len(ok)}
        for name in ("ari", "nmi", "ci", "fitness"):
            mean, std = _stats(getattr(r, name) for r in ok)
            row[f"{name}_mean"] = mean
            if name != "fitness":
                row[f"{name}_std"] = std
        row["time_mean"] = _stats(r.wall_time_seconds for r in ok)[0]
        row["wilcoxon_p"] = None
        if ref_ari is not None and method != reference:
            seeds = sorted(s for s in ref_ari if any(r.seed == s and r.ari is not None for r in ok))
            mine = {r.seed: r.ari for r in ok}
            try:
                row["wilcoxon_p"] = wilcoxon_signed_rank(
                    [ref_ari[s] for s in seeds], [mine[s] for s in seeds]
                )
            except InsufficientData:
                row["wilcoxon_p"] = "insufficient_data"
        rows.append(row)
    return rows


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def format_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_FIELDS)
    for row in rows:
        writer.writerow([_cell(row.get(f)) for f in SUMMARY_FIELDS])
    return buf.getvalue()


def emit_report(records, path, fmt="csv", reference=None):
    """Write the per-method summary to ``path`` as CSV or JSON.

    The JSON variant also carries every run record.
    """
    rows = summarize(records, reference)
    if fmt == "csv":
        text = format_csv(rows)
    elif fmt == "json":
        doc = {
            "reference": reference,
            "summary": rows,
            "runs": [asdict(r) for r in sorted(records, key=lambda r: (r.method, r.seed))],
        }
        text = json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"
    else:
        raise InvalidParameter(f"unknown report format {fmt!r}")
    Path(path).write_text(text)
    return rows


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(type(obj))
