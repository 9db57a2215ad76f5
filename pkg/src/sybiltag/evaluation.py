"""Datasets, detection metrics, cross-validation and parameter sweeps.

Corpus A mirrors a train/test collection of basic and power-scaling runs;
corpus B holds colluding runs and is only ever used for testing.
"""
import csv
import itertools
import json
import logging
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from . import forest as rf
from .exceptions import ConfigurationError, DomainError
from .scene import ScenarioConfig, generate_trajectories, iter_slot_traces, preset
from .sigproc import build_profiles, trace_signature
from .similarity import EXTRACTORS, METRICS, distance_tensor

logger = logging.getLogger(__name__)

Provenance = namedtuple("Provenance", "corpus scenario window claimed_id")

# (num_legit, num_attackers, num_fake_ids); positives ~61% over one cycle
CORPUS_A_COMPOSITIONS = ((2, 1, 3), (3, 2, 4), (2, 2, 4))
CORPUS_B_COMPOSITION = (2, 2, 4)


@dataclass(frozen=True)
class PipelineConfig:
    profile_length: int = 10
    metric: str = "cosine"
    extraction: str = "min"
    smoothing_window: int = None

    def validate(self):
        p = []
        if self.profile_length < 1:
            p.append(("profile_length", "must be >= 1"))
        if self.metric not in METRICS:
            p.append(("metric", f"must be one of {METRICS}"))
        if self.extraction not in EXTRACTORS:
            p.append(("extraction", f"must be one of {sorted(EXTRACTORS)}"))
        if self.smoothing_window is not None and self.smoothing_window < 1:
            p.append(("smoothing_window", "must be >= 1"))
        if p:
            raise ConfigurationError(p)
        return self


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    provenance: list = field(default_factory=list)
    dropped_windows: int = 0

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float).reshape(len(self.labels), -1)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.provenance and len(self.provenance) != len(self.labels):
            raise ValueError("one provenance record per sample required")

    def __len__(self):
        return len(self.labels)

    @property
    def L(self):
        return self.features.shape[1]

    def subset(self, idx):
        idx = np.asarray(idx)
        prov = [self.provenance[i] for i in idx] if self.provenance else []
        return LabeledDataset(self.features[idx], self.labels[idx], prov)

    @classmethod
    def concat(cls, parts):
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls(np.zeros((0, 0)), np.zeros(0, dtype=np.int64))
        return cls(
            np.concatenate([p.features for p in parts]),
            np.concatenate([p.labels for p in parts]),
            [r for p in parts for r in p.provenance],
            sum(p.dropped_windows for p in parts),
        )

    def write_csv(self, path, provenance_path=None):
        """Features at full precision plus the label; provenance goes to a
        row-aligned sidecar file."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"f_{l + 1}" for l in range(self.L)] + ["label"])
            for x, y in zip(self.features, self.labels):
                w.writerow([repr(float(v)) for v in x] + [int(y)])
        if provenance_path is not None:
            with open(provenance_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(Provenance._fields)
                for rec in self.provenance:
                    w.writerow(rec)

    @classmethod
    def read_csv(cls, path, provenance_path=None):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if not header or header[-1] != "label":
            raise ValueError(f"{path}: last column must be 'label'")
        X = np.array([[float(v) for v in r[:-1]] for r in body]).reshape(len(body), len(header) - 1)
        y = np.array([int(r[-1]) for r in body], dtype=np.int64)
        prov = []
        if provenance_path is not None:
            with open(provenance_path, newline="") as fh:
                prov = [Provenance(r[0], int(r[1]), int(r[2]), r[3]) for r in list(csv.reader(fh))[1:]]
        return cls(X, y, prov)


def scenario_signatures(config, window=None):
    """Run one scenario and extract a signature from every transmission."""
    template = config.template()
    trajectories = generate_trajectories(config)
    stream = []
    for ev, trace in iter_slot_traces(config, trajectories, template):
        sig, _ = trace_signature(trace.samples, template, window)
        stream.append((ev.slot, ev.claimed_id, sig))
    return stream


def dataset_from_signatures(stream, config, pipeline, corpus, scenario):
    profiles = build_profiles(stream, pipeline.profile_length)
    extract = EXTRACTORS[pipeline.extraction]
    X, y, prov = [], [], []
    dropped = 0
    for w in sorted(profiles):
        by_id = profiles[w]
        ids = [cid for cid in config.ids if cid in by_id]
        if len(ids) < 2:
            dropped += 1
            continue
        try:
            tensor = distance_tensor([by_id[cid] for cid in ids], pipeline.metric)
        except DomainError as exc:
            logger.warning("scenario %s window %d dropped: %s", scenario, w, exc)
            dropped += 1
            continue
        for n, cid in enumerate(ids):
            X.append(extract(tensor, n).values)
            y.append(int(config.is_fake(cid)))
            prov.append(Provenance(corpus, scenario, w, cid))
    L = pipeline.profile_length
    return LabeledDataset(np.array(X).reshape(len(X), L), np.array(y, dtype=np.int64), prov, dropped)


def build_dataset(runs, pipeline=PipelineConfig()):
    """``runs``: iterable of ``(corpus, scenario_index, ScenarioConfig)``."""
    pipeline.validate()
    parts = []
    for corpus, scenario, config in runs:
        stream = scenario_signatures(config, pipeline.smoothing_window)
        parts.append(dataset_from_signatures(stream, config, pipeline, corpus, scenario))
    ds = LabeledDataset.concat(parts)
    if ds.dropped_windows:
        logger.warning("%d windows dropped while building the dataset", ds.dropped_windows)
    return ds


def corpus_runs(corpus, base, num_runs, seed=0, attack=None):
    """Scenario configs for a corpus, seeded per run index.

    Corpus A cycles through ``CORPUS_A_COMPOSITIONS`` and alternates basic and
    power-scaling attacks unless ``attack`` pins one. Corpus B uses the
    colluding attack with two attackers sharing four fake IDs.
    """
    runs = []
    for r in range(num_runs):
        run_seed = int(np.random.SeedSequence([seed, ord(corpus), r]).generate_state(1)[0])
        if corpus == "A":
            legit, att, fakes = CORPUS_A_COMPOSITIONS[r % len(CORPUS_A_COMPOSITIONS)]
            mode = attack or ("basic", "power_scaling")[r % 2]
            if mode == "colluding":
                raise ConfigurationError([("attack", "corpus A never contains colluding runs")])
        elif corpus == "B":
            legit, att, fakes = CORPUS_B_COMPOSITION
            mode = "colluding"
        else:
            raise ConfigurationError([("corpus", f"unknown corpus {corpus!r}")])
        cfg = base.with_(num_legit=legit, num_attackers=att, num_fake_ids=fakes,
                         attack_mode=mode, rng_seed=run_seed)
        runs.append((corpus, r, cfg.validate()))
    return runs


@dataclass
class MetricsReport:
    accuracy: float
    tpr: float
    fpr: float
    roc: np.ndarray = None  # (P, 2) rows of (fpr, tpr)
    auroc: float = None
    counts: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "tpr": self.tpr,
            "fpr": self.fpr,
            "auroc": self.auroc,
            "counts": dict(self.counts),
            "roc": None if self.roc is None else [[float(a), float(b)] for a, b in self.roc],
        }


def roc_curve(scores, labels):
    """ROC points over every distinct score used as a ``score >= t`` threshold.

    Starts at (0, 0) and ends at (1, 1).
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    P, N = int(labels.sum()), int((1 - labels).sum())
    if P == 0 or N == 0:
        return None
    pts = [(0.0, 0.0)]
    for t in np.unique(scores)[::-1]:
        pred = scores >= t
        pts.append((float((pred & (labels == 0)).sum() / N), float((pred & (labels == 1)).sum() / P)))
    if pts[-1] != (1.0, 1.0):
        pts.append((1.0, 1.0))
    return np.array(pts)


def trapezoid_area(points):
    x, y = points[:, 0], points[:, 1]
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2))


def compute_metrics(predictions, scores, labels):
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if not len(predictions) == len(labels) == len(scores):
        raise ValueError("predictions, scores and labels must have equal length")
    tp = int(((predictions == 1) & (labels == 1)).sum())
    fn = int(((predictions == 0) & (labels == 1)).sum())
    fp = int(((predictions == 1) & (labels == 0)).sum())
    tn = int(((predictions == 0) & (labels == 0)).sum())
    n = tp + fn + fp + tn
    roc = roc_curve(scores, labels)
    return MetricsReport(
        accuracy=(tp + tn) / n if n else float("nan"),
        tpr=tp / (tp + fn) if tp + fn else float("nan"),
        fpr=fp / (fp + tn) if fp + tn else float("nan"),
        roc=roc,
        auroc=None if roc is None else trapezoid_area(roc),
        counts={"tp": tp, "fn": fn, "fp": fp, "tn": tn},
    )


def evaluate(model, dataset):
    scores = rf.predict_score(model, dataset.features)
    preds = rf.predict(model, dataset.features)
    return compute_metrics(preds, scores, dataset.labels), preds, scores


def stratified_folds(labels, folds, rng):
    """Fold index per sample; class ratio kept per fold, sizes within one."""
    labels = np.asarray(labels, dtype=np.int64)
    order = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in (1, 0)])
    assign = np.empty(len(labels), dtype=np.int64)
    assign[order] = np.arange(len(order)) % folds
    for f in range(folds):
        present = set(labels[assign == f].tolist())
        if present != {0, 1}:
            raise ValueError(f"fold {f} lacks a class; dataset cannot be stratified into {folds} folds")
    return assign


@dataclass
class CrossValidationResult:
    folds: list
    mean: MetricsReport
    assignment: np.ndarray


def _mean_report(reports, grid_curves):
    def avg(name):
        vals = [getattr(r, name) for r in reports]
        return None if any(v is None for v in vals) else float(np.mean(vals))

    roc = None
    if all(r.roc is not None for r in reports):
        # threshold-averaged curve on the shared vote-fraction grid
        roc = np.vstack([[0.0, 0.0], np.mean(grid_curves, axis=0), [1.0, 1.0]])
    counts = {k: sum(r.counts[k] for r in reports) for k in reports[0].counts}
    return MetricsReport(avg("accuracy"), avg("tpr"), avg("fpr"), roc, avg("auroc"), counts)


def _roc_on_grid(scores, labels, H):
    P, N = labels.sum(), (1 - labels).sum()
    pts = []
    for t in np.arange(H, -1, -1) / H:
        pred = scores >= t - 1e-12
        pts.append(((pred & (labels == 0)).sum() / N, (pred & (labels == 1)).sum() / P))
    return np.array(pts, dtype=float)


def cross_validate(dataset, folds=3, H=30, seed=0, sort_enabled=True, z=None):
    """k-fold CV; the reported mean averages each metric over the folds."""
    rng = np.random.default_rng([seed, 0xF01D])
    assign = stratified_folds(dataset.labels, folds, rng)
    reports, curves = [], []
    for f in range(folds):
        train, test = dataset.subset(np.flatnonzero(assign != f)), dataset.subset(np.flatnonzero(assign == f))
        model = rf.train_forest(train.features, train.labels, H=H, seed=seed + f, sort_enabled=sort_enabled, z=z)
        report, _, scores = evaluate(model, test)
        reports.append(report)
        curves.append(_roc_on_grid(scores, test.labels, H))
    return CrossValidationResult(reports, _mean_report(reports, curves), assign)


# --- sweeps -----------------------------------------------------------------

SWEEP_AXES = ("num_tags", "profile_length", "metric", "attack", "trees", "sort", "extraction")
_DEFAULT_FIXED = {"num_tags": 4, "profile_length": 10, "metric": "cosine", "attack": "mixed",
                  "trees": 30, "sort": True, "extraction": "min"}


def builtin_sweep(name):
    """Sweep specs for the three standard studies."""
    common = {"preset": "office", "scenario": {}, "num_slots": 120, "runs": {"A": 12, "B": 6}}
    if name == "profile_size":
        return dict(common, name=name, evaluate="cv",
                    axes={"num_tags": [2, 3, 4], "profile_length": list(range(2, 17))})
    if name == "metric":
        return dict(common, name=name, evaluate="cv",
                    axes={"metric": list(METRICS), "attack": ["basic", "power_scaling"]})
    if name == "trees":
        return dict(common, name=name, evaluate="corpus_b",
                    axes={"trees": list(range(5, 51, 5)), "sort": [True, False]})
    raise ConfigurationError([("sweep", f"unknown builtin sweep {name!r}")])


def validate_sweep(spec):
    p = []
    axes = spec.get("axes", {})
    for k, v in axes.items():
        if k not in SWEEP_AXES:
            p.append((f"axes.{k}", f"unknown axis; choose from {SWEEP_AXES}"))
        elif not isinstance(v, list) or not v:
            p.append((f"axes.{k}", "must be a nonempty list"))
    for k in spec.get("fixed", {}):
        if k not in SWEEP_AXES:
            p.append((f"fixed.{k}", "unknown parameter"))
    if spec.get("evaluate", "cv") not in ("cv", "corpus_b"):
        p.append(("evaluate", "must be 'cv' or 'corpus_b'"))
    for m in axes.get("metric", []):
        if m not in METRICS:
            p.append(("axes.metric", f"unknown metric {m!r}"))
    for a in axes.get("attack", []):
        if a not in ("mixed", "basic", "power_scaling"):
            p.append(("axes.attack", f"unknown attack setting {a!r}"))
    unknown = set(spec) - {"name", "preset", "scenario", "noise", "num_slots", "runs", "axes", "fixed", "evaluate"}
    p += [(k, "unknown sweep key") for k in sorted(unknown)]
    if p:
        raise ConfigurationError(p)
    return spec


class _SweepCache:
    """Memoises simulation and dataset construction across grid cells."""

    def __init__(self, spec, seed):
        self.seed = seed
        self.base = preset(spec.get("preset", "office"), **spec.get("scenario", {}))
        if "noise" in spec:
            self.base = self.base.with_noise(spec["noise"])
        self.base = self.base.with_(num_slots=spec.get("num_slots", self.base.num_slots))
        self.runs = spec.get("runs", {"A": 12, "B": 6})
        self.streams = {}
        self.datasets = {}

    def _streams(self, corpus, num_tags, attack):
        key = (corpus, num_tags, attack)
        if key not in self.streams:
            base = self.base.with_(num_tags=num_tags)
            runs = corpus_runs(corpus, base, self.runs[corpus], self.seed,
                               attack=None if attack == "mixed" or corpus == "B" else attack)
            self.streams[key] = [(c, r, cfg, scenario_signatures(cfg)) for c, r, cfg in runs]
        return self.streams[key]

    def dataset(self, corpus, params):
        attack = params["attack"] if corpus == "A" else "colluding"
        key = (corpus, params["num_tags"], attack, params["profile_length"], params["metric"], params["extraction"])
        if key not in self.datasets:
            pipe = PipelineConfig(params["profile_length"], params["metric"], params["extraction"]).validate()
            parts = [dataset_from_signatures(s, cfg, pipe, c, r)
                     for c, r, cfg, s in self._streams(corpus, params["num_tags"], attack)]
            self.datasets[key] = LabeledDataset.concat(parts)
        return self.datasets[key]


def run_sweep(spec, seed=0):
    """One train/evaluate cycle per grid cell, with simulation seeds shared
    across cells. Returns a list of row dicts (parameters, metrics, ROC).

    Cells enumerate the axes in ``SWEEP_AXES`` order, the last one varying
    fastest.
    """
    validate_sweep(spec)
    axes = spec.get("axes", {})
    fixed = dict(_DEFAULT_FIXED, **spec.get("fixed", {}))
    names = [a for a in SWEEP_AXES if a in axes]  # canonical order, independent of key order
    cache = _SweepCache(spec, seed)
    rows = []
    for cell, values in enumerate(itertools.product(*(axes[n] for n in names))):
        params = dict(fixed, **dict(zip(names, values)))
        train = cache.dataset("A", params)
        if spec.get("evaluate", "cv") == "cv":
            report = cross_validate(train, 3, H=params["trees"], seed=seed, sort_enabled=params["sort"]).mean
        else:
            model = rf.train_forest(train.features, train.labels, H=params["trees"], seed=seed,
                                    sort_enabled=params["sort"])
            report, _, _ = evaluate(model, cache.dataset("B", params))
        row = {"cell": cell, **{n: params[n] for n in SWEEP_AXES}, "accuracy": report.accuracy,
               "tpr": report.tpr, "fpr": report.fpr, "auroc": report.auroc, "roc": report.roc}
        logger.info("sweep cell %d %s auroc=%s", cell, dict(zip(names, values)), report.auroc)
        rows.append(row)
    return rows


def write_sweep(rows, csv_path, json_path, roc_path):
    cols = ["cell", *SWEEP_AXES, "accuracy", "tpr", "fpr", "auroc"]
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt6(r[c]) for c in cols])
    with open(json_path, "w") as fh:
        json.dump([{c: r[c] for c in cols} for r in rows], fh, indent=2)
        fh.write("\n")
    with open(roc_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "fpr", "tpr"])
        for r in rows:
            if r["roc"] is not None:
                for a, b in r["roc"]:
                    w.writerow([r["cell"], f"{a:.6f}", f"{b:.6f}"])


def _fmt6(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)
