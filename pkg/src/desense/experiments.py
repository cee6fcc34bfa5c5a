"""Desensitization experiments: data -> RDCA -> noise-subspace projection -> SVM.

Each experiment reports three accuracies per label (utility and privacy):
the frequency-matched random guess, the accuracy "before" desensitization
(SVM on the full RDCA projection fitted for that label) and "after" (SVM on
data projected onto the privacy label's noise subspace).
"""

import csv
import io
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import classifier, data, rdca
from .errors import ConfigError, DataError, DesenseError

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RIDGE_FACTORS = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)
FORMATS = ("json", "csv", "markdown")
DATA_ENV = "DESENSE_DATA_DIR"

# Published per-experiment figures used by the aggregate tradeoff summary.
PUBLISHED_UTILITY_DROP = {"har": 5.14, "cmu": 0.04, "semeion": 7.53}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    dataset: str
    utility_label: str
    privacy_label: str
    split: str = "stratified"
    test_fraction: float = 0.3
    seed: int = 0
    ridge_factors: tuple = RIDGE_FACTORS
    c_grid: tuple = classifier.C_GRID
    folds: int = 5
    grouping: str = ""
    utility_display: str = ""
    privacy_display: str = ""
    per_class_rows: bool = False
    output: str = ""
    format: str = "json"

    def validate(self):
        if self.dataset not in ("har", "cmu", "semeion"):
            raise ConfigError(f"unknown dataset kind {self.dataset!r}")
        if self.utility_label == self.privacy_label:
            raise ConfigError("utility and privacy labels must differ")
        if self.split not in ("published", "stratified"):
            raise ConfigError(f"unknown split {self.split!r}")
        if self.grouping not in ("", "protect-high", "protect-low"):
            raise ConfigError(f"unknown grouping {self.grouping!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown report format {self.format!r}")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must lie in (0, 1)")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        return self


EXPERIMENTS = {
    # The published HAR files split by subject, so test subjects never occur in
    # training; the pool is re-split by subject, holding out about 13%.
    "har": ExperimentConfig(
        "har", "har", "activity", "subject", split="stratified", test_fraction=0.13,
        utility_display="Activity", privacy_display="Person Identification",
    ),
    "cmu-pose-utility": ExperimentConfig(
        "cmu-pose-utility", "cmu", "pose", "sunglasses",
        utility_display="Pose", privacy_display="Glasses",
    ),
    "cmu-glasses-utility": ExperimentConfig(
        "cmu-glasses-utility", "cmu", "sunglasses", "pose",
        utility_display="Glasses", privacy_display="Pose",
    ),
    "semeion-u04": ExperimentConfig(
        "semeion-u04", "semeion", "utility", "privacy", grouping="protect-high",
        utility_display="Utility: 0-4", privacy_display="Privacy: 5-9", per_class_rows=True,
    ),
    "semeion-u59": ExperimentConfig(
        "semeion-u59", "semeion", "utility", "privacy", grouping="protect-low",
        utility_display="Utility: 5-9", privacy_display="Privacy: 0-4", per_class_rows=True,
    ),
}

DATA_LOCATIONS = {
    "har": ("UCI HAR Dataset", "har", "HAR"),
    "cmu": ("faces", "cmu_faces", "cmu-faces", "faces_4"),
    "semeion": ("semeion.data", "semeion/semeion.data"),
}


def get_config(name, **overrides):
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; valid: {', '.join(EXPERIMENTS)}")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(EXPERIMENTS[name], **overrides).validate()


def resolve_data_path(kind, data_dir=None):
    root = data_dir or os.environ.get(DATA_ENV)
    if not root:
        raise DataError(f"no data directory given (pass --data-dir or set {DATA_ENV})")
    root = Path(root)
    for rel in DATA_LOCATIONS[kind]:
        if (root / rel).exists():
            return root / rel
    # allow pointing straight at the dataset itself
    if kind == "har" and (root / "train").is_dir():
        return root
    if kind == "semeion" and root.is_file():
        return root
    if kind == "cmu" and root.is_dir() and any(root.rglob("*_4.pgm")):
        return root
    raise DataError(f"{kind} data not found under {root} (looked for {DATA_LOCATIONS[kind]})")


def load_split(config, data_dir=None):
    path = resolve_data_path(config.dataset, data_dir)
    if config.dataset == "har":
        loaded = data.load_har(path)
    elif config.dataset == "cmu":
        loaded = data.load_cmu_faces(path)
    else:
        loaded = data.load_semeion(path)
        loaded = data.with_split_labels(loaded, config.grouping != "protect-low")
    for label in (config.utility_label, config.privacy_label):
        if label not in (loaded.train if isinstance(loaded, data.SplitDataset) else loaded).labels:
            raise ConfigError(f"experiment {config.name}: dataset has no label {label!r}")
    if isinstance(loaded, data.SplitDataset):
        if config.split == "published":
            return loaded, path
        loaded = loaded.merged()
    elif config.split == "published":
        raise ConfigError(f"{config.dataset} has no published split")
    # the raw digit refines the grouped privacy label, so stratifying on it keeps
    # the privacy proportions and also balances digits hidden inside "Rest"
    strat = "digit" if config.dataset == "semeion" else config.privacy_label
    split = data.stratified_split(loaded, strat, config.test_fraction, config.seed)
    return split, path


# --------------------------------------------------------------------------- report


@dataclass
class Accuracies:
    overall: float
    per_class: list

    @classmethod
    def from_predictions(cls, pred, truth, num_classes):
        return cls(
            classifier.accuracy(pred, truth),
            classifier.per_class_accuracy(pred, truth, num_classes).tolist(),
        )


@dataclass
class LabelResult:
    role: str
    label: str
    display: str
    class_names: list
    random_guess: Accuracies
    before: Accuracies
    after: Accuracies


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    selected: dict
    stats: dict
    utility: LabelResult
    privacy: LabelResult
    schema_version: int = SCHEMA_VERSION
    timing: dict = field(default_factory=dict)

    def to_dict(self, include_timing=False):
        out = {
            "schema_version": self.schema_version,
            "experiment": self.experiment,
            "config": self.config,
            "selected": self.selected,
            "stats": self.stats,
            "utility": _clean(asdict(self.utility)),
            "privacy": _clean(asdict(self.privacy)),
        }
        if include_timing:
            out["timing"] = self.timing
        return out

    def to_json(self, include_timing=False):
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise DataError(f"unsupported report schema {d.get('schema_version')!r}")

        def label(x):
            acc = {k: Accuracies(x[k]["overall"], _unclean(x[k]["per_class"]))
                   for k in ("random_guess", "before", "after")}
            return LabelResult(x["role"], x["label"], x["display"], x["class_names"], **acc)

        return cls(d["experiment"], d["config"], d["selected"], d["stats"],
                   label(d["utility"]), label(d["privacy"]), d["schema_version"],
                   d.get("timing", {}))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def labels(self):
        return (self.utility, self.privacy)


def _clean(obj):
    """NaN -> None so the JSON stays strict."""
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _unclean(values):
    return [float("nan") if v is None else v for v in values]


# --------------------------------------------------------------------------- pipeline


def _compact(y):
    """Relabel to 0..k-1 over the classes present."""
    _, inv = np.unique(y, return_inverse=True)
    return inv


def _embed(model, kind, x, n_fit):
    # RDCA components are unit-norm in the C metric, so projected training
    # features have variance ~1/N; rescale by sqrt(N) before the SVM.
    return rdca.project(x, rdca.subspace(model, kind)) * math.sqrt(n_fit)


def _before_pipeline(label_vec):
    def pipeline(x, y, tr, va, rho, cs):
        model = rdca.fit_rdca(x[tr], _compact(label_vec[tr]), rho)
        z_tr = _embed(model, rdca.FULL, x[tr], tr.size)
        z_va = _embed(model, rdca.FULL, x[va], tr.size)
        return [classifier.predict(classifier.train_linear_svm(z_tr, y[tr], c), z_va)
                for c in cs]
    return pipeline


def _after_pipeline(privacy_vec):
    def pipeline(x, y, tr, va, rho, cs):
        model = rdca.fit_rdca(x[tr], _compact(privacy_vec[tr]), rho)
        z_tr = _embed(model, rdca.NOISE, x[tr], tr.size)
        z_va = _embed(model, rdca.NOISE, x[va], tr.size)
        return [classifier.predict(classifier.train_linear_svm(z_tr, y[tr], c), z_va)
                for c in cs]
    return pipeline


def _ridge_grid(x, factors):
    centered = x - x.mean(axis=0)
    scale = float(np.sum(centered * centered)) / x.shape[1]
    if scale <= 0:
        scale = 1.0
    return tuple(f * scale for f in factors)


def run_experiment(config, data_dir=None, threads=1):
    config = config.validate()
    t0 = time.perf_counter()
    timing = {}
    try:
        split, path = load_split(config, data_dir)
        train, test = split.train, split.test
        u, p = config.utility_label, config.privacy_label
        train.validate_label(u)
        train.validate_label(p)
        timing["load"] = time.perf_counter() - t0

        x_tr, x_te = train.features, test.features
        n_tr = train.n_samples
        rhos = _ridge_grid(x_tr, config.ridge_factors)
        selected = {"ridge_grid": list(rhos), "before": {}, "after": {}}

        def plan(rho_grid=(None,)):
            return classifier.CvPlan(config.folds, tuple(config.c_grid), rho_grid, config.seed)

        # BEFORE: per label, RDCA on that label, full projection, SVM.
        t1 = time.perf_counter()
        before = {}
        for label in (u, p):
            y_tr = train.labels[label]
            best, _ = classifier.cross_validate(
                x_tr, y_tr, plan(rhos), _before_pipeline(y_tr), threads
            )
            model = rdca.fit_rdca(x_tr, y_tr, best["rho"], train.num_classes(label))
            svm = classifier.train_linear_svm(
                _embed(model, rdca.FULL, x_tr, n_tr), y_tr, best["C"], train.num_classes(label)
            )
            pred = classifier.predict(svm, _embed(model, rdca.FULL, x_te, n_tr))
            before[label] = Accuracies.from_predictions(
                pred, test.labels[label], train.num_classes(label)
            )
            selected["before"][label] = best
        timing["before"] = time.perf_counter() - t1

        # AFTER: privacy RDCA noise subspace; ridge and utility C tuned on utility.
        t2 = time.perf_counter()
        y_u, y_p = train.labels[u], train.labels[p]
        best_u, _ = classifier.cross_validate(
            x_tr, y_u, plan(rhos), _after_pipeline(y_p), threads
        )
        priv_model = rdca.fit_rdca(x_tr, y_p, best_u["rho"], train.num_classes(p), p,
                                   train.class_names[p])
        z_tr = _embed(priv_model, rdca.NOISE, x_tr, n_tr)
        z_te = _embed(priv_model, rdca.NOISE, x_te, n_tr)
        best_p, _ = classifier.cross_validate(z_tr, y_p, plan(), threads=threads)
        after = {}
        for label, c in ((u, best_u["C"]), (p, best_p["C"])):
            svm = classifier.train_linear_svm(
                z_tr, train.labels[label], c, train.num_classes(label)
            )
            after[label] = Accuracies.from_predictions(
                classifier.predict(svm, z_te), test.labels[label], train.num_classes(label)
            )
        selected["after"] = {"rho": best_u["rho"], "C_utility": best_u["C"],
                             "C_privacy": best_p["C"]}
        timing["after"] = time.perf_counter() - t2
    except DesenseError as exc:
        raise type(exc)(f"experiment {config.name}: {exc}") from exc

    results = {}
    for role, label, display in (("utility", u, config.utility_display),
                                 ("privacy", p, config.privacy_display)):
        per_class, overall = data.random_guess_accuracy(
            train.labels[label], train.num_classes(label)
        )
        results[role] = LabelResult(
            role, label, display or label, train.class_names[label],
            Accuracies(overall, per_class.tolist()), before[label], after[label],
        )
    stats = {
        "n_train": int(n_tr),
        "n_test": int(test.n_samples),
        "num_features": int(train.n_features),
        "num_classes": {"utility": train.num_classes(u), "privacy": train.num_classes(p)},
        "train_class_counts": {
            "utility": train.class_counts(u).tolist(),
            "privacy": train.class_counts(p).tolist(),
        },
        "desensitized_features": int(z_tr.shape[1]),
    }
    cfg = asdict(config)
    cfg.pop("output")  # where the report lands must not change its bytes
    cfg["data_path"] = str(path)
    timing["total"] = time.perf_counter() - t0
    return ExperimentReport(config.name, _clean(cfg), selected, stats,
                            results["utility"], results["privacy"], timing=timing)


# --------------------------------------------------------------------------- tables


def _pct(v):
    return "n/a" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{100 * v:.2f}%"


def _class_rows(res):
    """Per-class rows with any grouped "Rest" class last, as the tables lay them out."""
    order = sorted(range(len(res.class_names)), key=lambda i: res.class_names[i] == data.REST)
    for i in order:
        name = "The Rest" if res.class_names[i] == data.REST else res.class_names[i]
        yield name, res.random_guess.per_class[i], res.before.per_class[i], res.after.per_class[i]


def emit_table(report, fmt="markdown"):
    if fmt == "json":
        return report.to_json()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "role", "label", "class", "random_guess", "before", "after"])
        for res in report.labels():
            w.writerow([report.experiment, res.role, res.label, "overall",
                        *(_num(a.overall) for a in (res.random_guess, res.before, res.after))])
        for res in report.labels():
            for name, rg, b, a in _class_rows(res):
                w.writerow([report.experiment, res.role, res.label, name,
                            _num(rg), _num(b), _num(a)])
        return buf.getvalue()
    if fmt != "markdown":
        raise ConfigError(f"unknown format {fmt!r}")

    head = "| {} | Random Guess | Before Desensitization | After Desensitization |"
    rule = "|---|---|---|---|"
    out = [f"## {report.experiment}", ""]
    if report.config.get("per_class_rows"):
        for res in report.labels():
            out += [f"**{res.display}**", "", head.format("Digit"), rule]
            out += [f"| {n} | {_pct(rg)} | {_pct(b)} | {_pct(a)} |"
                    for n, rg, b, a in _class_rows(res)]
            out.append("")
    else:
        out += [head.format("Label"), rule]
        for res in report.labels():
            name = f"{res.display} ({res.role.capitalize()})"
            out.append(f"| {name} | {_pct(res.random_guess.overall)} | "
                       f"{_pct(res.before.overall)} | {_pct(res.after.overall)} |")
        out.append("")
    s = report.stats
    out.append(
        f"N_train={s['n_train']}, N_test={s['n_test']}, M={s['num_features']}, "
        f"L_utility={s['num_classes']['utility']}, L_privacy={s['num_classes']['privacy']}, "
        f"desensitized features={s['desensitized_features']}"
    )
    return "\n".join(out) + "\n"


def _num(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.6f}"


# --------------------------------------------------------------------------- suite


def utility_drops(report):
    """Utility accuracy lost to desensitization, in percentage points.

    Overall accuracy for ungrouped labels; for grouped (digit) labels one
    value per utility-relevant digit, excluding the "Rest" class.
    """
    res = report.utility
    if report.config.get("per_class_rows"):
        return [100 * (b - a) for n, b, a in zip(res.class_names, res.before.per_class,
                                                  res.after.per_class)
                if n != data.REST and not (math.isnan(b) or math.isnan(a))]
    return [100 * (res.before.overall - res.after.overall)]


def tradeoff_summary(reports):
    """Average utility drop per dataset family next to the published figure."""
    groups = {}
    for name, rep in reports.items():
        family = EXPERIMENTS[name].dataset if name in EXPERIMENTS else name
        groups.setdefault(family, []).extend(utility_drops(rep))
    return {
        fam: {"utility_drop_pp": float(np.mean(v)), "published_pp": PUBLISHED_UTILITY_DROP.get(fam)}
        for fam, v in sorted(groups.items())
    }


def run_suite(names, data_dir=None, out_dir=None, fmt="json", threads=1, **overrides):
    unknown = [n for n in names if n not in EXPERIMENTS]
    if unknown:
        raise ConfigError(f"unknown experiment(s) {unknown}; valid: {', '.join(EXPERIMENTS)}")
    reports = {}
    for name in names:
        log.info("running %s", name)
        reports[name] = run_experiment(get_config(name, **overrides), data_dir, threads)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "experiments": list(names),
        "tradeoff": tradeoff_summary(reports),
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ext = {"json": "json", "csv": "csv", "markdown": "md"}[fmt]
        for name, rep in reports.items():
            (out_dir / f"{name}.{ext}").write_text(emit_table(rep, fmt))
        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return reports, summary
