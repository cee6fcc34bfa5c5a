"""One-vs-rest linear SVM (hinge loss, dual coordinate descent) and cross-validation."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import ConfigError, DataError, DimensionError

FORMAT_MAGIC = "desense-svm"
FORMAT_VERSION = 1
C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


@numba.njit(cache=True, nogil=True)
def _xorshift(state):
    state ^= (state << np.uint64(13)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    state ^= state >> np.uint64(7)
    state ^= (state << np.uint64(17)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    return state


@numba.njit(cache=True, nogil=True)
def _dual_cd(x, y, c, tol, max_iter, seed, alpha, w):
    """Hinge-loss dual coordinate descent with shrinking.

    ``x`` is bias-augmented (n, d+1); ``y`` is +-1. Updates ``alpha`` and
    ``w`` in place and returns the number of passes made (negative when the
    pass limit was hit before the largest projected-gradient violation fell
    below tol).
    """
    n = x.shape[0]
    d = x.shape[1]
    qd = np.empty(n)
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += x[i, j] * x[i, j]
        qd[i] = s
    index = np.arange(n)
    active = n
    pg_max_old = np.inf
    pg_min_old = -np.inf
    state = np.uint64(seed) * np.uint64(2654435761) + np.uint64(88172645463325252)
    if state == 0:
        state = np.uint64(1)
    it = 0
    while it < max_iter:
        pg_max = -np.inf
        pg_min = np.inf
        for k in range(active - 1, 0, -1):
            state = _xorshift(state)
            r = int(state % np.uint64(k + 1))
            tmp = index[k]
            index[k] = index[r]
            index[r] = tmp
        s = 0
        while s < active:
            i = index[s]
            g = 0.0
            for j in range(d):
                g += w[j] * x[i, j]
            g = y[i] * g - 1.0
            pg = 0.0
            if alpha[i] == 0.0:
                if g > pg_max_old:
                    active -= 1
                    index[s] = index[active]
                    index[active] = i
                    continue
                elif g < 0.0:
                    pg = g
            elif alpha[i] == c:
                if g < pg_min_old:
                    active -= 1
                    index[s] = index[active]
                    index[active] = i
                    continue
                elif g > 0.0:
                    pg = g
            else:
                pg = g
            if pg > pg_max:
                pg_max = pg
            if pg < pg_min:
                pg_min = pg
            if abs(pg) > 1e-12:
                old = alpha[i]
                new = old - g / qd[i]
                if new < 0.0:
                    new = 0.0
                elif new > c:
                    new = c
                alpha[i] = new
                step = (new - old) * y[i]
                for j in range(d):
                    w[j] += step * x[i, j]
            s += 1
        it += 1
        if max(pg_max, -pg_min) < tol:
            if active == n:
                return it
            active = n
            pg_max_old = np.inf
            pg_min_old = -np.inf
            continue
        pg_max_old = pg_max if pg_max > 0.0 else np.inf
        pg_min_old = pg_min if pg_min < 0.0 else -np.inf
    return -it


def augment(x):
    x = np.asarray(x, dtype=np.float64)
    return np.hstack([x, np.ones((x.shape[0], 1))])


def train_binary(x_aug, y_pm, c, tol=1e-3, max_iter=1000, seed=0):
    """Solve one binary hinge-loss problem; returns ``(w, alpha, passes)``."""
    x_aug = np.ascontiguousarray(x_aug, dtype=np.float64)
    y_pm = np.ascontiguousarray(y_pm, dtype=np.float64)
    alpha = np.zeros(x_aug.shape[0])
    w = np.zeros(x_aug.shape[1])
    passes = _dual_cd(x_aug, y_pm, float(c), float(tol), int(max_iter), int(seed), alpha, w)
    return w, alpha, passes


def dual_objective(x_aug, y_pm, alpha):
    """``0.5 a'Qa - sum(a)`` with ``Q_ij = y_i y_j x_i'x_j`` (minimized by training)."""
    v = (alpha * y_pm) @ x_aug
    return 0.5 * v @ v - alpha.sum()


@dataclass
class LinearSvmModel:
    weights: np.ndarray  # (L, d+1), bias last
    C: float
    num_classes: int
    duals: list = field(default=None, repr=False)

    @property
    def n_features(self):
        return self.weights.shape[1] - 1

    def decision_function(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise DimensionError(
                f"X has shape {x.shape}; the model expects {self.n_features} features"
            )
        return x @ self.weights[:, :-1].T + self.weights[:, -1]

    def save(self, path):
        lines = [
            f"{FORMAT_MAGIC} {FORMAT_VERSION}",
            f"C {format(self.C, '.17g')}",
            f"num_classes {self.num_classes}",
            f"num_features {self.n_features}",
            "weights",
        ]
        lines += [" ".join(format(v, ".17g") for v in row) for row in self.weights]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        lines = Path(path).read_text().splitlines()
        if lines[0] != f"{FORMAT_MAGIC} {FORMAT_VERSION}" or lines[4] != "weights":
            raise DataError(f"{path}: not a {FORMAT_MAGIC} v{FORMAT_VERSION} file")
        c = float(lines[1].split()[1])
        n_classes = int(lines[2].split()[1])
        weights = np.array([[float(v) for v in ln.split()] for ln in lines[5 : 5 + n_classes]])
        return cls(weights, c, n_classes)


def train_linear_svm(x, y, C, num_classes=None, tol=1e-3, max_iter=1000, seed=0):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if not C > 0:
        raise ConfigError(f"C must be positive, got {C}")
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DimensionError(f"X shape {x.shape} does not match y length {y.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("features contain non-finite values")
    n_classes = num_classes if num_classes is not None else int(y.max()) + 1
    counts = np.bincount(y, minlength=n_classes)
    if n_classes < 2 or np.any(counts == 0):
        raise DataError(f"every class needs samples; counts per class {counts.tolist()}")
    x_aug = augment(x)
    weights = np.zeros((n_classes, x_aug.shape[1]))
    duals = []
    for k in range(n_classes):
        y_pm = np.where(y == k, 1.0, -1.0)
        w, alpha, _ = train_binary(x_aug, y_pm, C, tol, max_iter, seed + k)
        weights[k] = w
        duals.append(alpha)
    return LinearSvmModel(weights, float(C), n_classes, duals)


def predict(model, x):
    """Argmax of the one-vs-rest decision values; ties go to the lowest class index."""
    return np.argmax(model.decision_function(x), axis=1)


def accuracy(pred, truth):
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise DimensionError(f"{pred.size} predictions for {truth.size} labels")
    if truth.size == 0:
        return float("nan")
    return float(np.mean(pred == truth))


def per_class_accuracy(pred, truth, num_classes=None):
    """Recall per class; ``nan`` for classes absent from ``truth``."""
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise DimensionError(f"{pred.size} predictions for {truth.size} labels")
    n_classes = num_classes if num_classes is not None else int(truth.max()) + 1
    out = np.full(n_classes, np.nan)
    for c in range(n_classes):
        mask = truth == c
        if mask.any():
            out[c] = np.mean(pred[mask] == c)
    return out


# --------------------------------------------------------------------------- CV


@dataclass(frozen=True)
class CvPlan:
    folds: int = 5
    c_grid: tuple = C_GRID
    rho_grid: tuple = (None,)
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if not self.c_grid or any(not c > 0 for c in self.c_grid):
            raise ConfigError("C grid must be non-empty and positive")
        if not self.rho_grid or any(r is not None and r < 0 for r in self.rho_grid):
            raise ConfigError("rho grid must be non-empty and non-negative")


def stratified_folds(y, folds, seed):
    """Fold id per sample. ``folds == len(y)`` gives leave-one-out."""
    y = np.asarray(y, dtype=np.int64)
    n = y.size
    if folds == n:
        return np.arange(n)
    counts = np.bincount(y)
    present = counts[counts > 0]
    if folds > present.min():
        raise DataError(
            f"cannot build {folds} stratified folds: smallest class has {present.min()} samples"
        )
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=np.int64)
    start = 0
    for c in np.flatnonzero(counts):
        members = rng.permutation(np.flatnonzero(y == c))
        # continue the round-robin across classes so fold sizes stay balanced
        fold_of[members] = (start + np.arange(members.size)) % folds
        start = (start + members.size) % folds
    return fold_of


def svm_pipeline(x, y, train_idx, val_idx, rho, c_values, num_classes=None):
    """Default CV pipeline: plain SVM on ``x``; ``rho`` is ignored."""
    return [
        predict(train_linear_svm(x[train_idx], y[train_idx], c, num_classes), x[val_idx])
        for c in c_values
    ]


def cross_validate(x, y, plan, pipeline=svm_pipeline, threads=1):
    """Grid search by stratified k-fold CV.

    ``pipeline(x, y, train_idx, val_idx, rho, c_values)`` must return one
    prediction vector for ``val_idx`` per entry of ``c_values``, letting it
    share expensive per-rho work across the C grid.

    Returns ``(best, scores)``: ``best`` is ``{"rho": .., "C": ..}`` and
    ``scores`` lists ``{"rho", "C", "accuracy"}`` per grid point in grid
    order. Ties go to the smaller C, then the smaller rho.
    """
    y = np.asarray(y, dtype=np.int64)
    fold_of = stratified_folds(y, plan.folds, plan.seed)
    n_folds = int(fold_of.max()) + 1
    cs = list(plan.c_grid)
    tasks = [(f, r) for f in range(n_folds) for r in range(len(plan.rho_grid))]

    def run(task):
        f, r = task
        train_idx = np.flatnonzero(fold_of != f)
        val_idx = np.flatnonzero(fold_of == f)
        preds = pipeline(x, y, train_idx, val_idx, plan.rho_grid[r], cs)
        return [accuracy(p, y[val_idx]) for p in preds]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    acc = np.zeros((n_folds, len(plan.rho_grid), len(cs)))
    for (f, r), row in zip(tasks, results):
        acc[f, r] = row
    means = acc.mean(axis=0)
    scores = [
        {"rho": rho, "C": c, "accuracy": float(means[r, k])}
        for r, rho in enumerate(plan.rho_grid)
        for k, c in enumerate(cs)
    ]
    best = min(
        scores,
        key=lambda s: (-s["accuracy"], s["C"], -math.inf if s["rho"] is None else s["rho"]),
    )
    return {"rho": best["rho"], "C": best["C"]}, scores
