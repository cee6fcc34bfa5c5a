"""Ridge discriminant component analysis and noise-subspace desensitization."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import numerics
from .errors import DataError, DimensionError, NotPositiveDefiniteError, NumericalError

FORMAT_MAGIC = "desense-rdca"
FORMAT_VERSION = 1
SIGNAL, NOISE, FULL = "signal", "noise", "full"


@dataclass(frozen=True)
class ScatterSet:
    between: np.ndarray
    within: np.ndarray
    total: np.ndarray
    global_mean: np.ndarray
    class_means: np.ndarray
    class_counts: np.ndarray

    def between_factor(self):
        """``B`` with ``B @ B.T == between``; column l is ``sqrt(N_l) * (mu_l - mu)``."""
        dev = self.class_means - self.global_mean
        return (dev * np.sqrt(self.class_counts)[:, None]).T


def _class_index(y, num_classes=None):
    y = np.asarray(y, dtype=np.int64)
    if y.ndim != 1:
        raise DimensionError("labels must be a 1-D class-index vector")
    if y.size and y.min() < 0:
        raise DataError("class indices must be non-negative")
    num_classes = num_classes if num_classes is not None else int(y.max()) + 1
    return y, num_classes


def compute_scatter(x, y, num_classes=None):
    x = numerics.as_matrix(x, "X")
    y, n_classes = _class_index(y, num_classes)
    n = x.shape[0]
    if n < 2:
        raise DataError(f"need at least 2 samples, got {n}")
    if y.shape[0] != n:
        raise DimensionError(f"X has {n} rows but y has {y.shape[0]} entries")
    if n_classes < 2:
        raise DataError("need at least 2 classes")
    counts = np.bincount(y, minlength=n_classes)
    if len(counts) > n_classes:
        raise DataError(f"class index {y.max()} outside 0..{n_classes - 1}")
    if np.any(counts == 0):
        raise DataError(f"classes {np.flatnonzero(counts == 0).tolist()} have no samples")

    mu = x.mean(axis=0)
    means = np.zeros((n_classes, x.shape[1]))
    np.add.at(means, y, x)
    means /= counts[:, None]
    centered = x - means[y]
    within = centered.T @ centered
    dev = (means - mu) * np.sqrt(counts)[:, None]
    between = dev.T @ dev
    within = (within + within.T) / 2
    between = (between + between.T) / 2
    return ScatterSet(between, within, between + within, mu, means, counts)


@dataclass(frozen=True)
class RdcaModel:
    mean: np.ndarray
    components: np.ndarray
    powers: np.ndarray
    num_classes: int
    ridge: float
    label: str = ""
    class_names: list = field(default_factory=list)

    @property
    def n_features(self):
        return self.mean.shape[0]

    def save(self, path):
        Path(path).write_text(dumps_model(self))

    @classmethod
    def load(cls, path):
        return loads_model(Path(path).read_text())


def fit_rdca(x, y, ridge, num_classes=None, label="", class_names=None):
    """Fit RDCA components for labels ``y``.

    Maximizes ``w' S_B w`` subject to ``w' (S_T + ridge I) w = 1`` by whitening
    with the Cholesky factor of the regularized total scatter and
    diagonalizing the whitened between-class scatter. Components come back
    in decreasing order of discriminant power.
    """
    if not ridge >= 0:
        raise NumericalError(f"ridge must be >= 0, got {ridge}")
    sc = compute_scatter(x, y, num_classes)
    m = sc.total.shape[0]
    c = sc.total + ridge * np.eye(m)
    try:
        low = numerics.cholesky(c)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(
            f"regularized total scatter is singular at ridge={ridge:g} ({exc}); "
            f"use a larger ridge, e.g. >= {1e-3 * np.trace(sc.total) / m:.3g}",
            pivot=exc.pivot,
        ) from exc
    z = numerics.solve_triangular(low, sc.between_factor())
    k = z @ z.T
    k = (k + k.T) / 2
    powers, v = numerics.sym_eig(k)
    components = numerics.solve_triangular(low, v, side="lower-transposed")
    names = list(class_names) if class_names is not None else [
        str(i) for i in range(len(sc.class_counts))
    ]
    return RdcaModel(sc.global_mean, components, powers, len(sc.class_counts), float(ridge),
                     label, names)


@dataclass(frozen=True)
class SubspaceProjection:
    basis: np.ndarray
    kind: str
    mean: np.ndarray
    source_label: str = ""

    @property
    def dim(self):
        return self.basis.shape[1]


def signal_subspace(model):
    k = model.num_classes - 1
    return SubspaceProjection(model.components[:, :k], SIGNAL, model.mean, model.label)


def noise_subspace(model):
    k = model.num_classes - 1
    return SubspaceProjection(model.components[:, k:], NOISE, model.mean, model.label)


def full_projection(model):
    return SubspaceProjection(model.components, FULL, model.mean, model.label)


def subspace(model, kind):
    return {SIGNAL: signal_subspace, NOISE: noise_subspace, FULL: full_projection}[kind](model)


def project(x, sub):
    """Center ``x`` with the training mean and map it onto ``sub``'s basis."""
    x = numerics.as_matrix(x, "X")
    if x.shape[1] != sub.basis.shape[0]:
        raise DimensionError(
            f"X has {x.shape[1]} features but the subspace expects {sub.basis.shape[0]}"
        )
    return (x - sub.mean) @ sub.basis


def desensitize(x, model):
    return project(x, noise_subspace(model))


def ridge_grid(total_scatter, factors=(1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)):
    """Ridge candidates scaled by the mean per-feature total scatter."""
    m = total_scatter.shape[0]
    scale = np.trace(total_scatter) / m
    if scale <= 0:
        scale = 1.0
    return [f * scale for f in factors]


# --------------------------------------------------------------------------- persistence


def _fmt(values):
    return " ".join(format(float(v), ".17g") for v in values)


def dumps_model(model):
    m = model.n_features
    lines = [
        f"{FORMAT_MAGIC} {FORMAT_VERSION}",
        f"label {model.label}",
        f"ridge {format(model.ridge, '.17g')}",
        f"num_classes {model.num_classes}",
        f"num_features {m}",
        "class_names " + "\t".join(model.class_names),
        "mean " + _fmt(model.mean),
        "powers " + _fmt(model.powers),
        "components",
    ]
    lines.extend(_fmt(row) for row in model.components)
    return "\n".join(lines) + "\n"


def loads_model(text):
    lines = text.splitlines()
    try:
        magic, version = lines[0].split()
        if magic != FORMAT_MAGIC or int(version) != FORMAT_VERSION:
            raise DataError(f"unsupported model format {lines[0]!r}")
        head = {}
        for line in lines[1:8]:
            key, _, value = line.partition(" ")
            head[key] = value
        if lines[8] != "components":
            raise DataError("model file: missing components block")
        m = int(head["num_features"])
        comps = np.array([[float(v) for v in ln.split()] for ln in lines[9 : 9 + m]])
        if comps.shape != (m, m):
            raise DataError(f"model file: components block is {comps.shape}, expected {(m, m)}")
        mean = np.array([float(v) for v in head["mean"].split()])
        powers = np.array([float(v) for v in head["powers"].split()])
        names = head["class_names"].split("\t") if head["class_names"] else []
    except (ValueError, KeyError, IndexError) as exc:
        raise DataError(f"malformed model file: {exc}") from exc
    return RdcaModel(mean, comps, powers, int(head["num_classes"]), float(head["ridge"]),
                     head["label"], names)
