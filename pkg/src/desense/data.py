"""Dataset containers, loaders for HAR / CMU Faces / Semeion, label construction and splits."""

import logging
import math
import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

log = logging.getLogger(__name__)

REST = "Rest"
HAR_FEATURES = 561
CMU_SHAPE = (30, 32)  # rows x cols of the quarter-scale images
CMU_POSES = ["straight", "left", "right", "up"]
CMU_EXPRESSIONS = ["neutral", "happy", "sad", "angry"]
CMU_GLASSES = ["no", "yes"]
SEMEION_FEATURES = 256
SEMEION_FIELDS = 266


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: dict
    class_names: dict
    sample_ids: np.ndarray = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        if x.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DataError("features contain non-finite values")
        object.__setattr__(self, "features", x)
        n = x.shape[0]
        labels = {}
        for name, y in self.labels.items():
            y = np.asarray(y, dtype=np.int64)
            names = self.class_names.get(name)
            if names is None:
                raise DataError(f"label {name!r} has no class-name table")
            if y.shape != (n,):
                raise DataError(f"label {name!r} has {y.size} entries for {n} samples")
            if n and (y.min() < 0 or y.max() >= len(names)):
                raise DataError(f"label {name!r} has class index outside 0..{len(names) - 1}")
            labels[name] = y
        object.__setattr__(self, "labels", labels)
        object.__setattr__(
            self, "class_names", {k: list(v) for k, v in self.class_names.items()}
        )
        ids = np.arange(n) if self.sample_ids is None else np.asarray(self.sample_ids)
        if ids.shape != (n,):
            raise DataError("sample_ids length does not match the number of samples")
        object.__setattr__(self, "sample_ids", ids)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def num_classes(self, label):
        return len(self.class_names[label])

    def class_counts(self, label):
        return np.bincount(self.labels[label], minlength=self.num_classes(label))

    def validate_label(self, label):
        """Check the >=2 populated classes invariant for ``label``."""
        if label not in self.labels:
            raise ConfigError(f"unknown label {label!r}; have {sorted(self.labels)}")
        counts = self.class_counts(label)
        if len(counts) < 2 or np.any(counts == 0):
            empty = [self.class_names[label][i] for i in np.flatnonzero(counts == 0)]
            raise DataError(f"label {label!r} needs >= 2 classes, all populated (empty: {empty})")

    def subset(self, index):
        index = np.asarray(index)
        return Dataset(
            self.features[index],
            {k: v[index] for k, v in self.labels.items()},
            self.class_names,
            self.sample_ids[index],
        )

    def with_labels(self, labels, class_names):
        merged = dict(self.labels, **labels)
        names = dict(self.class_names, **class_names)
        return Dataset(self.features, merged, names, self.sample_ids)


@dataclass(frozen=True)
class SplitDataset:
    train: Dataset
    test: Dataset

    def __post_init__(self):
        if self.train.n_features != self.test.n_features:
            raise DataError("train and test feature counts differ")
        if self.train.class_names != self.test.class_names:
            raise DataError("train and test class-name tables differ")
        if np.intersect1d(self.train.sample_ids, self.test.sample_ids).size:
            raise DataError("train and test share samples")

    def merged(self):
        """Pool train and test back into a single Dataset."""
        return Dataset(
            np.vstack([self.train.features, self.test.features]),
            {
                k: np.concatenate([self.train.labels[k], self.test.labels[k]])
                for k in self.train.labels
            },
            self.train.class_names,
            np.concatenate([self.train.sample_ids, self.test.sample_ids]),
        )


# --------------------------------------------------------------------------- HAR


def _read_matrix(path, width=None):
    rows = []
    try:
        fh = open(path)
    except FileNotFoundError:
        raise DataError(f"missing file: {path}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            try:
                row = [float(p) for p in parts]
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable number") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(f"{path}:{lineno}: expected {width} values, got {len(row)}")
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def _read_ints(path):
    m = _read_matrix(path, width=1)[:, 0]
    if np.any(m != np.round(m)):
        raise DataError(f"{path}: labels must be integers")
    return m.astype(np.int64)


def _sorted_names(values):
    return [str(v) for v in sorted(set(int(x) for x in values))]


def load_har(directory):
    """Load the UCI HAR layout (``train/X_train.txt`` etc.) as published.

    Labels are ``activity`` and ``subject``. Subject classes are the union of
    the ids found in both files, so the count is whatever the release contains.
    """
    d = Path(directory)
    parts = {}
    for side in ("train", "test"):
        x = _read_matrix(d / side / f"X_{side}.txt")
        y = _read_ints(d / side / f"y_{side}.txt")
        subj = _read_ints(d / side / f"subject_{side}.txt")
        if not (len(y) == len(subj) == x.shape[0]):
            raise DataError(
                f"{d / side}: {x.shape[0]} feature rows, {len(y)} activity labels, "
                f"{len(subj)} subject ids"
            )
        parts[side] = (x, y, subj)
    if parts["train"][0].shape[1] != parts["test"][0].shape[1]:
        raise DataError(f"{d}: train and test feature widths differ")
    m = parts["train"][0].shape[1]
    if m != HAR_FEATURES:
        log.warning("HAR feature width is %d, expected %d", m, HAR_FEATURES)

    activity_ids = sorted(set(parts["train"][1]) | set(parts["test"][1]))
    names_file = d / "activity_labels.txt"
    lookup = {}
    if names_file.exists():
        for line in names_file.read_text().splitlines():
            bits = line.split()
            if len(bits) >= 2:
                lookup[int(bits[0])] = bits[1]
    activity_names = [lookup.get(int(a), str(a)) for a in activity_ids]
    subject_ids = sorted(set(parts["train"][2]) | set(parts["test"][2]))
    subject_names = [str(s) for s in subject_ids]
    a_index = {a: i for i, a in enumerate(activity_ids)}
    s_index = {s: i for i, s in enumerate(subject_ids)}
    class_names = {"activity": activity_names, "subject": subject_names}

    out = {}
    offset = 0
    for side in ("train", "test"):
        x, y, subj = parts[side]
        out[side] = Dataset(
            x,
            {
                "activity": [a_index[v] for v in y],
                "subject": [s_index[v] for v in subj],
            },
            class_names,
            np.arange(offset, offset + x.shape[0]),
        )
        offset += x.shape[0]
    log.info(
        "HAR: %d train / %d test samples, M=%d, %d activities, %d subjects",
        out["train"].n_samples, out["test"].n_samples, m,
        len(activity_names), len(subject_names),
    )
    return SplitDataset(out["train"], out["test"])


# --------------------------------------------------------------------------- PGM


class PgmError(DataError):
    pass


class CorruptImageError(PgmError):
    """Header parsed but the pixel payload is unusable."""


_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def read_pgm(path):
    """Read a P2 (ASCII) or P5 (binary) PGM file into a 2-D float array of gray levels."""
    data = Path(path).read_bytes()
    pos = 0
    header = []
    for _ in range(4):
        m = _PGM_TOKEN.match(data, pos)
        if not m:
            raise PgmError(f"{path}: truncated PGM header")
        header.append(m.group(1))
        pos = m.end()
    magic = header[0]
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"{path}: not a grayscale PGM (magic {magic!r})")
    try:
        width, height, maxval = (int(t) for t in header[1:])
    except ValueError:
        raise PgmError(f"{path}: malformed PGM header") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise PgmError(f"{path}: invalid PGM dimensions or max value")
    count = width * height
    if magic == b"P5":
        body = data[pos + 1 :]  # one whitespace byte ends the header
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        if len(body) < need:
            raise CorruptImageError(f"{path}: expected {need} pixel bytes, found {len(body)}")
        pixels = np.frombuffer(body[:need], dtype=dtype)
    else:
        tokens = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(tokens) < count:
            raise CorruptImageError(f"{path}: expected {count} pixels, found {len(tokens)}")
        try:
            pixels = np.array([int(t) for t in tokens[:count]])
        except ValueError:
            raise CorruptImageError(f"{path}: non-integer pixel value") from None
    if pixels.max(initial=0) > maxval:
        raise CorruptImageError(f"{path}: pixel value exceeds max {maxval}")
    return pixels.astype(np.float64).reshape(height, width)


def write_pgm(path, image, binary=True, maxval=255):
    image = np.asarray(image, dtype=np.int64)
    h, w = image.shape
    if binary:
        head = f"P5\n{w} {h}\n{maxval}\n".encode()
        Path(path).write_bytes(head + image.astype(np.uint8).tobytes())
    else:
        rows = "\n".join(" ".join(str(v) for v in r) for r in image)
        Path(path).write_text(f"P2\n{w} {h}\n{maxval}\n{rows}\n")


_CMU_NAME = re.compile(
    r"^(?P<person>[^_]+)_(?P<pose>[^_]+)_(?P<expression>[^_]+)_(?P<eyes>open|sunglasses)"
    r"(?:_(?P<scale>[24]))?\.pgm$"
)


def parse_cmu_filename(name):
    """``an2i_left_angry_sunglasses_4.pgm`` -> dict(person, pose, expression, sunglasses, scale)."""
    m = _CMU_NAME.match(os.path.basename(name))
    if not m:
        return None
    return {
        "person": m["person"],
        "pose": m["pose"],
        "expression": m["expression"],
        "sunglasses": "yes" if m["eyes"] == "sunglasses" else "no",
        "scale": int(m["scale"] or 1),
    }


def load_cmu_faces(directory, scale=4):
    """Load quarter-scale CMU Faces images found anywhere under ``directory``.

    Files with a bad pixel payload are skipped and counted; a malformed header
    is an error.
    """
    root = Path(directory)
    if not root.is_dir():
        raise DataError(f"missing directory: {root}")
    rows, meta = [], []
    skipped = 0
    shape = None
    for path in sorted(root.rglob("*.pgm")):
        info = parse_cmu_filename(path.name)
        if info is None or info["scale"] != scale:
            continue
        if info["pose"] not in CMU_POSES or info["expression"] not in CMU_EXPRESSIONS:
            raise DataError(f"{path}: unknown pose/expression in file name")
        try:
            img = read_pgm(path)
        except CorruptImageError as exc:
            log.debug("skipping %s", exc)
            skipped += 1
            continue
        if shape is None:
            shape = img.shape
        elif img.shape != shape:
            log.debug("skipping %s: shape %s != %s", path, img.shape, shape)
            skipped += 1
            continue
        rows.append(img.ravel())
        meta.append(info)
    if not rows:
        raise DataError(f"no usable scale-{scale} PGM files under {root}")
    if skipped:
        log.warning("CMU Faces: skipped %d corrupt images", skipped)
    if shape != CMU_SHAPE:
        log.warning("CMU Faces image shape is %s, expected %s", shape, CMU_SHAPE)

    people = sorted({m["person"] for m in meta})
    tables = {
        "pose": CMU_POSES,
        "sunglasses": CMU_GLASSES,
        "person": people,
        "expression": CMU_EXPRESSIONS,
    }
    labels = {k: [v.index(m[k]) for m in meta] for k, v in tables.items()}
    return Dataset(np.array(rows), labels, tables)


# --------------------------------------------------------------------------- Semeion


def load_semeion(path):
    """Load ``semeion.data``: 256 binary pixels then a 10-way one-hot digit per line."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    feats, digits = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != SEMEION_FIELDS:
                raise DataError(
                    f"{path}:{lineno}: expected {SEMEION_FIELDS} fields, got {len(parts)}"
                )
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise DataError(f"{path}:{lineno}: unparseable number") from None
            onehot = vals[SEMEION_FEATURES:]
            if sum(onehot) != 1 or any(v not in (0.0, 1.0) for v in onehot):
                raise DataError(f"{path}:{lineno}: malformed one-hot digit label")
            feats.append(vals[:SEMEION_FEATURES])
            digits.append(onehot.index(1.0))
    if not feats:
        raise DataError(f"{path}: no samples")
    return Dataset(
        np.array(feats),
        {"digit": digits},
        {"digit": [str(d) for d in range(10)]},
    )


def build_split_labels(digits, protect_high=True):
    """Group digit classes into (utility, privacy) codes.

    With ``protect_high`` the utility code is the digit for 0-4 and 5 ("Rest")
    otherwise, and the privacy code is the digit for 5-9 and 0 ("Rest")
    otherwise. Clearing the flag swaps the two roles.
    """
    d = np.asarray(digits, dtype=np.int64)
    if d.size and (d.min() < 0 or d.max() > 9):
        raise DataError("digit classes must lie in 0..9")
    low = np.where(d <= 4, d, 5)
    high = np.where(d >= 5, d, 0)
    return (low, high) if protect_high else (high, low)


def grouped_class_names(low_group):
    """Class-name table for a grouped code; index order follows the code value."""
    return [str(i) for i in range(5)] + [REST] if low_group else [REST] + [
        str(i) for i in range(5, 10)
    ]


def _compact(codes, low_group):
    # low group codes 0..5 map to themselves; high group codes {0,5..9} map to 0..5
    return codes if low_group else np.where(codes == 0, 0, codes - 4)


def with_split_labels(ds, protect_high=True, digit_label="digit"):
    """Return ``ds`` with ``utility`` and ``privacy`` labels built by :func:`build_split_labels`."""
    utility, privacy = build_split_labels(ds.labels[digit_label], protect_high)
    return ds.with_labels(
        {
            "utility": _compact(utility, protect_high),
            "privacy": _compact(privacy, not protect_high),
        },
        {
            "utility": grouped_class_names(protect_high),
            "privacy": grouped_class_names(not protect_high),
        },
    )


# --------------------------------------------------------------------------- splits


def stratified_split(ds, stratify_by, test_fraction, seed):
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    y = ds.labels[stratify_by]
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in range(ds.num_classes(stratify_by)):
        members = np.flatnonzero(y == c)
        n_test = math.floor(len(members) * test_fraction + 0.5)
        if n_test == 0 or n_test == len(members):
            raise DataError(
                f"class {ds.class_names[stratify_by][c]!r} of {stratify_by!r} has "
                f"{len(members)} samples; cannot place samples on both sides at "
                f"test fraction {test_fraction}"
            )
        perm = rng.permutation(members)
        test_idx.append(perm[:n_test])
        train_idx.append(perm[n_test:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return SplitDataset(ds.subset(train_idx), ds.subset(test_idx))


def random_guess_accuracy(label, num_classes=None):
    """Expected accuracy of guessing each class at its empirical frequency.

    Returns ``(per_class, overall)`` with ``per_class[c] = n_c / N`` and
    ``overall = sum_c (n_c / N) ** 2``.
    """
    y = np.asarray(label, dtype=np.int64)
    if y.size == 0:
        raise DataError("random_guess_accuracy needs a nonempty label vector")
    freq = np.bincount(y, minlength=num_classes or 0) / y.size
    return freq, float(np.sum(freq**2))
