"""Small synthetic datasets, written in the same file layouts as the real ones.

Used by the test suite and ``scripts/make_synthetic_data.py`` so the whole
pipeline can run without the public datasets.
"""

from pathlib import Path

import numpy as np

from .data import CMU_EXPRESSIONS, CMU_POSES, SEMEION_FEATURES, write_pgm


def gaussian_classes(n_per_class, means, noise=1.0, seed=0):
    """Isotropic Gaussian blobs around ``means`` (L, M); returns ``(X, y)``."""
    rng = np.random.default_rng(seed)
    means = np.asarray(means, dtype=np.float64)
    y = np.repeat(np.arange(len(means)), n_per_class)
    x = means[y] + noise * rng.standard_normal((y.size, means.shape[1]))
    return x, y


def write_har(root, n_subjects=6, n_activities=4, n_features=12, per_cell=10, seed=0):
    """HAR-style directory with subject-disjoint train/test files."""
    rng = np.random.default_rng(seed)
    root = Path(root)
    act_dirs = rng.standard_normal((n_activities, n_features)) * 3.0
    subj_dirs = rng.standard_normal((n_subjects, n_features)) * 1.5
    test_subjects = set(range(n_subjects - max(1, n_subjects // 3), n_subjects))
    rows = {"train": [], "test": []}
    for s in range(n_subjects):
        side = "test" if s in test_subjects else "train"
        for a in range(n_activities):
            for _ in range(per_cell):
                x = act_dirs[a] + subj_dirs[s] + rng.standard_normal(n_features)
                rows[side].append((x, a + 1, s + 1))
    for side, items in rows.items():
        d = root / side
        d.mkdir(parents=True, exist_ok=True)
        order = rng.permutation(len(items))
        items = [items[i] for i in order]
        (d / f"X_{side}.txt").write_text(
            "".join(" ".join(f"{v: .8e}" for v in x) + "\n" for x, _, _ in items)
        )
        (d / f"y_{side}.txt").write_text("".join(f"{a}\n" for _, a, _ in items))
        (d / f"subject_{side}.txt").write_text("".join(f"{s}\n" for _, _, s in items))
    names = ["WALKING", "SITTING", "STANDING", "LAYING", "UPSTAIRS", "DOWNSTAIRS"]
    (root / "activity_labels.txt").write_text(
        "".join(f"{i + 1} {names[i % len(names)]}\n" for i in range(n_activities))
    )
    return root


def write_cmu(root, n_people=4, shape=(4, 3), seed=0, corrupt=1):
    """CMU-style tree of PGM images (quarter-scale ``_4`` plus ignored ``_2`` files)."""
    rng = np.random.default_rng(seed)
    root = Path(root)
    h, w = shape
    base = rng.uniform(80, 170, size=shape)
    pose_pat = rng.normal(0, 25, size=(len(CMU_POSES), h, w))
    glasses_pat = rng.normal(0, 25, size=(2, h, w))
    expr_pat = rng.normal(0, 5, size=(len(CMU_EXPRESSIONS), h, w))
    count = 0
    for p in range(n_people):
        person = f"p{p:02d}x"
        person_pat = rng.normal(0, 10, size=shape)
        d = root / person
        d.mkdir(parents=True, exist_ok=True)
        for pi, pose in enumerate(CMU_POSES):
            for ei, expr in enumerate(CMU_EXPRESSIONS):
                for gi, eyes in enumerate(("open", "sunglasses")):
                    img = base + person_pat + pose_pat[pi] + glasses_pat[gi] + expr_pat[ei]
                    img = np.clip(np.rint(img + rng.normal(0, 8, size=shape)), 0, 255)
                    stem = f"{person}_{pose}_{expr}_{eyes}"
                    write_pgm(d / f"{stem}_4.pgm", img, binary=count % 2 == 0)
                    write_pgm(d / f"{stem}_2.pgm", np.kron(img, np.ones((2, 2))))
                    count += 1
    for k in range(corrupt):
        d = root / f"zz{k:02d}x"
        d.mkdir(parents=True, exist_ok=True)
        # truncated pixel payload: header is fine, so the loader skips it
        (d / f"zz{k:02d}x_up_sad_open_4.pgm").write_bytes(b"P5\n3 4\n255\n\x01\x02")
    return root


def write_semeion(path, per_digit=15, flip=0.15, seed=0):
    """``semeion.data``-style file: 256 binary pixels then a one-hot digit."""
    rng = np.random.default_rng(seed)
    protos = rng.random((10, SEMEION_FEATURES)) < 0.35
    lines = []
    for i in range(per_digit * 10):
        digit = i % 10
        bits = protos[digit] ^ (rng.random(SEMEION_FEATURES) < flip)
        onehot = ["0"] * 10
        onehot[digit] = "1"
        lines.append(" ".join(f"{b:.4f}" for b in bits.astype(float)) + " " + " ".join(onehot))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_all(root, seed=0):
    """Lay out all three datasets under ``root`` the way ``--data-dir`` expects."""
    root = Path(root)
    write_har(root / "UCI HAR Dataset", seed=seed)
    write_cmu(root / "faces", seed=seed)
    write_semeion(root / "semeion.data", seed=seed)
    return root
