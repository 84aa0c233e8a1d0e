"""Synthetic collections, noise injection and file I/O for sample sets.

Random draws use numpy's Philox counter-based generator so a seed gives the
same stream on every platform. Sample sets are ``m x n`` arrays with one
sample per column; CSV files default to one sample per row and are
transposed on load.
"""
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from mrdkit.errors import DataError, InvalidInputError
from mrdkit.linalg import as_sample_matrix

CIRCLE_NOISE_STD = 0.1
SPIRAL_NOISE_STD = 0.8


def make_rng(seed, *stream):
    """Philox generator for ``seed``; extra integers select independent streams."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


@dataclass
class LabeledCollection:
    sets: list
    labels: list | None = None
    names: list | None = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.sets):
            raise InvalidInputError("labels and sets differ in length")
        if self.names is None:
            self.names = [f"set_{i:03d}" for i in range(len(self.sets))]

    def __len__(self):
        return len(self.sets)

    @property
    def dim(self):
        return self.sets[0].shape[0] if self.sets else 0


def gen_polygons(N, radius=1.0, seed=0):
    """Two noisy circles and two uniform squares with ``N // 4`` points each.

    The circles are centered at (0, 0) and (2, 2). The squares fill
    ``[1.5, 3] x [-1, 0.5]`` and ``[-1, 0.5] x [1.5, 3]``.
    """
    N = int(N)
    if N < 4 or N % 4:
        raise InvalidInputError(f"N must be a positive multiple of 4, got {N}")
    if not radius > 0:
        raise InvalidInputError(f"radius must be > 0, got {radius}")
    n = N // 4
    rng = make_rng(seed)
    sets = []
    for center in (0.0, 2.0):
        c = 2.0 * np.pi * rng.uniform(size=n)
        e = rng.normal(0.0, CIRCLE_NOISE_STD, size=(2, n))
        sets.append(np.vstack([radius * np.cos(c) + center, radius * np.sin(c) + center]) + e)
    for ox, oy in ((1.5, -1.0), (-1.0, 1.5)):
        u = rng.uniform(size=(2, n))
        sets.append(np.vstack([1.5 * u[0] + ox, 1.5 * u[1] + oy]))
    return LabeledCollection(sets, labels=[0, 1, 2, 3],
                             names=["circle_ll", "circle_ur", "square_lr", "square_ul"])


def spiral_arms(theta):
    """Noiseless points of both spiral arms at parameters ``theta`` in [0, 1]."""
    c = 4.0 * np.pi * np.sqrt(np.asarray(theta, dtype=np.float64))
    r1 = 2.0 * c + np.pi
    r2 = -2.0 * c - np.pi
    return (np.vstack([r1 * np.cos(c), r1 * np.sin(c)]),
            np.vstack([r2 * np.cos(c), r2 * np.sin(c)]))


def gen_spiral(N, seed=0):
    """Two interleaved spiral arms of ``N // 2`` noisy points each."""
    N = int(N)
    if N < 2 or N % 2:
        raise InvalidInputError(f"N must be a positive even number, got {N}")
    n = N // 2
    rng = make_rng(seed)
    arm1, arm2 = spiral_arms(rng.uniform(size=n))
    arm1 = arm1 + rng.normal(0.0, SPIRAL_NOISE_STD, size=arm1.shape)
    arm2 = arm2 + rng.normal(0.0, SPIRAL_NOISE_STD, size=arm2.shape)
    return LabeledCollection([arm1, arm2], labels=[0, 1], names=["arm_1", "arm_2"])


def cluster_means(K, dim, separation):
    """``K`` means with nearest-pair distance exactly ``separation``.

    In one dimension they sit on a line; otherwise on a circle in the first
    two coordinates with neighbouring chords of length ``separation``.
    """
    means = np.zeros((int(dim), int(K)))
    if K == 1:
        return means
    if dim == 1:
        means[0] = separation * np.arange(K)
        return means
    R = separation / (2.0 * math.sin(math.pi / K))
    angles = 2.0 * np.pi * np.arange(K) / K
    means[0] = R * np.cos(angles)
    means[1] = R * np.sin(angles)
    return means


def gen_gaussian_clouds(K, per_cluster, points_per_set, dim=2, separation=10.0, spread=1.0, seed=0):
    """``K * per_cluster`` sets, each drawn from ``N(mu_k, spread^2 I)``."""
    for name, v in (("K", K), ("per_cluster", per_cluster),
                    ("points_per_set", points_per_set), ("dim", dim)):
        if int(v) < 1:
            raise InvalidInputError(f"{name} must be >= 1, got {v}")
    if not separation > 0 or not spread > 0:
        raise InvalidInputError("separation and spread must be > 0")
    means = cluster_means(int(K), int(dim), float(separation))
    rng = make_rng(seed)
    sets, labels = [], []
    for k in range(int(K)):
        for _ in range(int(per_cluster)):
            noise = rng.standard_normal((int(dim), int(points_per_set)))
            sets.append(means[:, [k]] + spread * noise)
            labels.append(k)
    return LabeledCollection(sets, labels=labels)


def gen_two_gaussians(n, m=2, offset=3.0, seed=0):
    """Two sets of ``n`` unit-variance Gaussian samples, means ``0`` and ``offset * 1``."""
    rng = make_rng(seed)
    X1 = rng.standard_normal((m, n))
    X2 = rng.standard_normal((m, n)) + offset
    return X1, X2


def perturb(X, sigma, seed=0):
    """``X`` plus i.i.d. ``N(0, sigma^2)`` noise."""
    X = as_sample_matrix(X, "X")
    if not sigma >= 0:
        raise InvalidInputError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return X.copy()
    return X + sigma * make_rng(seed).standard_normal(X.shape)


class Layout(str, Enum):
    ROWS = "rows"
    COLUMNS = "columns"


def _parse_float(cell, path, lineno):
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"{path}:{lineno}: non-numeric cell {cell!r}") from None
    if not math.isfinite(value):
        raise DataError(f"{path}:{lineno}: non-finite value {cell!r}")
    return value


def _is_numeric_row(row):
    try:
        [float(c) for c in row]
    except ValueError:
        return False
    return True


def load_matrix(path, layout=Layout.ROWS):
    """Read a CSV matrix; returns an ``m x n`` array with samples as columns.

    A first line with any non-numeric cell is taken as a header and skipped.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [c.strip() for c in row]
            if not row or row == [""]:
                continue
            if lineno == 1 and not _is_numeric_row(row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
            rows.append([_parse_float(c, path, lineno) for c in row])
    if not rows:
        raise DataError(f"{path}: no data rows")
    A = np.array(rows, dtype=np.float64)
    return A.T.copy() if Layout(layout) is Layout.ROWS else A


def save_matrix(M, path, layout=Layout.ROWS, header=None):
    """Write ``M`` as CSV with 17 significant digits (exact double round trip).

    With ``layout="rows"`` the columns of ``M`` (samples) become CSV rows.
    """
    A = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if Layout(layout) is Layout.ROWS:
        A = A.T
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in A:
            w.writerow([format(v, ".17g") for v in row])


@dataclass
class ManifestItem:
    path: str
    label: int | None = None
    name: str | None = None


@dataclass
class Manifest:
    items: list = field(default_factory=list)
    layout: Layout = Layout.ROWS
    root: Path = Path(".")

    @classmethod
    def read(cls, path):
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise DataError(f"{path}: no such manifest") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(raw, dict) or not isinstance(raw.get("items"), list):
            raise DataError(f"{path}: manifest needs an 'items' list")
        try:
            layout = Layout(raw.get("layout", "rows"))
        except ValueError:
            raise DataError(f"{path}: layout must be 'rows' or 'columns'") from None
        items = []
        for i, it in enumerate(raw["items"]):
            if not isinstance(it, dict) or "path" not in it:
                raise DataError(f"{path}: item {i} has no 'path'")
            label = it.get("label")
            items.append(ManifestItem(str(it["path"]), None if label is None else int(label), it.get("name")))
        return cls(items=items, layout=layout, root=path.parent)

    def write(self, path):
        doc = {
            "layout": Layout(self.layout).value,
            "items": [
                {k: v for k, v in (("path", it.path), ("label", it.label), ("name", it.name)) if v is not None}
                for it in self.items
            ],
        }
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_collection(manifest):
    """Load every matrix named by a :class:`Manifest` (or a manifest path)."""
    if not isinstance(manifest, Manifest):
        manifest = Manifest.read(manifest)
    if not manifest.items:
        raise DataError("manifest lists no items")
    sets, labels, names = [], [], []
    dim = None
    for it in manifest.items:
        p = Path(it.path)
        if not p.is_absolute():
            p = manifest.root / p
        X = load_matrix(p, manifest.layout)
        if dim is None:
            dim = X.shape[0]
        elif X.shape[0] != dim:
            raise DataError(f"{p}: feature dimension {X.shape[0]} differs from {dim}")
        sets.append(X)
        labels.append(it.label)
        names.append(it.name or p.stem)
    has_labels = all(lab is not None for lab in labels)
    return LabeledCollection(sets, labels=labels if has_labels else None, names=names)


def save_collection(collection, outdir, layout=Layout.ROWS):
    """Write each set as CSV plus a ``manifest.json``; returns the manifest path."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    items = []
    for i, (X, name) in enumerate(zip(collection.sets, collection.names)):
        fname = f"{i:03d}_{name}.csv"
        save_matrix(X, outdir / fname, layout)
        label = None if collection.labels is None else int(collection.labels[i])
        items.append(ManifestItem(fname, label, name))
    mpath = outdir / "manifest.json"
    Manifest(items=items, layout=Layout(layout)).write(mpath)
    return mpath


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def save_report(report, path):
    """Write a report (dict or object with ``to_dict``) as JSON; ``-`` is stdout."""
    if hasattr(report, "to_dict"):
        report = report.to_dict()
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
