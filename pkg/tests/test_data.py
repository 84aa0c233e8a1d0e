import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrdkit.data import (
    Layout,
    Manifest,
    ManifestItem,
    gen_gaussian_clouds,
    gen_polygons,
    gen_spiral,
    load_collection,
    load_matrix,
    make_rng,
    perturb,
    save_collection,
    save_matrix,
    save_report,
    spiral_arms,
)
from mrdkit.errors import DataError, InvalidInputError


def test_rng_is_philox_and_reproducible():
    a, b = make_rng(7), make_rng(7)
    assert isinstance(a.bit_generator, np.random.Philox)
    np.testing.assert_array_equal(a.standard_normal(5), b.standard_normal(5))
    assert not np.array_equal(make_rng(7, 0).standard_normal(5), make_rng(7, 1).standard_normal(5))


def test_polygons_counts_and_replay():
    coll = gen_polygons(8, seed=3)
    assert [X.shape for X in coll.sets] == [(2, 2)] * 4
    again = gen_polygons(8, seed=3)
    for A, B in zip(coll.sets, again.sets):
        assert A.tobytes() == B.tobytes()


def test_polygons_rejects_bad_n():
    with pytest.raises(InvalidInputError):
        gen_polygons(10)


def test_polygons_boxes_and_rings():
    coll = gen_polygons(4000, radius=1.0, seed=0)
    lr, ul = coll.sets[2], coll.sets[3]
    assert np.all((lr[0] >= 1.5) & (lr[0] <= 3.0) & (lr[1] >= -1.0) & (lr[1] <= 0.5))
    assert np.all((ul[0] >= -1.0) & (ul[0] <= 0.5) & (ul[1] >= 1.5) & (ul[1] <= 3.0))
    for X, center in zip(coll.sets[:2], (0.0, 2.0)):
        radii = np.linalg.norm(X - center, axis=0)
        # radial noise is ~N(0, 0.01): about 0.13 of 1000 points fall beyond 4 sd
        assert np.sum(np.abs(radii - 1.0) > 4 * math.sqrt(0.01)) <= 3
        assert np.all(np.abs(radii - 1.0) <= 6 * math.sqrt(0.01))


@pytest.mark.parametrize("N", [400, 4000])
def test_polygon_circle_means(N):
    # the mean of r cos(2 pi U) has std r / sqrt(2n), on top of the 0.1 jitter
    n = N // 4
    tol = 5 * math.sqrt(0.5 + 0.01) / math.sqrt(n)
    coll = gen_polygons(N, seed=1)
    for X, center in zip(coll.sets[:2], (0.0, 2.0)):
        assert np.all(np.abs(X.mean(axis=1) - center) <= tol)


def test_spiral_examples():
    coll = gen_spiral(2, seed=0)
    assert [X.shape for X in coll.sets] == [(2, 1), (2, 1)]
    a1, a2 = spiral_arms([1.0])
    np.testing.assert_allclose(a1[:, 0], [9 * math.pi, 0.0], atol=1e-12)
    np.testing.assert_allclose(a2[:, 0], [-9 * math.pi, 0.0], atol=1e-12)
    a1, _ = spiral_arms([0.0])
    np.testing.assert_allclose(a1[:, 0], [math.pi, 0.0])
    with pytest.raises(InvalidInputError):
        gen_spiral(3)


def test_spiral_noiseless_radii():
    theta = make_rng(0).uniform(size=4000)
    for arm in spiral_arms(theta):
        r = np.linalg.norm(arm, axis=0)
        assert np.all((r >= math.pi - 1e-12) & (r <= 9 * math.pi + 1e-12))


def test_spiral_replay_and_counts():
    a, b = gen_spiral(4000, seed=9), gen_spiral(4000, seed=9)
    assert [X.shape[1] for X in a.sets] == [2000, 2000]
    assert all(A.tobytes() == B.tobytes() for A, B in zip(a.sets, b.sets))


def test_clouds_single_cluster():
    coll = gen_gaussian_clouds(1, 4, 5, seed=0)
    assert coll.labels == [0, 0, 0, 0]


def test_clouds_replay():
    a = gen_gaussian_clouds(3, 2, 5, dim=3, seed=4)
    b = gen_gaussian_clouds(3, 2, 5, dim=3, seed=4)
    assert all(A.tobytes() == B.tobytes() for A, B in zip(a.sets, b.sets))


@pytest.mark.parametrize("dim", [1, 2, 5])
def test_cloud_means_are_separated(dim):
    from mrdkit.data import cluster_means

    mu = cluster_means(4, dim, 10.0)
    d = np.linalg.norm(mu[:, :, None] - mu[:, None, :], axis=0)
    assert d[~np.eye(4, dtype=bool)].min() == pytest.approx(10.0)


def test_cloud_sample_means_concentrate():
    from mrdkit.data import cluster_means

    p = 50
    mu = cluster_means(3, 2, 10.0)
    hits = total = 0
    for draw in range(100):
        coll = gen_gaussian_clouds(3, 1, p, dim=2, separation=10, spread=1, seed=draw)
        for X, k in zip(coll.sets, coll.labels):
            # per coordinate: |mean - mu| <= 3 spread / sqrt(p)
            hits += np.all(np.abs(X.mean(axis=1) - mu[:, k]) <= 3 / math.sqrt(p))
            total += 1
    assert hits / total >= 0.99


def test_perturb():
    X = make_rng(1).standard_normal((4, 6))
    np.testing.assert_array_equal(perturb(X, 0.0, seed=3), X)
    np.testing.assert_array_equal(perturb(X, 0.5, seed=3), perturb(X, 0.5, seed=3))
    big = np.zeros((100, 100))
    q = float(np.sum((perturb(big, 1.0, seed=11) - big) ** 2))
    mn = 100 * 100
    assert mn - 5 * math.sqrt(2 * mn) <= q <= mn + 5 * math.sqrt(2 * mn)
    with pytest.raises(InvalidInputError):
        perturb(X, -1.0)


@given(m=st.integers(1, 5), n=st.integers(1, 5), seed=st.integers(0, 2**31))
@settings(max_examples=25, deadline=None)
def test_csv_round_trip_exact(m, n, seed, tmp_path_factory):
    r = make_rng(seed)
    X = r.standard_normal((m, n)) * 10.0 ** r.integers(-300, 300, size=(m, n))
    path = tmp_path_factory.mktemp("csv") / "x.csv"
    save_matrix(X, path)
    Y = load_matrix(path)
    assert Y.shape == X.shape and Y.tobytes() == X.tobytes()


def test_rows_are_samples_transpose(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3,4\n5,6\n")
    X = load_matrix(p)
    np.testing.assert_array_equal(X, [[1, 3, 5], [2, 4, 6]])
    np.testing.assert_array_equal(load_matrix(p, Layout.COLUMNS), [[1, 2], [3, 4], [5, 6]])


def test_header_is_detected(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("x,y\n1,2\n")
    np.testing.assert_array_equal(load_matrix(p), [[1], [2]])


@pytest.mark.parametrize("text, where", [
    ("1,2\n3\n", ":2:"),
    ("1,2\n3,abc\n", ":2:"),
    ("1,2\n3,nan\n", ":2:"),
    ("x,y\n", "no data"),
])
def test_csv_errors_name_file_and_line(tmp_path, text, where):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(DataError, match=f"bad.csv.*{where}" if where.startswith(":") else where):
        load_matrix(p)


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_matrix(tmp_path / "nope.csv")


def test_collection_round_trip(tmp_path):
    coll = gen_gaussian_clouds(2, 2, 3, seed=0)
    mpath = save_collection(coll, tmp_path / "out")
    loaded = load_collection(mpath)
    assert loaded.labels == coll.labels
    for A, B in zip(coll.sets, loaded.sets):
        assert A.tobytes() == B.tobytes()


def test_manifest_mixed_dims_names_file(tmp_path):
    save_matrix(np.ones((2, 3)), tmp_path / "a.csv")
    save_matrix(np.ones((3, 3)), tmp_path / "b.csv")
    Manifest([ManifestItem("a.csv"), ManifestItem("b.csv")]).write(tmp_path / "m.json")
    with pytest.raises(DataError, match="b.csv"):
        load_collection(tmp_path / "m.json")


def test_manifest_errors(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{not json")
    with pytest.raises(DataError, match="m.json:1"):
        Manifest.read(p)
    p.write_text(json.dumps({"layout": "diagonal", "items": []}))
    with pytest.raises(DataError, match="layout"):
        Manifest.read(p)
    p.write_text(json.dumps({"items": [{"label": 1}]}))
    with pytest.raises(DataError, match="path"):
        Manifest.read(p)


def test_manifest_without_labels(tmp_path):
    save_matrix(np.ones((2, 3)), tmp_path / "a.csv")
    (tmp_path / "m.json").write_text(json.dumps({"items": [{"path": "a.csv"}]}))
    coll = load_collection(tmp_path / "m.json")
    assert coll.labels is None and coll.names == ["a"]


def test_save_report_handles_numpy(tmp_path):
    p = tmp_path / "r.json"
    save_report({"a": np.float64(1.5), "b": np.arange(3), "c": float("inf")}, p)
    assert json.loads(p.read_text()) == {"a": 1.5, "b": [0, 1, 2], "c": None}
