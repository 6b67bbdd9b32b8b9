import numpy as np

from mra_lab.randomness import indices, normals, stream, uniform01


def test_same_path_same_draws():
    a = normals(stream(123, 5, 7), 1000)
    b = normals(stream(123, 5, 7), 1000)
    assert np.array_equal(a, b)


def test_distinct_paths_distinct_draws():
    a = normals(stream(123, 5, 7), 1000)
    b = normals(stream(123, 5, 8), 1000)
    c = normals(stream(124, 5, 7), 1000)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_uniform_is_open_interval():
    u = uniform01(stream(0, 1), 100000)
    assert u.min() > 0.0
    assert u.max() < 1.0


def test_normal_moments():
    x = normals(stream(99, 0), 200000)
    assert abs(x.mean()) < 0.01
    assert abs(x.std() - 1.0) < 0.01
    # symmetric tails
    assert abs((x > 1.96).mean() - 0.025) < 0.002
    assert abs((x < -1.96).mean() - 0.025) < 0.002


def test_indices_cover_range_uniformly():
    idx = indices(stream(7, 3), 6, 60000)
    assert idx.min() == 0
    assert idx.max() == 5
    counts = np.bincount(idx, minlength=6)
    assert np.all(np.abs(counts - 10000) < 500)


def test_path_tuple_length_matters():
    # (5, 7) and (5, 7, 1) are distinct sub-streams
    a = normals(stream(1, 5, 7), 10)
    b = normals(stream(1, 5, 7, 1), 10)
    assert not np.array_equal(a, b)
