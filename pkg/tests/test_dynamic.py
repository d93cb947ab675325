import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import shannon_bits
from crave.clustering import (
    aggregate_sweeps,
    cosine_distance_matrix,
    dynamic_cluster_analysis,
    parse_thresholds,
    size_entropy,
    sweep_to_csv,
)
from crave.clustering._backend import kernels
from crave.clustering.dynamic import SweepResult, SweepRow, cut_sizes
from crave.errors import EmptyInput, ZeroVector

hierarchy = pytest.importorskip("scipy.cluster.hierarchy")
from scipy.spatial.distance import squareform  # noqa: E402

GRID = [round(0.05 * i, 2) for i in range(0, 21)]


def test_identical_texts_one_cluster():
    v = np.array([[0.3, 0.4, 0.5], [0.3, 0.4, 0.5]])
    res = dynamic_cluster_analysis(v, GRID)
    assert all(r.mean_clusters == 1 and r.entropy == 0.0 for r in res.rows)


def test_four_singletons_two_bits():
    res = dynamic_cluster_analysis(np.eye(4), [0.5])
    assert res.rows[0].mean_clusters == 4
    assert res.rows[0].entropy == pytest.approx(2.0, abs=1e-12)


def test_merge_threshold_is_inclusive():
    # cosine similarity exactly 0.5 between the two vectors
    v = np.array([[1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    res = dynamic_cluster_analysis(v, [0.5, 0.5 + 1e-6])
    assert [r.mean_clusters for r in res.rows] == [1, 2]


def test_errors():
    with pytest.raises(EmptyInput):
        dynamic_cluster_analysis(np.zeros((0, 3)), [0.5])
    with pytest.raises(ZeroVector):
        dynamic_cluster_analysis(np.array([[0.0, 0.0], [1.0, 0.0]]), [0.5])
    with pytest.raises(ValueError):
        dynamic_cluster_analysis(np.eye(2), [0.7, 0.5])
    with pytest.raises(EmptyInput):
        dynamic_cluster_analysis(np.eye(2), [])


def test_peak_prefers_lowest_threshold_on_ties():
    res = dynamic_cluster_analysis(np.eye(3), [0.2, 0.4, 0.6])
    assert res.peak_threshold == 0.2


@pytest.mark.parametrize("sizes", [[1, 1, 1, 1], [5], [3, 1], [2, 2, 1, 7]])
def test_entropy_matches_oracle(sizes):
    assert size_entropy(sizes) == pytest.approx(shannon_bits(sizes), abs=1e-12)


embeddings = st.integers(2, 20).flatmap(
    lambda n: arrays(np.float64, (n, 4), elements=st.floats(0.0625, 5, allow_nan=False, width=32))
)


@settings(max_examples=60, deadline=None)
@given(embeddings)
def test_linkage_heights_match_scipy(X):
    D = cosine_distance_matrix(X)
    ours = kernels.average_linkage(D)
    ref = hierarchy.linkage(squareform(D, checks=False), method="average")
    np.testing.assert_allclose(np.sort(ours[:, 2]), np.sort(ref[:, 2]), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(embeddings, st.floats(0.0, 1.0))
def test_cut_matches_scipy_fcluster(X, t):
    D = cosine_distance_matrix(X)
    ref = hierarchy.linkage(squareform(D, checks=False), method="average")
    ref_labels = hierarchy.fcluster(ref, t=1.0 - t, criterion="distance")
    heights = ref[:, 2]
    # skip cuts that land within float noise of a merge height
    if np.any(np.abs(heights - (1.0 - t)) < 1e-9):
        return
    ours = cut_sizes(kernels.average_linkage(D), len(X), 1.0 - t)
    ref_sizes = sorted(np.bincount(ref_labels)[1:].tolist(), reverse=True)
    assert ours == [s for s in ref_sizes if s]


@settings(max_examples=60, deadline=None)
@given(embeddings)
def test_counts_monotone_and_entropy_bounded(X):
    res = dynamic_cluster_analysis(X, GRID)
    counts = [r.mean_clusters for r in res.rows]
    assert counts == sorted(counts)
    assert all(0.0 <= r.entropy <= np.log2(len(X)) + 1e-12 for r in res.rows)
    best = max(r.entropy for r in res.rows)
    assert res.peak_threshold == next(r.threshold for r in res.rows if r.entropy == best)


def test_parse_thresholds():
    assert parse_thresholds("0.5:0.95:0.05") == [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]
    assert parse_thresholds("0.9, 0.5") == [0.5, 0.9]
    for bad in ("0.5:0.4:0.1", "0.5:0.9", "0.1:0.2:0"):
        with pytest.raises(ValueError):
            parse_thresholds(bad)


def test_csv_and_aggregate():
    a = SweepResult((SweepRow(0.5, 1.0, 0.0), SweepRow(0.9, 3.0, 1.5)), 0.9)
    b = SweepResult((SweepRow(0.5, 2.0, 1.0), SweepRow(0.9, 4.0, 0.5)), 0.5)
    agg = aggregate_sweeps([a, b])
    assert [(r.mean_clusters, r.entropy) for r in agg.rows] == [(1.5, 0.5), (3.5, 1.0)]
    assert agg.peak_threshold == 0.9
    assert sweep_to_csv(agg.rows).splitlines() == [
        "threshold,mean_clusters,entropy",
        "0.5,1.5,0.500000",
        "0.9,3.5,1.000000",
    ]
    with pytest.raises(ValueError):
        aggregate_sweeps([a, SweepResult((SweepRow(0.1, 1, 0),), 0.1)])
