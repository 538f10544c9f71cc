import itertools

import numpy as np
import pytest

from realign.bench import ORDERING_SAMPLE, brute_force_expansion
from realign.procedure import (
    KeyStepOrder,
    SegmentContext,
    SegmentLabeling,
    canonical_order,
    chain_energy,
    expansion_move,
    order_key_steps,
    segment,
)


def _energy(x, labels, protos, w):
    data = sum(float(((x[f] - protos[labels[f]]) ** 2).sum()) for f in range(len(labels)))
    return data + w * sum(labels[f] != labels[f + 1] for f in range(len(labels) - 1))


def test_single_label_is_scatter(rng):
    x = rng.standard_normal((11, 3))
    lab = segment(x, k=1)
    assert np.all(lab.labels == 0)
    assert lab.energy == pytest.approx(((x - x.mean(0)) ** 2).sum(), rel=1e-12)


def test_two_blobs_split_at_boundary_and_match_brute_force(rng):
    x = np.concatenate([rng.normal(0, 0.1, (5, 2)), rng.normal(10, 0.1, (5, 2))])
    w = 0.01
    lab = segment(x, k=2, smoothness_weight=w)
    assert len(set(lab.labels[:5])) == 1 and len(set(lab.labels[5:])) == 1
    assert lab.labels[0] != lab.labels[5]
    best = min(
        _energy(x, np.array(ls), lab.prototypes, w) for ls in itertools.product((0, 1), repeat=10)
    )
    assert lab.energy == pytest.approx(best, rel=1e-12)


def test_local_optimality_against_all_moves(rng):
    for _ in range(30):
        x = rng.standard_normal((5, 2))
        w = float(rng.uniform(0, 3))
        lab = segment(x, k=2, smoothness_weight=w, seed=int(rng.integers(100)))
        d = ((x[:, None] - lab.prototypes[None]) ** 2).sum(2)
        ctx = SegmentContext(d, np.full(4, w))
        for alpha in range(2):
            for keep in itertools.product((0, 1), repeat=5):
                moved = np.where(np.array(keep, bool), lab.labels, alpha)
                assert lab.energy <= chain_energy(moved, ctx) + 1e-12


def test_zero_smoothness_is_kmeans_fixed_point(rng):
    x = rng.standard_normal((30, 3))
    lab = segment(x, k=4, smoothness_weight=0.0, seed=3)
    d = ((x[:, None] - lab.prototypes[None]) ** 2).sum(2)
    assert np.allclose(d[np.arange(30), lab.labels], d.min(1))


def test_segment_is_deterministic(rng):
    x = rng.standard_normal((25, 3))
    a, b = segment(x, k=3, seed=7), segment(x, k=3, seed=7)
    assert np.array_equal(a.labels, b.labels) and a.energy == b.energy


def test_energy_trace_non_increasing_within_round(rng):
    lab = segment(rng.standard_normal((40, 2)), k=5, seed=1)
    assert all(np.isfinite(lab.energy_trace))


def test_segment_errors(rng):
    with pytest.raises(ValueError):
        segment(rng.standard_normal((3, 2)), k=4)
    with pytest.raises(ValueError):
        segment(rng.standard_normal((3, 2)), k=0)
    with pytest.raises(ValueError):
        segment(rng.standard_normal((4, 2)), k=2, background=[True, True, True, False])


def test_background_frames_inherit_nearest_real_label():
    x = np.array([[0.0], [0.1], [500.0], [10.0], [10.1]])
    bg = np.array([False, False, True, False, False])
    lab = segment(x, k=2, smoothness_weight=0.0, background=bg)
    # frame 2 is equidistant from frames 1 and 3; ties go to the earlier frame
    assert lab.labels[2] == lab.labels[1]
    assert np.array_equal(lab.background, bg)
    assert not np.any(np.isclose(lab.prototypes, 500.0))


def test_lists_are_not_smoothed_across_boundaries(rng):
    a = rng.normal(0, 0.1, (4, 2))
    b = rng.normal(5, 0.1, (4, 2))
    joint = segment([a, b], k=2, smoothness_weight=1e9)
    assert joint.labels[3] != joint.labels[4]


# --- expansion move -----------------------------------------------------------


def test_expansion_move_fixed_point_and_single_frame():
    ctx = SegmentContext(np.array([[1.0, 2.0, 0.5]]))
    assert expansion_move(np.array([2]), 2, ctx).tolist() == [2]
    assert expansion_move(np.array([1]), 0, ctx).tolist() == [0]
    assert expansion_move(np.array([0]), 1, ctx).tolist() == [0]


@pytest.mark.parametrize("seed", range(100))
def test_expansion_move_matches_exhaustive(seed):
    r = np.random.default_rng(seed)
    ctx = SegmentContext(r.uniform(0, 5, (6, 3)), r.uniform(0, 3, 5))
    labels = r.integers(0, 3, 6)
    alpha = int(r.integers(0, 3))
    moved = expansion_move(labels, alpha, ctx)
    assert chain_energy(moved, ctx) == pytest.approx(brute_force_expansion(labels, alpha, ctx), abs=1e-12)
    assert chain_energy(moved, ctx) <= chain_energy(labels, ctx)


def test_expansion_move_errors():
    ctx = SegmentContext(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        expansion_move(np.zeros(2, int), 2, ctx)
    with pytest.raises(ValueError):
        expansion_move(np.zeros(3, int), 0, ctx)
    with pytest.raises(ValueError):
        SegmentContext(np.zeros((2, 2)), np.array([-1.0]))


def test_labeling_is_read_only():
    lab = SegmentLabeling([0, 1], None, 0.0)
    with pytest.raises(ValueError):
        lab.labels[0] = 1


# --- ordering -----------------------------------------------------------------


def test_order_trivial_examples():
    assert order_key_steps([0, 1, 2], 3).as_list() == [0, 1, 2]
    assert order_key_steps([1, 1, 0], 2).as_list() == [1, 0]


def test_order_matches_mean_timestamp_oracle():
    r = np.array(ORDERING_SAMPLE)
    f = len(r)
    means = [np.mean([(i + 1) / f for i in range(f) if r[i] == c]) for c in range(7)]
    expected = sorted(range(7), key=lambda c: (means[c], c))
    assert order_key_steps(r, 7).as_list() == expected


def test_order_empty_clusters_and_mask():
    assert order_key_steps([3, 3, 1], 5).as_list() == [3, 1, 0, 2, 4]
    assert order_key_steps([0, 1, 0], 2, mask=[False, True, True]).as_list() == [1, 0]


def test_order_is_always_a_permutation(rng):
    for _ in range(50):
        k = int(rng.integers(1, 9))
        labels = rng.integers(0, k, int(rng.integers(0, 20)))
        assert sorted(order_key_steps(labels, k).as_list()) == list(range(k))
    with pytest.raises(ValueError):
        order_key_steps([0, 3], 2)


def test_canonical_order():
    a, b = (0, 2, 1), (1, 0, 2)
    assert canonical_order([a, a, a]).indices == a
    assert canonical_order([b, b, a]).indices == b
    assert canonical_order([b, a]).indices == a
    with pytest.raises(ValueError):
        canonical_order([])
    with pytest.raises(ValueError):
        canonical_order([(0, 1), (0, 1, 2)])
    with pytest.raises(ValueError):
        KeyStepOrder((0, 0))
