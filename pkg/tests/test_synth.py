import numpy as np
import pytest

from realign.synth import BACKGROUND, GroundTruth, SynthConfig, generate_pair, generate_sequence, step_centroids


def test_centroids_are_equidistant(rng):
    c = step_centroids(5, 8, 10.0, rng)
    d = np.linalg.norm(c[:, None] - c[None], axis=2)
    off = d[~np.eye(5, dtype=bool)]
    np.testing.assert_allclose(off, 10.0, rtol=1e-12)


def test_infeasible_dimension_raises():
    with pytest.raises(ValueError):
        generate_pair(SynthConfig(k=5, dim=3))


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(background_rate=0.6, repeat_rate=0.5)
    with pytest.raises(ValueError):
        SynthConfig(frames_per_step=(5, 2))
    assert SynthConfig().separable
    assert not SynthConfig(step_separation=8, noise_sigma=2).separable


def test_deterministic_given_seed():
    a = generate_pair(SynthConfig(seed=7, background_rate=0.1, repeat_rate=0.1, permute=True))
    b = generate_pair(SynthConfig(seed=7, background_rate=0.1, repeat_rate=0.1, permute=True))
    assert np.array_equal(a[0].data, b[0].data) and np.array_equal(a[1].data, b[1].data)
    assert np.array_equal(a[2].labels, b[2].labels) and a[3].order == b[3].order


def _runs(labels):
    return [int(v) for i, v in enumerate(labels) if i == 0 or labels[i - 1] != v]


def test_clean_pair_shares_label_structure():
    x, y, gx, gy = generate_pair(SynthConfig(noise_sigma=0.0, seed=3))
    assert _runs(gx.labels) == _runs(gy.labels) == [0, 1, 2, 3]
    assert x.length == gx.labels.size and y.length == gy.labels.size


def test_permute_records_non_identity_order():
    _, _, gx, gy = generate_pair(SynthConfig(k=3, permute=True, seed=11))
    assert gx.order == (0, 1, 2)
    assert gy.order != (0, 1, 2) and sorted(gy.order) == [0, 1, 2]
    assert _runs(gy.labels) == list(gy.order)


def test_frame_counts_within_range():
    _, _, gx, _ = generate_pair(SynthConfig(frames_per_step=(3, 5), seed=1))
    counts = np.bincount(gx.labels)
    assert np.all((counts >= 3) & (counts <= 5))


def test_background_frames_far_from_centroids():
    cfg = SynthConfig(background_rate=0.3, seed=4)
    rng = np.random.default_rng(cfg.seed)
    cents = step_centroids(cfg.k, cfg.dim, cfg.step_separation, rng)
    x, gt = generate_sequence(cfg, cents, list(range(cfg.k)), rng)
    bg = x.data[gt.labels == BACKGROUND]
    assert bg.shape[0] > 0
    d = np.linalg.norm(bg[:, None] - cents[None], axis=2)
    assert d.min() >= 2 * cfg.step_separation


def test_background_count_binomial_bound():
    # the first 100 slots are i.i.d. background draws; Binomial(100, 0.2) puts
    # about 99% of its mass in [10, 30], so >= 95% of 1000 seeds must land there
    cfg = SynthConfig(k=1, dim=2, frames_per_step=(200, 200), background_rate=0.2, noise_sigma=1.0)
    cents = np.zeros((1, 2))
    hits = 0
    for seed in range(1000):
        _, gt = generate_sequence(cfg, cents, [0], np.random.default_rng(seed))
        hits += 10 <= np.sum(gt.labels[:100] == BACKGROUND) <= 30
    assert hits >= 950


def test_real_frames_three_sigma_tail():
    # per-coordinate |z| <= 3 holds with probability 0.9973
    cfg = SynthConfig(k=2, dim=4, frames_per_step=(5, 5), noise_sigma=1.5)
    inside = total = 0
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        cents = step_centroids(cfg.k, cfg.dim, cfg.step_separation, rng)
        x, gt = generate_sequence(cfg, cents, [0, 1], rng)
        z = (x.data - cents[gt.labels]) / cfg.noise_sigma
        inside += int(np.sum(np.abs(z) <= 3))
        total += z.size
    p, n = 0.9973, total
    assert abs(inside / n - p) <= 4 * np.sqrt(p * (1 - p) / n)


def test_repeats_duplicate_earlier_segments():
    x, _, gx, _ = generate_pair(SynthConfig(repeat_rate=0.9, seed=5, k=3))
    runs = _runs(gx.labels)
    assert len(runs) > 3
    assert set(runs) == {0, 1, 2}


def test_ground_truth_roundtrip():
    gt = GroundTruth(np.array([0, -1, 1]), (0, 1))
    back = GroundTruth.from_dict(gt.to_dict())
    assert np.array_equal(back.labels, gt.labels) and back.order == gt.order
