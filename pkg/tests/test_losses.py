import math

import numpy as np
import pytest

from realign.losses import LossConfig, cidm_gradient, cidm_loss, inter_loss, realign_loss


def test_cidm_trivial_cases():
    assert cidm_loss(np.ones((1, 3))) == 0.0
    assert cidm_loss(np.ones((16, 3))) == 0.0
    assert cidm_loss(np.array([[0.0, 0.0], [3.0, 0.0]]), LossConfig(delta=15, lambda3=2.0)) == pytest.approx(3.0, rel=1e-15)


def test_cidm_hinge_branch_oracle():
    # delta=0: the two cross pairs are non-neighbors, gamma=2, hinge 2*(2-0.5)
    x = np.array([[0.0], [0.5]])
    assert cidm_loss(x, LossConfig(delta=0)) == pytest.approx(2 * 2 * 1.5)


def test_cidm_matches_double_loop(rng):
    x = rng.standard_normal((9, 3))
    cfg = LossConfig(delta=2, lambda3=3.0)
    ref = 0.0
    for i in range(9):
        for j in range(9):
            d = float(np.linalg.norm(x[i] - x[j]))
            g = (i - j) ** 2 + 1
            ref += d / g if abs(i - j) <= cfg.delta else g * max(0.0, cfg.lambda3 - d)
    assert cidm_loss(x, cfg) == pytest.approx(ref, rel=1e-12)


def test_cidm_nonnegative_and_rigid_invariant(rng):
    cfg = LossConfig(delta=3)
    for _ in range(20):
        x = rng.standard_normal((12, 4))
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        base = cidm_loss(x, cfg)
        assert base >= 0
        assert cidm_loss(x @ q + rng.standard_normal(4), cfg) == pytest.approx(base, rel=1e-9, abs=1e-9)


def test_cidm_gradient_trivial_cases():
    assert np.all(cidm_gradient(np.zeros((4, 2))) == 0)
    x = np.array([[0.0, 0.0], [10.0, 0.0]])
    assert np.all(cidm_gradient(x, LossConfig(delta=0)) == 0)


def test_cidm_gradient_finite_differences(rng):
    cfg = LossConfig(delta=2, lambda3=2.0)
    for _ in range(20):
        x = rng.standard_normal((5, 3))
        d = np.linalg.norm(x[:, None] - x[None], axis=2)
        off = d[~np.eye(5, dtype=bool)]
        if np.min(np.abs(off - cfg.lambda3)) < 1e-3 or off.min() < 1e-3:
            continue
        g = cidm_gradient(x, cfg)
        h = 1e-5
        fd = np.zeros_like(x)
        for idx in np.ndindex(*x.shape):
            e = np.zeros_like(x)
            e[idx] = h
            fd[idx] = (cidm_loss(x + e, cfg) - cidm_loss(x - e, cfg)) / (2 * h)
        assert np.max(np.abs(g - fd)) <= 1e-5 * max(1.0, np.max(np.abs(fd)))


def _ce(best, worst):
    # softmax cross-entropy of [best, worst] logits against target [0, 1]
    return -math.log(math.exp(worst) / (math.exp(best) + math.exp(worst)))


def test_inter_loss_self_alignment_limit():
    x = np.array([[0.0], [1.0], [3.0]])
    plan = np.eye(4)
    plan[:3, :3] += 0.01
    got = inter_loss(plan, x, x, axis="rows")
    # worst of each row: smallest index among the off-diagonal minima
    w = (1.0 + 1.0 + 3.0) / 3
    assert got == pytest.approx(_ce(0.0, w), rel=1e-14)
    assert inter_loss(plan, 3 * x, 3 * x, axis="rows") < got


def test_inter_loss_hand_oracle():
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    y = np.array([[1.0, 1.0], [0.0, 3.0], [2.0, 0.0]])
    t = np.array([[0.5, 0.1, 0.2], [0.1, 0.3, 0.05], [0.2, 0.6, 0.1]])
    # rows: best (0,0) (1,1) (2,1); worst (0,1) (1,2) (2,2)
    dist = lambda a, b: math.dist(x[a], y[b])
    best_r = [dist(0, 0), dist(1, 1), dist(2, 1)]
    worst_r = [dist(0, 1), dist(1, 2), dist(2, 2)]
    # cols: best (0,0) (2,1) (0,2); worst (1,0) (0,1) (1,2)
    best_c = [dist(0, 0), dist(2, 1), dist(0, 2)]
    worst_c = [dist(1, 0), dist(0, 1), dist(1, 2)]
    assert inter_loss(t, x, y, "rows") == pytest.approx(_ce(np.mean(best_r), np.mean(worst_r)), abs=1e-10)
    assert inter_loss(t, x, y, "cols") == pytest.approx(_ce(np.mean(best_c), np.mean(worst_c)), abs=1e-10)
    both = _ce(np.mean(best_r + best_c), np.mean(worst_r + worst_c))
    assert inter_loss(t, x, y) == pytest.approx(both, abs=1e-10)


def test_inter_loss_scale_and_swap(rng):
    x, y = rng.standard_normal((5, 3)), rng.standard_normal((7, 3))
    t = rng.uniform(0, 1, (6, 8))
    base = inter_loss(t, x, y)
    assert inter_loss(3.7 * t, x, y) == base
    assert inter_loss(t.T, y, x) == pytest.approx(base, rel=1e-15)
    assert inter_loss(np.ones((5, 7)), x, y) >= 0


def test_inter_loss_errors():
    with pytest.raises(ValueError):
        inter_loss(np.ones((3, 3)), np.zeros((4, 1)), np.zeros((4, 1)))
    with pytest.raises(ValueError):
        inter_loss(np.ones((2, 2)), np.zeros((1, 1)), np.zeros((1, 1)), axis="diag")


def test_realign_loss_weights():
    zero = dict(rfpgwot_objective=0.0, cidm_x=0.0, cidm_y=0.0, inter=0.0)
    assert realign_loss(zero, n=4, m=5) == 0.0
    parts = dict(rfpgwot_objective=3.5, cidm_x=2.0, cidm_y=9.0, inter=4.0)
    assert realign_loss(parts, LossConfig(c1=0.25, c2=0.0, c3=0.0)) == 0.25 * 3.5
    unit = dict(rfpgwot_objective=1.0, cidm_x=1.0, cidm_y=1.0, inter=1.0)
    assert realign_loss(unit, n=30, m=32) == pytest.approx(1 / (30 * 32) + 2 * 0.5 + 0.0001, rel=1e-15)


def test_realign_loss_errors():
    with pytest.raises(ValueError):
        realign_loss(dict(rfpgwot_objective=1.0), n=2, m=2)
    with pytest.raises(ValueError):
        realign_loss(dict(rfpgwot_objective=1.0, cidm_x=0.0, cidm_y=0.0, inter=0.0))
    with pytest.raises(ValueError):
        LossConfig(lambda3=0)
