import math

import numpy as np
import pytest

from realign.priors import (
    anneal_phi,
    augment_prior,
    default_center,
    idm_score,
    idm_value,
    laplace_prior,
    uniform_prior,
)


def _prior_oracle(n, m, b, phi, center):
    i_o, j_o = center
    out = np.empty((n, m))
    norm = math.sqrt(1 / n**2 + 1 / m**2)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d_t = abs(i / n - j / m) / norm
            d_o = (abs(i - i_o) / n + abs(j - j_o) / m) / (2 * norm)
            out[i - 1, j - 1] = phi * math.exp(-d_t / b) + (1 - phi) * math.exp(-d_o / b)
    return out


@pytest.mark.parametrize("n,m,phi", [(5, 7, 1.0), (6, 6, 0.5), (9, 4, 0.8)])
def test_laplace_prior_matches_loop_oracle(n, m, phi):
    center = (2, 3)
    q = laplace_prior(n, m, 2.0, phi, center).data
    np.testing.assert_allclose(q, _prior_oracle(n, m, 2.0, phi, center), rtol=1e-13)


def test_prior_is_positive_and_bounded():
    q = laplace_prior(8, 11, 3.0, 0.7).data
    assert np.all(q > 0) and np.all(q <= 1)


def test_prior_diagonal_peaks_at_one_for_square_phi_one():
    q = laplace_prior(6, 6, 2.0, 1.0).data
    np.testing.assert_allclose(np.diag(q), 1.0)


def test_prior_validation():
    with pytest.raises(ValueError):
        laplace_prior(3, 3, phi=0.4)
    with pytest.raises(ValueError):
        laplace_prior(3, 3, b=0)
    with pytest.raises(ValueError):
        laplace_prior(3, 3, center=(0, 1))


def test_anneal_schedule():
    assert anneal_phi(0, 10) == 1.0
    assert anneal_phi(10, 10) == 0.5
    assert anneal_phi(5, 10) == 0.75
    with pytest.raises(ValueError):
        anneal_phi(11, 10)
    with pytest.raises(ValueError):
        anneal_phi(0, 0)


def test_default_center_rounds_up():
    assert default_center(5, 4) == (3, 2)


def test_idm_score_oracle():
    n, m, lam, center = 3, 4, 0.5, (2, 2)
    s = idm_score(n, m, lam, center).data
    assert s.shape == (4, 5)
    for i in range(1, n + 2):
        for j in range(1, m + 2):
            diag = 1 / ((i / (n + 1) - j / (m + 1)) ** 2 + 1)
            d_m = ((i - 2) / (n + 1)) ** 2 + ((j - 2) / (m + 1)) ** 2
            assert s[i - 1, j - 1] == pytest.approx(lam * (diag + 1 / (0.5 * d_m + 1)), rel=1e-14)


def test_idm_value_oracle_ignores_virtual_entries(rng):
    n, m = 4, 3
    t = rng.uniform(0, 1, (n + 1, m + 1))
    phi, center = 0.7, (2, 2)
    expected = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d_m = ((i - 2) / (n + 1)) ** 2 + ((j - 2) / (m + 1)) ** 2
            expected += phi * t[i - 1, j - 1] / ((i / n - j / m) ** 2 + 1)
            expected += (1 - phi) * t[i - 1, j - 1] / (0.5 * d_m + 1)
    assert idm_value(t, n, m, phi, center) == pytest.approx(expected, rel=1e-13)
    t2 = t.copy()
    t2[-1, :] += 5
    t2[:, -1] += 5
    assert idm_value(t2, n, m, phi, center) == pytest.approx(expected, rel=1e-13)


def test_augment_prior():
    q = augment_prior(uniform_prior(2, 2, 0.5), 0.01).data
    assert q.shape == (3, 3)
    assert np.all(q[2] == 0.01) and np.all(q[:, 2] == 0.01)
    assert augment_prior(uniform_prior(3, 4)).data[3, 4] == pytest.approx(1 / 20)
    with pytest.raises(ValueError):
        augment_prior(uniform_prior(2, 2), 0.0)
    with pytest.raises(ValueError):
        augment_prior(augment_prior(uniform_prior(2, 2)))
