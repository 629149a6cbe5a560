import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from irsbf import pbf
from irsbf.channel import ChannelSet
from irsbf.errors import InvalidArgument
from irsbf.objective import (BeamformerState, effective_channel, effective_channels, sinr,
                             sinr_vector, surrogate_f2, update_alpha, weighted_sum_rate)
from irsbf.selftest import crandn, random_channels, random_phases_matrix

NOISE = 0.3


def orthogonal_setup(gammas, noise=NOISE, c=0.7):
    """K users with orthogonal unit effective channels scaled by ``c``."""
    k = len(gammas)
    ch = ChannelSet(w=np.eye(k, dtype=complex)[None], h=(c * np.eye(k, dtype=complex))[None])
    p = np.diag(np.sqrt(np.asarray(gammas) * noise) / c).astype(complex)
    return ch, BeamformerState(p=p, theta=np.ones((k, 1), dtype=complex))


def random_state(rng, ch, scale=1.0):
    return BeamformerState(p=scale * crandn(rng, ch.n_bs, ch.k_users),
                           theta=random_phases_matrix(rng, ch.m, ch.g_irs))


def test_effective_channel_zero_theta(rng):
    ch = random_channels(rng)
    assert not np.any(effective_channel(ch, np.zeros((ch.m, ch.g_irs)), 0))


def test_effective_channel_scalar_reduction(rng):
    w = crandn(rng, 1, 1, 3)
    h = crandn(rng, 1, 1, 1)
    ch = ChannelSet(w=w, h=h)
    row = effective_channels(ch, np.ones((1, 1)))[0]
    np.testing.assert_allclose(row, np.conj(h[0, 0, 0]) * w[0, 0], atol=1e-15)
    np.testing.assert_allclose(effective_channel(ch, np.ones((1, 1)), 0), row.conj())


def test_effective_channel_matches_direct_sum(rng):
    ch = random_channels(rng, n=5, g=3, m=4, k=2)
    theta = random_phases_matrix(rng, 4, 3)
    for k in range(2):
        direct = sum(ch.h[g, k].conj() @ np.diag(theta[:, g]).conj().T @ ch.w[g]
                     for g in range(3))
        np.testing.assert_allclose(effective_channels(ch, theta)[k], direct, atol=1e-12)


def test_effective_channel_matches_stacked_form(rng):
    ch = random_channels(rng, n=5, g=3, m=4, k=3)
    theta = random_phases_matrix(rng, 4, 3)
    p = crandn(rng, 5, 3)
    hh = effective_channels(ch, theta)
    tv = theta.reshape(-1, order="F")
    for k in range(3):
        for j in range(3):
            v = pbf.stack([pbf.reflection_vector(ch, p[:, j], g, k) for g in range(3)])
            assert abs(np.vdot(tv, v) - hh[k] @ p[:, j]) < 1e-12


def test_effective_channel_bad_index(rng):
    ch = random_channels(rng)
    with pytest.raises(InvalidArgument):
        effective_channel(ch, np.ones((ch.m, ch.g_irs)), 5)


def test_sinr_zero_precoder_column(rng):
    ch = random_channels(rng, k=2)
    st = random_state(rng, ch)
    st.p[:, 0] = 0
    assert sinr(ch, st, 0, NOISE) == 0.0


def test_sinr_single_user(rng):
    ch = random_channels(rng, k=1)
    st = random_state(rng, ch)
    g = effective_channels(ch, st.theta)[0] @ st.p[:, 0]
    assert sinr(ch, st, 0, NOISE) == pytest.approx(abs(g) ** 2 / NOISE, rel=1e-14)


def test_sinr_orthogonal_matches_single_user_formula(rng):
    ch = random_channels(rng, n=6, k=3)
    theta = random_phases_matrix(rng, ch.m, ch.g_irs)
    hh = effective_channels(ch, theta)
    # Zero-forcing columns make every cross gain vanish.
    p = np.linalg.pinv(hh) * np.array([1.0, 2.0, 0.5])
    st = BeamformerState(p=p, theta=theta)
    for k in range(3):
        assert sinr(ch, st, k, NOISE) == pytest.approx(abs(hh[k] @ p[:, k]) ** 2 / NOISE,
                                                        rel=1e-9)


def test_weighted_sum_rate_examples():
    ch, st = orthogonal_setup([0.0, 0.0])
    st.p[:] = 0
    assert weighted_sum_rate(ch, st, np.ones(2), NOISE) == 0.0
    ch, st = orthogonal_setup([1.0])
    assert weighted_sum_rate(ch, st, np.ones(1), NOISE) == pytest.approx(1.0, abs=1e-12)
    ch, st = orthogonal_setup([3.0, 1.0])
    assert weighted_sum_rate(ch, st, np.ones(2), NOISE) == pytest.approx(3.0, abs=1e-12)


def test_surrogate_equals_rate_at_alpha_gamma(rng):
    for _ in range(20):
        ch = random_channels(rng, k=3)
        st = random_state(rng, ch)
        w = rng.uniform(0.2, 3, size=3)
        st.alpha = update_alpha(ch, st, NOISE)
        f1 = weighted_sum_rate(ch, st, w, NOISE)
        assert surrogate_f2(ch, st, w, NOISE) == pytest.approx(f1, rel=1e-10)


def test_surrogate_zero():
    ch, st = orthogonal_setup([0.0, 0.0])
    st.p[:] = 0
    assert surrogate_f2(ch, st, np.ones(2), NOISE) == 0.0


def test_surrogate_rejects_negative_alpha(rng):
    ch = random_channels(rng)
    st = random_state(rng, ch)
    st.alpha = -np.ones(ch.k_users)
    with pytest.raises(InvalidArgument):
        surrogate_f2(ch, st, np.ones(ch.k_users), NOISE)


@pytest.mark.parametrize("gamma", [0.05, 0.7, 4.0, 30.0])
def test_surrogate_maximized_over_alpha_at_gamma(gamma):
    ch, st = orthogonal_setup([gamma])
    w = np.ones(1)

    def neg(a):
        st.alpha = np.array([a])
        return -surrogate_f2(ch, st, w, NOISE)

    res = minimize_scalar(neg, bounds=(0, 10 * gamma + 10), method="bounded",
                          options={"xatol": 1e-10})
    assert res.x == pytest.approx(gamma, rel=1e-4, abs=1e-6)


def test_update_alpha_zero_precoder(rng):
    ch = random_channels(rng)
    st = random_state(rng, ch, scale=0.0)
    assert not np.any(update_alpha(ch, st, NOISE))


def test_update_alpha_ascent(rng):
    for _ in range(50):
        ch = random_channels(rng, k=3)
        st = random_state(rng, ch)
        w = rng.uniform(0.5, 2, size=3)
        st.alpha = rng.uniform(0, 5, size=3)
        before = surrogate_f2(ch, st, w, NOISE)
        st.alpha = update_alpha(ch, st, NOISE)
        assert surrogate_f2(ch, st, w, NOISE) >= before - 1e-12


def test_alpha_stationarity_finite_differences(rng):
    h = 1e-5
    for _ in range(20):
        ch = random_channels(rng, k=3)
        st = random_state(rng, ch)
        w = rng.uniform(0.5, 2, size=3)
        st.alpha = update_alpha(ch, st, NOISE)
        for k in range(3):
            up, dn = st.copy(), st.copy()
            up.alpha[k] += h
            dn.alpha[k] -= h
            deriv = (surrogate_f2(ch, up, w, NOISE) - surrogate_f2(ch, dn, w, NOISE)) / (2 * h)
            assert abs(deriv) < 1e-6


def test_weight_scaling(rng):
    ch = random_channels(rng, k=3)
    st = random_state(rng, ch)
    st.alpha = rng.uniform(0, 2, size=3)
    w = rng.uniform(0.5, 2, size=3)
    assert weighted_sum_rate(ch, st, 3.5 * w, NOISE) == pytest.approx(
        3.5 * weighted_sum_rate(ch, st, w, NOISE), rel=1e-13)
    assert surrogate_f2(ch, st, 3.5 * w, NOISE) == pytest.approx(
        3.5 * surrogate_f2(ch, st, w, NOISE), rel=1e-12)


def test_sinr_vector_matches_scalar(rng):
    ch = random_channels(rng, k=3)
    st = random_state(rng, ch)
    vec = sinr_vector(effective_channels(ch, st.theta), st.p, NOISE)
    np.testing.assert_allclose(vec, [sinr(ch, st, k, NOISE) for k in range(3)], rtol=1e-14)
