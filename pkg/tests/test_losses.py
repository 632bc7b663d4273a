import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import naive_d_loss, naive_feature_loss, naive_g_adv
from streamseanet.errors import DomainError, ShapeError
from streamseanet.graph import DiscriminatorOutput
from streamseanet.losses import (LossConfig, compose, discriminator_loss, feature_loss,
                                 generator_adv_loss, si_sdr, total_generator_loss)


def out(logits, features=None):
    return DiscriminatorOutput([np.asarray(l, dtype=float) for l in logits],
                               features or [[np.zeros((1, 1))] for _ in logits])


def random_pair(rng, K=3, L=6):
    lengths = [int(rng.integers(1, 9)) for _ in range(K)]
    shapes = [[(int(rng.integers(1, 5)), int(rng.integers(1, 7))) for _ in range(L)] for _ in range(K)]
    make = lambda: DiscriminatorOutput(
        [rng.normal(0, 2, n) for n in lengths],
        [[rng.normal(0, 1, s) for s in scale] for scale in shapes])
    return make(), make()


def test_hinge_examples():
    assert discriminator_loss(out([[1, 1]]), out([[-1, -1]])) == 0.0
    assert discriminator_loss(out([[0, 0], [0]]), out([[0, 0], [0]])) == 2.0
    assert discriminator_loss(out([[2, 0]]), out([[0, -3]])) == 1.0
    assert generator_adv_loss(out([[1, 2], [5]])) == 0.0
    assert generator_adv_loss(out([[0, 0, 0]])) == 1.0
    assert generator_adv_loss(out([[3, -1]])) == 1.0


def test_feature_examples():
    a = out([[0]], [[np.array([[1.0, 2.0]]), np.array([[3.0, 4.0]])]])
    b = out([[0]], [[np.array([[0.0, 2.0]]), np.array([[3.0, 2.0]])]])
    assert feature_loss(a, b) == 0.75
    assert feature_loss(a, a) == 0.0
    c = out([[0]], [[f + 0.25 for f in a.features[0]]])
    assert feature_loss(a, c) == pytest.approx(0.25, abs=1e-15)


def test_total_generator_loss():
    assert compose(0.0, 1.0, 0.75, LossConfig()).g_total == 76.0
    assert compose(0.0, 1.0, 0.0).g_total == 1.0
    assert compose(0.0, 1.0, 0.75, LossConfig(rec_weight=0)).g_total == 1.0
    # the hand-expanded fixtures composed: g_adv 1 from [3, -1], g_rec 0.75 from the feature fixture
    real = out([[0]], [[np.array([[1.0, 2.0]]), np.array([[3.0, 4.0]])]])
    fake = out([[3, -1]], [[np.array([[0.0, 2.0]]), np.array([[3.0, 2.0]])]])
    real = DiscriminatorOutput([np.array([0.0, 0.0])], real.features)
    br = total_generator_loss(real, fake)
    assert (br.g_adv, br.g_rec, br.g_total) == (1.0, 0.75, 76.0)


def test_naive_oracle_agreement(rng):
    for _ in range(100):
        real, fake = random_pair(rng)
        for got, want in [
            (discriminator_loss(real, fake), naive_d_loss(real.logits, fake.logits)),
            (generator_adv_loss(fake), naive_g_adv(fake.logits)),
            (feature_loss(real, fake), naive_feature_loss(real.features, fake.features)),
        ]:
            assert got == pytest.approx(want, rel=1e-6, abs=1e-12)


def test_feature_loss_symmetric(rng):
    for _ in range(20):
        a, b = random_pair(rng)
        assert feature_loss(a, b) == feature_loss(b, a)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), delta=st.floats(-5, 5))
def test_hinge_perturbation_bound(seed, delta):
    rng = np.random.default_rng(seed)
    real, fake = random_pair(rng)
    K = real.num_scales
    k = int(rng.integers(K))
    t = int(rng.integers(len(fake.logits[k])))
    moved = DiscriminatorOutput([l.copy() for l in fake.logits], fake.features)
    moved.logits[k][t] += delta
    bound = abs(delta) / (K * len(fake.logits[k])) + 1e-12
    assert discriminator_loss(real, fake) >= 0 and generator_adv_loss(fake) >= 0
    assert abs(discriminator_loss(real, moved) - discriminator_loss(real, fake)) <= bound
    assert abs(generator_adv_loss(moved) - generator_adv_loss(fake)) <= bound


def test_shape_errors():
    with pytest.raises(ShapeError):
        discriminator_loss(out([[0], [0]]), out([[0]]))
    a = out([[0]], [[np.zeros((1, 2))]])
    b = out([[0]], [[np.zeros((1, 3))]])
    with pytest.raises(ShapeError):
        feature_loss(a, b)


def test_si_sdr_examples():
    ref = np.array([0.3, -0.2, 0.9, 0.1])
    assert si_sdr(ref, ref) == 100.0
    assert si_sdr(2 * ref, ref) == 100.0
    assert si_sdr(np.array([1.0, 1.0]), np.array([1.0, 0.0])) == 0.0
    with pytest.raises(DomainError):
        si_sdr(ref, np.zeros(4))
    with pytest.raises(ShapeError):
        si_sdr(ref, ref[:3])


def test_si_sdr_closed_form(rng):
    ref = rng.standard_normal(64)
    noise = rng.standard_normal(64)
    noise -= noise @ ref / (ref @ ref) * ref  # orthogonal residual
    est = 0.7 * ref + noise
    expected = 10 * np.log10((0.7 ** 2 * ref @ ref) / (noise @ noise))
    assert si_sdr(est, ref) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), gain=st.floats(0.01, 100))
def test_si_sdr_scale_and_permutation_invariance(seed, gain):
    rng = np.random.default_rng(seed)
    ref = rng.standard_normal(128)
    est = ref + 0.3 * rng.standard_normal(128)
    base = si_sdr(est, ref)
    assert abs(si_sdr(gain * est, ref) - base) <= 1e-6
    perm = rng.permutation(128)
    assert si_sdr(est[perm], ref[perm]) == pytest.approx(base, abs=1e-9)
