import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iomcmc import (
    GaussianSignal,
    LumpyModelParams,
    LumpyRealization,
    eval_object_field,
    eval_signal_field,
    sample_lumpy_realization,
)


def test_fixed_count_zero_gives_empty_realization():
    params = LumpyModelParams(fixed_count=0)
    real = sample_lumpy_realization(params, np.random.default_rng(0))
    assert real.n_lumps == 0
    assert eval_object_field(real, [10.0, 10.0]) == 0.0


def test_poisson_count_mean():
    params = LumpyModelParams(mean_lumps=6.0)
    rng = np.random.default_rng(123)
    counts = [sample_lumpy_realization(params, rng).n_lumps for _ in range(10_000)]
    # 3 sigma of the Poisson mean estimator: 3*sqrt(6/10000) ~ 0.073
    assert abs(np.mean(counts) - 6.0) < 0.15


def test_sampling_is_deterministic_given_seed():
    params = LumpyModelParams()
    r1 = sample_lumpy_realization(params, np.random.default_rng(42))
    r2 = sample_lumpy_realization(params, np.random.default_rng(42))
    np.testing.assert_array_equal(r1.centers, r2.centers)


def test_centers_inside_fov():
    params = LumpyModelParams(fov=(32, 16), fixed_count=50)
    real = sample_lumpy_realization(params, np.random.default_rng(3))
    assert (real.centers[:, 0] <= 32).all() and (real.centers[:, 1] <= 16).all()
    assert (real.centers >= 0).all()


def test_field_at_lump_center_and_one_width_out():
    real = LumpyRealization(centers=[[10.0, 10.0]], amplitude=1.0, width=8.0, fov=(64, 64))
    assert eval_object_field(real, [10.0, 10.0]) == pytest.approx(1.0)
    assert eval_object_field(real, [18.0, 10.0]) == pytest.approx(np.exp(-0.5))


def test_field_additive_over_lump_subsets():
    rng = np.random.default_rng(7)
    centers = rng.uniform(0, 64, (6, 2))
    full = LumpyRealization(centers=centers, amplitude=1.2, width=5.0, fov=(64, 64))
    a = LumpyRealization(centers=centers[:2], amplitude=1.2, width=5.0, fov=(64, 64))
    b = LumpyRealization(centers=centers[2:], amplitude=1.2, width=5.0, fov=(64, 64))
    pts = rng.uniform(0, 64, (20, 2))
    np.testing.assert_allclose(
        eval_object_field(full, pts),
        eval_object_field(a, pts) + eval_object_field(b, pts),
        rtol=1e-12,
    )


@settings(max_examples=50, deadline=None)
@given(
    shift=st.tuples(
        st.floats(-10, 10, allow_nan=False), st.floats(-10, 10, allow_nan=False)
    )
)
def test_translation_equivariance(shift):
    centers = np.array([[20.0, 30.0], [40.0, 12.0]])
    real = LumpyRealization(centers=centers, amplitude=1.0, width=8.0, fov=(64, 64))
    shifted = LumpyRealization(
        centers=np.clip(centers + shift, 0, 64), amplitude=1.0, width=8.0, fov=(64, 64)
    )
    # only valid when the shifted centers stay inside the FOV
    if not np.allclose(shifted.centers, centers + shift):
        return
    point = np.array([25.0, 25.0])
    v0 = eval_object_field(real, point)
    v1 = eval_object_field(shifted, point + np.asarray(shift))
    assert abs(v0 - v1) < 1e-12


def test_signal_field_values():
    sig = GaussianSignal()
    assert eval_signal_field(sig, [32.0, 32.0]) == pytest.approx(0.3)
    assert eval_signal_field(sig, [32.0, 34.5]) == pytest.approx(0.3 * np.exp(-0.5))
    zero = GaussianSignal(amplitude=0.0)
    assert eval_signal_field(zero, [5.0, 60.0]) == 0.0


def test_json_round_trip():
    real = LumpyRealization(
        centers=[[1.5, 2.5], [30.0, 40.0]], amplitude=0.7, width=6.0, fov=(64, 64)
    )
    back = LumpyRealization.from_json(real.to_json())
    np.testing.assert_array_equal(back.centers, real.centers)
    assert back.amplitude == real.amplitude
    assert back.width == real.width
    assert back.fov == real.fov


def test_param_validation():
    with pytest.raises(ValueError):
        LumpyModelParams(mean_lumps=0.0)
    with pytest.raises(ValueError):
        LumpyModelParams(width=-1.0)
    with pytest.raises(ValueError):
        LumpyRealization(centers=[[70.0, 2.0]], amplitude=1.0, width=8.0, fov=(64, 64))
