import numpy as np
import pytest

from iomcmc import (
    FourierSamplingOperator,
    GaussianPRFSystem,
    GaussianSignal,
    LumpyModelParams,
    LumpyRealization,
    Measurement,
    NoiseModel,
    add_noise,
    apply_fourier_operator,
    eval_object_field,
    image_lumpy_analytic,
    image_signal_analytic,
    make_poisson_disc_mask,
    project_prf_numeric,
    psnr,
    sample_lumpy_realization,
)
from iomcmc.imaging import _local_radius


def test_empty_realization_images_to_zero():
    real = LumpyRealization(centers=np.zeros((0, 2)), amplitude=1.0, width=8.0, fov=(64, 64))
    b = image_lumpy_analytic(real, GaussianPRFSystem())
    assert (b.data == 0).all()


def test_single_lump_peak_value():
    # lump exactly at the detector location (32.5, 32.5) with defaults
    real = LumpyRealization(centers=[[32.5, 32.5]], amplitude=1.0, width=8.0, fov=(64, 64))
    b = image_lumpy_analytic(real, GaussianPRFSystem())
    assert b.data.max() == pytest.approx(35.0 * 64.0 / 68.0, rel=1e-12)  # ~32.941


def test_single_lump_peak_at_nearest_detector():
    sys = GaussianPRFSystem()
    real = LumpyRealization(centers=[[20.3, 41.8]], amplitude=1.0, width=8.0, fov=(64, 64))
    b = image_lumpy_analytic(real, sys)
    coords = sys.detector_coords()
    nearest = np.argmin(((coords - [20.3, 41.8]) ** 2).sum(axis=1))
    assert np.argmax(b.data) == nearest


def test_signal_peak_value_and_zero_amplitude():
    sys = GaussianPRFSystem()
    s = image_signal_analytic(GaussianSignal(center=(32.5, 32.5)), sys)
    assert s.data.max() == pytest.approx(0.3 * 35.0 * 6.25 / 10.25, rel=1e-12)  # ~6.402
    z = image_signal_analytic(GaussianSignal(amplitude=0.0), sys)
    assert (z.data == 0).all()


def test_signal_rotation_symmetry_about_center():
    sys = GaussianPRFSystem()
    s = image_signal_analytic(GaussianSignal(center=(32.0, 32.0)), sys).data.reshape(64, 64)
    np.testing.assert_allclose(s, np.rot90(s), atol=1e-9)


def test_quadrature_oracle_matches_analytic():
    sys = GaussianPRFSystem()
    rng = np.random.default_rng(5)
    real = sample_lumpy_realization(LumpyModelParams(fixed_count=3), rng)
    analytic = image_lumpy_analytic(real, sys).data
    numeric = project_prf_numeric(
        lambda p: eval_object_field(real, p), sys, quad_step=sys.width / 8
    ).data
    assert np.abs(numeric - analytic).max() / np.abs(analytic).max() < 1e-3


def test_quadrature_constant_field_integrates_prf():
    sys = GaussianPRFSystem(grid=(16, 16))
    out = project_prf_numeric(lambda p: np.ones(p.shape[0]), sys, quad_step=0.5).data
    np.testing.assert_allclose(out, sys.height, rtol=1e-6)


def test_quadrature_zero_field_and_bad_step():
    sys = GaussianPRFSystem(grid=(8, 8))
    out = project_prf_numeric(lambda p: np.zeros(p.shape[0]), sys, quad_step=0.5).data
    assert (out == 0).all()
    with pytest.raises(ValueError):
        project_prf_numeric(lambda p: np.zeros(p.shape[0]), sys, quad_step=-1.0)


def test_analytic_operator_linearity():
    sys = GaussianPRFSystem()
    r1 = LumpyRealization(centers=[[10.0, 12.0]], amplitude=1.0, width=8.0, fov=(64, 64))
    r2 = LumpyRealization(centers=[[40.0, 50.0]], amplitude=1.0, width=8.0, fov=(64, 64))
    both = LumpyRealization(
        centers=[[10.0, 12.0], [40.0, 50.0]], amplitude=1.0, width=8.0, fov=(64, 64)
    )
    np.testing.assert_allclose(
        image_lumpy_analytic(both, sys).data,
        image_lumpy_analytic(r1, sys).data + image_lumpy_analytic(r2, sys).data,
        rtol=1e-12,
    )


# --- Poisson-disc mask ----------------------------------------------------


def test_mask_acceleration_one_is_full():
    mask = make_poisson_disc_mask((32, 32), 1.0, np.random.default_rng(0))
    assert mask.all()


def test_mask_sampled_fraction_at_16x():
    mask = make_poisson_disc_mask((128, 128), 16.0, np.random.default_rng(1))
    assert 922 <= mask.sum() <= 1126


def test_mask_minimum_spacing():
    # exhaustive pairwise check outside the calibration block
    dims = (64, 64)
    rng = np.random.default_rng(2)
    mask, scale = make_poisson_disc_mask(dims, 8.0, rng, calib_size=8, return_scale=True)
    gx, gy = np.meshgrid(
        np.arange(dims[0]) - dims[0] // 2, np.arange(dims[1]) - dims[1] // 2, indexing="ij"
    )
    half = 4
    calib = (np.abs(gx) < half) & (np.abs(gy) < half)
    pts = np.column_stack([gx[mask & ~calib], gy[mask & ~calib]]).astype(float)
    rho = np.hypot(pts[:, 0] / (dims[0] / 2), pts[:, 1] / (dims[1] / 2)) / np.sqrt(2)
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
    np.fill_diagonal(d, np.inf)
    pair_min = np.minimum(_local_radius(rho[:, None], scale), _local_radius(rho[None, :], scale))
    assert (d >= pair_min - 1e-9).all()


def test_mask_determinism():
    m1 = make_poisson_disc_mask((64, 64), 8.0, np.random.default_rng(9))
    m2 = make_poisson_disc_mask((64, 64), 8.0, np.random.default_rng(9))
    np.testing.assert_array_equal(m1, m2)


def test_mask_rejects_bad_acceleration():
    with pytest.raises(ValueError):
        make_poisson_disc_mask((32, 32), 0.5, np.random.default_rng(0))


# --- Fourier operator -----------------------------------------------------


def _full_op(dims):
    return FourierSamplingOperator(dims=dims, mask=np.ones(dims, dtype=bool), acceleration=1.0)


def test_fourier_zero_object():
    op = _full_op((8, 8))
    out = apply_fourier_operator(np.zeros(64), op)
    assert (out.data == 0).all()
    assert out.layout == "stacked-complex"


def test_fourier_impulse_is_flat():
    op = _full_op((8, 8))
    obj = np.zeros(64)
    obj[0] = 1.0
    out = apply_fourier_operator(obj, op).as_complex()
    np.testing.assert_allclose(out, 1.0 + 0j, atol=1e-12)


def test_fourier_parseval():
    rng = np.random.default_rng(11)
    obj = rng.normal(size=64)
    op = _full_op((8, 8))
    out = apply_fourier_operator(obj, op)
    lhs = np.sum(out.data**2)
    rhs = 64 * np.sum(obj**2)
    assert lhs == pytest.approx(rhs, rel=1e-8)


def test_fourier_linearity():
    rng = np.random.default_rng(12)
    mask = make_poisson_disc_mask((16, 16), 2.0, rng, calib_size=4)
    op = FourierSamplingOperator(dims=(16, 16), mask=mask, acceleration=2.0)
    f1, f2 = rng.normal(size=256), rng.normal(size=256)
    lhs = apply_fourier_operator(2.0 * f1 - 3.0 * f2, op).data
    rhs = 2.0 * apply_fourier_operator(f1, op).data - 3.0 * apply_fourier_operator(f2, op).data
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * np.abs(rhs).max())


def test_fourier_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_fourier_operator(np.zeros(10), _full_op((8, 8)))


def test_operator_fraction_invariant():
    with pytest.raises(ValueError):
        FourierSamplingOperator(dims=(8, 8), mask=np.ones((8, 8), dtype=bool), acceleration=16.0)


# --- noise and psnr -------------------------------------------------------


def test_noise_variance_and_determinism():
    g = Measurement(data=np.zeros(1_000_000))
    noise = NoiseModel(sigma=20.0)
    out = add_noise(g, noise, np.random.default_rng(3))
    assert np.var(out.data - g.data) == pytest.approx(400.0, rel=0.01)
    out2 = add_noise(g, noise, np.random.default_rng(3))
    np.testing.assert_array_equal(out.data, out2.data)
    assert abs(out.data.mean()) < 5 * 20.0 / np.sqrt(out.data.size)


def test_psnr_values():
    assert psnr([Measurement(data=[5.0])], 5.0) == pytest.approx(0.0)
    assert psnr([Measurement(data=[50.0, 1.0])], 5.0) == pytest.approx(20.0)
    # inverting 34.89 dB at sigma=80 gives MAX_g = 80 * 10^(34.89/20)
    max_g = 80.0 * 10 ** (34.89 / 20.0)
    assert psnr([Measurement(data=[max_g])], 80.0) == pytest.approx(34.89, abs=1e-9)


def test_measurement_round_trip(tmp_path):
    m = Measurement(data=np.arange(16, dtype=float), layout="stacked-complex", dims=(4, 4))
    path = tmp_path / "m.iomm"
    m.save(path)
    back = Measurement.load(path)
    np.testing.assert_allclose(back.data, m.data.astype(np.float32))
    assert back.layout == m.layout
    assert back.dims == m.dims
