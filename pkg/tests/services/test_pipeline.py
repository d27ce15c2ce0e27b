import numpy as np
import pytest

from exceptions.common import ServiceException
from exceptions.error_codes import ErrorCode
from models.image import ImageBuffer
from models.mixture import LowRankGmm, PleModel
from schemas.common import WarmStart
from schemas.config import ReconstructionConfig
from services import gmm, metrics, pipeline, sensing
from services.pipeline import ReconstructionService
from tests.conftest import piecewise_constant


def _measure(image: np.ndarray, csr: float, seed: int = 3, channel: int = 0):
    h, w = image.shape
    op = sensing.build_operator(h * w, csr, seed)
    return sensing.measure(op, image.reshape(-1), height=h, width=w, channel=channel), op


def _config(**overrides) -> ReconstructionConfig:
    values = {"patch_side": 4, "stride": 2, "K": 2, "max_iters": 4}
    values.update(overrides)
    return ReconstructionConfig(**values)


@pytest.fixture
def small_image() -> np.ndarray:
    return piecewise_constant(16, 16)


@pytest.fixture
def service() -> ReconstructionService:
    return ReconstructionService(record_timing=False)


# ── warm start ──

def test_warm_start_modes(small_image):
    measurement, op = _measure(small_image, 0.5)
    assert np.array_equal(pipeline.warm_start(measurement, op, WarmStart.ZERO), np.zeros(256))
    assert np.allclose(
        pipeline.warm_start(measurement, op, WarmStart.ADJOINT), sensing.adjoint(op, measurement.values)
    )


def test_full_sampling_adjoint_start_is_exact(small_image):
    measurement, op = _measure(small_image, 1.0)
    assert np.allclose(pipeline.warm_start(measurement, op, "adjoint"), small_image.reshape(-1), atol=1e-10)


# ── ADMM-SLOPE ──

def test_admm_slope_full_sampling_recovers_image(small_image, service):
    measurement, _ = _measure(small_image, 1.0)
    config = _config(algorithm="admm-slope", max_iters=5, **{"lambda": 1e-4})
    reference = ImageBuffer(small_image)
    result = service.reconstruct([measurement], config, reference=reference)

    assert result.iterations_run == 5
    assert len(result.trace) == 5
    assert metrics.psnr(reference, result.image) >= 60.0
    assert result.trace[-1].psnr_db >= 60.0


def test_admm_slope_objective_trace_is_finite(small_image, service):
    measurement, _ = _measure(small_image, 0.4)
    result = service.reconstruct([measurement], _config(algorithm="admm-slope", max_iters=6))
    assert len(result.objective_trace) == 6
    assert np.all(np.isfinite(result.objective_trace))
    assert result.models == [None]


def test_zero_iterations_return_clipped_warm_start(small_image, service):
    measurement, op = _measure(small_image, 0.3)
    for algorithm in ("admm-slope", "lr-gmm-slope", "lr-ple-slope"):
        result = service.reconstruct([measurement], _config(algorithm=algorithm, max_iters=0))
        assert result.iterations_run == 0
        assert result.trace == []
        expected = np.clip(sensing.adjoint(op, measurement.values), 0.0, 1.0)
        assert np.allclose(result.image.channel(0), expected)


# ── LR-GMM-SLOPE / LR-PLE-SLOPE ──

def test_gmm_reconstruction_beats_adjoint(service):
    image = piecewise_constant(32, 32)
    measurement, _ = _measure(image, 0.3)
    reference = ImageBuffer(image)
    result = service.reconstruct([measurement], _config(projection="gap", max_iters=8), reference=reference)

    assert result.warm_start_psnr_db is not None
    assert metrics.psnr(reference, result.image) > result.warm_start_psnr_db
    assert np.all(np.diff([record.iteration for record in result.trace]) == 1)
    assert isinstance(result.models[0], LowRankGmm)


@pytest.mark.parametrize("projection", ["ist", "acc-gap", "admm"])
def test_gmm_projections_run(small_image, service, projection):
    measurement, _ = _measure(small_image, 0.4)
    reference = ImageBuffer(small_image)
    result = service.reconstruct([measurement], _config(projection=projection), reference=reference)
    assert result.iterations_run == 4
    assert all(np.isfinite(record.data_residual) for record in result.trace)
    assert np.all((result.image.pixels >= 0.0) & (result.image.pixels <= 1.0))


def test_single_class_gmm_and_ple_agree(small_image, service):
    measurement, _ = _measure(small_image, 0.4)
    common = {"K": 1, "projection": "gap", "max_iters": 3, "sigma2": 1e-5}
    via_gmm = service.reconstruct([measurement], _config(algorithm="lr-gmm-slope", **common))
    via_ple = service.reconstruct([measurement], _config(algorithm="lr-ple-slope", **common))
    assert np.allclose(via_gmm.image.pixels, via_ple.image.pixels, atol=1e-6)


def test_ple_trace_records_class_changes(small_image, service):
    measurement, _ = _measure(small_image, 0.4)
    result = service.reconstruct([measurement], _config(algorithm="lr-ple-slope", K=3))
    assert isinstance(result.models[0], PleModel)
    fractions = [record.class_change_fraction for record in result.trace]
    assert all(f is not None and 0.0 <= f <= 1.0 for f in fractions)


def test_reconstruction_is_deterministic(small_image, service):
    measurement, _ = _measure(small_image, 0.3)
    config = _config(K=3)
    first = service.reconstruct([measurement], config, reference=ImageBuffer(small_image))
    second = service.reconstruct([measurement], config, reference=ImageBuffer(small_image))
    assert np.array_equal(first.image.pixels, second.image.pixels)
    assert [r.model_dump() for r in first.trace] == [r.model_dump() for r in second.trace]
    assert all(record.seconds == 0.0 for record in first.trace)


def test_initial_model_warm_starts_first_em(small_image, service):
    measurement, _ = _measure(small_image, 0.4)
    config = _config()
    first = service.reconstruct([measurement], config)
    resumed = service.reconstruct([measurement], config, initial_model=first.models[0])
    assert resumed.iterations_run == config.max_iters
    assert np.all(np.isfinite(resumed.image.pixels))


# ── 다채널 ──

def test_rgb_with_identical_channels_matches_gray(small_image, service):
    config = _config(projection="gap", max_iters=3)
    gray, _ = _measure(small_image, 0.4)
    gray_result = service.reconstruct([gray], config, reference=ImageBuffer(small_image))

    channels = [_measure(small_image, 0.4, channel=c)[0] for c in range(3)]
    rgb_reference = ImageBuffer(np.stack([small_image] * 3))
    rgb_result = service.reconstruct(channels, config, reference=rgb_reference)

    assert rgb_result.image.channels == 3
    for c in range(3):
        assert np.allclose(rgb_result.image.pixels[c], gray_result.image.pixels[0])
    for gray_rec, rgb_rec in zip(gray_result.trace, rgb_result.trace):
        assert rgb_rec.psnr_db == pytest.approx(gray_rec.psnr_db, abs=1e-9)
        assert rgb_rec.data_residual == pytest.approx(np.sqrt(3) * gray_rec.data_residual, rel=1e-9)
    assert rgb_result.warm_start_psnr_db == pytest.approx(gray_result.warm_start_psnr_db, abs=1e-9)


def test_channel_count_and_geometry_are_checked(small_image, service):
    m0, _ = _measure(small_image, 0.4)
    m1, _ = _measure(small_image, 0.4, channel=1)
    with pytest.raises(ServiceException) as exc:
        service.reconstruct([m0, m1], _config())
    assert exc.value.error_code == ErrorCode.INVALID_ARGUMENT

    other_seed, _ = _measure(small_image, 0.4, seed=9, channel=1)
    with pytest.raises(ServiceException):
        service.reconstruct([m0, other_seed, m1], _config())

    with pytest.raises(ServiceException) as exc:
        service.reconstruct([m0], _config(), reference=ImageBuffer(np.zeros((8, 8))))
    assert exc.value.error_code == ErrorCode.DIMENSION_MISMATCH


def test_non_finite_measurement_is_rejected(small_image, service):
    measurement, _ = _measure(small_image, 0.4)
    measurement.values[0] = np.nan
    with pytest.raises(ServiceException) as exc:
        service.reconstruct([measurement], _config())
    assert exc.value.error_code == ErrorCode.NON_FINITE_INPUT


def test_prior_failure_reports_iteration(small_image, service, monkeypatch):
    measurement, _ = _measure(small_image, 0.4)
    original = gmm.em_fit
    calls = {"n": 0}

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 2:
            raise np.linalg.LinAlgError("singular")
        return original(*args, **kwargs)

    monkeypatch.setattr(gmm, "em_fit", flaky)
    with pytest.raises(ServiceException) as exc:
        service.reconstruct([measurement], _config())
    assert exc.value.error_code == ErrorCode.MODEL_FIT_FAILED
    assert exc.value.data == {"iteration": 2}
    assert exc.value.exit_code == 1


# ── 단일 알고리즘 진입점 ──

def test_entry_points_check_algorithm(small_image):
    measurement, _ = _measure(small_image, 0.4)
    with pytest.raises(ServiceException):
        pipeline.run_lr_gmm_slope(measurement, _config(algorithm="admm-slope"))
    result = pipeline.run_lr_ple_slope(measurement, _config(algorithm="lr-ple-slope", max_iters=1))
    assert result.iterations_run == 1
    result = pipeline.run_admm_slope(measurement, _config(algorithm="admm-slope", max_iters=1))
    assert result.iterations_run == 1


# ── 사영 직후 데이터 일관성 ──

@pytest.mark.parametrize("projection", ["gap", "acc-gap"])
def test_projection_is_data_consistent_every_iteration(small_image, service, projection):
    measurement, _ = _measure(small_image, 0.4)
    result = service.reconstruct([measurement], _config(projection=projection, max_iters=5))
    assert len(result.projection_residuals) == 5
    assert all(r is not None and r <= 1e-8 for r in result.projection_residuals)


@pytest.mark.parametrize("projection", ["ist", "admm"])
def test_projection_residual_is_not_recorded_without_exact_projection(small_image, service, projection):
    measurement, _ = _measure(small_image, 0.4)
    result = service.reconstruct([measurement], _config(projection=projection, max_iters=2))
    assert result.projection_residuals == [None, None]


# ── 2의 거듭제곱이 아닌 영상 ──

@pytest.mark.parametrize("algorithm", ["lr-gmm-slope", "lr-ple-slope"])
def test_padded_image_keeps_gap_a_projection(service, algorithm):
    image = piecewise_constant(10, 12)
    measurement, op = _measure(image, 0.3)
    assert op.is_padded
    result = service.reconstruct(
        [measurement], _config(algorithm=algorithm, projection="gap", max_iters=3), reference=ImageBuffer(image)
    )
    assert result.image.pixels.shape == (1, 10, 12)
    assert all(r <= 1e-8 for r in result.projection_residuals)


def test_padded_image_runs_admm_slope(service):
    image = piecewise_constant(10, 12)
    measurement, _ = _measure(image, 0.5)
    result = service.reconstruct([measurement], _config(algorithm="admm-slope", max_iters=3))
    assert result.image.pixels.shape == (1, 10, 12)
    assert np.all(np.isfinite(result.objective_trace))
    assert all(np.isfinite(record.data_residual) for record in result.trace)


# ── 기본 설정 동작 ──

@pytest.mark.slow
def test_ple_default_k_runs_and_assignments_settle(service):
    image = piecewise_constant(64, 64)
    measurement, _ = _measure(image, 0.3)
    config = ReconstructionConfig(algorithm="lr-ple-slope")
    assert config.K == 20
    result = service.reconstruct([measurement], config, reference=ImageBuffer(image))

    assert result.iterations_run == 20
    model = result.models[0]
    assert isinstance(model, PleModel) and model.k == 20
    late_changes = [record.class_change_fraction for record in result.trace[15:20]]
    assert np.mean(late_changes) < 0.2


@pytest.mark.slow
def test_default_gmm_improves_over_iterations(service):
    image = piecewise_constant(64, 64)
    measurement, _ = _measure(image, 0.1)
    result = service.reconstruct([measurement], ReconstructionConfig(), reference=ImageBuffer(image))
    assert result.iterations_run == 20
    assert result.trace[19].psnr_db >= result.trace[0].psnr_db + 1.0
