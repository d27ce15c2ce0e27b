"""
재구성 파이프라인
=================
측정 사영 단계(IST / GAP / acc-GAP / ADMM)와 패치 사전 갱신을 번갈아 수행한다.

- admm-slope   : x-step → w-step(Bz 목표) → z-step(DCT 축소) → v-step
- lr-gmm-slope : 사영 → EM(warm start) → EVT 저랭크화 → 사후 평균 패치 갱신
- lr-ple-slope : 사영 → PLE M-step → 저랭크화 → PLE E-step

ist/gap/acc-gap 에서는 갱신된 패치를 겹침 수로 평균해 다음 반복의 x 로 쓰고,
admm 에서는 갱신된 패치를 w-step 의 목표로 쓴다 (출력은 w).
반복 횟수는 고정이며 잔차 기반 조기 종료는 없다.

픽셀 수가 2의 거듭제곱이 아니면 반복 변수는 Hadamard 차수 길이로 두고,
패치 사전은 앞쪽 H·W 개 성분(영상 픽셀)에만 적용한 뒤 출력에서 잘라낸다.
"""
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Any, Iterator, Optional, Protocol, Sequence

import numpy as np
from loguru import logger

from exceptions.common import ServiceException
from exceptions.error_codes import ErrorCode
from models.image import ImageBuffer
from models.mixture import GmmModel, PleModel
from models.patches import PatchGrid, PatchSet
from models.reconstruction import ReconstructionResult
from models.sensing import Measurement, SensingOperator
from models.solver_state import SolverState
from schemas.common import Algorithm, Projection, WarmStart
from schemas.config import ReconstructionConfig
from schemas.results import TraceRecord
from services import gmm, ple, sensing, solvers, sparse_dct
from services import metrics
from services import patches as patch_ops
from util.time_util import Stopwatch


def warm_start(measurement: Measurement, op: SensingOperator, mode: WarmStart) -> np.ndarray:
    """zero → 0 벡터, adjoint → Aᵀy (행이 직교 정규이므로 최소 노름 최소제곱해)"""
    if WarmStart(mode) == WarmStart.ZERO:
        return np.zeros(op.signal_length)
    return sensing.adjoint(op, measurement.values)


# ── 반복 기록 ──

@dataclass
class _IterationStats:
    residual_sq: float
    squared_error: Optional[float]
    seconds: float
    class_change_fraction: Optional[float] = None
    consistency_sq: Optional[float] = None


@dataclass
class _ChannelRun:
    x: np.ndarray
    x0: np.ndarray
    stats: list[_IterationStats] = field(default_factory=list)
    model: Any = None
    objective_trace: list[float] = field(default_factory=list)


@dataclass
class _ChannelContext:
    op: SensingOperator
    y: np.ndarray
    grid: PatchGrid
    config: ReconstructionConfig
    reference: Optional[np.ndarray]
    stopwatch: Stopwatch

    def image_part(self, x: np.ndarray) -> np.ndarray:
        return x[: self.grid.pixel_count]

    def with_image_part(self, x: np.ndarray, image: np.ndarray) -> np.ndarray:
        return np.concatenate([image, x[self.grid.pixel_count:]])

    def record(
        self,
        x: np.ndarray,
        class_change: Optional[float] = None,
        consistency_sq: Optional[float] = None,
    ) -> _IterationStats:
        residual = self.y - sensing.apply(self.op, x)
        sq_err = (
            None if self.reference is None
            else float(np.sum((self.reference - self.image_part(x)) ** 2))
        )
        return _IterationStats(
            residual_sq=float(residual @ residual),
            squared_error=sq_err,
            seconds=self.stopwatch.elapsed(),
            class_change_fraction=class_change,
            consistency_sq=consistency_sq,
        )


@contextmanager
def _iteration_guard(iteration: int) -> Iterator[None]:
    """반복 내부 실패를 1부터 센 반복 번호와 함께 MODEL_FIT_FAILED 로 변환"""
    try:
        yield
    except ServiceException as exc:
        if exc.error_code == ErrorCode.MODEL_FIT_FAILED:
            raise
        raise ServiceException.model_fit_failed(iteration, exc.message) from exc
    except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        raise ServiceException.model_fit_failed(iteration, str(exc)) from exc


def _check_finite(iteration: int, *vectors: np.ndarray) -> None:
    if not all(np.all(np.isfinite(v)) for v in vectors):
        raise ServiceException.model_fit_failed(iteration, "반복 값에 NaN 또는 inf 가 생겼습니다")


def _log_iteration(ctx: _ChannelContext, iteration: int, stats: _IterationStats) -> None:
    psnr_db = (
        None if stats.squared_error is None
        else metrics.psnr_from_error(stats.squared_error, ctx.reference.size)
    )
    logger.debug(
        "반복 {}/{}: 잔차={:.4e} PSNR={}",
        iteration,
        ctx.config.max_iters,
        float(np.sqrt(stats.residual_sq)),
        "-" if psnr_db is None else f"{psnr_db:.4f}",
    )


# ── 패치 사전 ──

class PatchPrior(Protocol):
    model: Any

    def update(self, patches: PatchSet) -> tuple[PatchSet, Optional[float]]:
        ...


class GmmPrior:
    """반복마다 이전 GMM 에서 EM 을 이어 학습하고 저랭크 사후 평균으로 패치를 갱신"""

    def __init__(self, config: ReconstructionConfig, initial_model: Optional[GmmModel] = None):
        self.config = config
        self.full: Optional[GmmModel] = initial_model
        self.model = None

    def update(self, patches: PatchSet) -> tuple[PatchSet, Optional[float]]:
        cfg = self.config
        self.full = gmm.em_fit(
            patches,
            cfg.K,
            seed=cfg.seed,
            max_em_iters=cfg.em_iters_per_outer,
            tol=cfg.em_tol,
            init=self.full,
        )
        self.model = gmm.evt_lowrank(self.full, cfg.gamma, cfg.sigma2)
        return gmm.update_all_patches(self.model, patches), None


class PlePrior:
    """M-step(이전 배정) → 저랭크화 → E-step(새 추정과 배정)"""

    def __init__(self, config: ReconstructionConfig):
        self.config = config
        self.assignments: Optional[np.ndarray] = None
        self.model: Optional[PleModel] = None

    def update(self, patches: PatchSet) -> tuple[PatchSet, Optional[float]]:
        cfg = self.config
        if self.assignments is None:
            self.assignments = ple.initial_assignments(patches, cfg.K, cfg.seed)
        model = ple.ple_mstep(
            patches,
            self.assignments,
            k=cfg.K,
            previous=self.model,
            noise_variance=cfg.sigma2,
        )
        model = ple.ple_lowrank(model, cfg.gamma)
        estimates, assignments = ple.ple_estep(model, patches)
        change = float(np.mean(assignments != self.assignments))
        self.assignments = assignments
        self.model = replace(model, assignments=assignments)
        return estimates, change


# ── 채널 단위 루프 ──

def _project(ctx: _ChannelContext, state: SolverState) -> SolverState:
    cfg, op, y = ctx.config, ctx.op, ctx.y
    if cfg.projection == Projection.IST:
        return replace(state, x=solvers.ist_step(op, y, state.x, cfg.zeta))
    if cfg.projection == Projection.GAP:
        return replace(state, x=solvers.gap_step(op, y, state.x))
    return solvers.acc_gap_step(op, y, state)


def _w_step(ctx: _ChannelContext, x: np.ndarray, v: np.ndarray, targets: PatchSet) -> np.ndarray:
    # 패딩 픽셀에는 사전 항이 없으므로 w = x + v
    cfg, n = ctx.config, ctx.grid.pixel_count
    w = x + v
    w[:n] = solvers.admm_w_step(ctx.grid, x[:n], v[:n], targets, cfg.beta, cfg.eta)
    return w


def _run_admm_slope_channel(ctx: _ChannelContext, x0: np.ndarray) -> _ChannelRun:
    cfg, op, y, grid = ctx.config, ctx.op, ctx.y, ctx.grid
    basis = sparse_dct.build_basis(cfg.patch_side)
    state = SolverState.start(x0, y)
    # z⁰ = Bᵀ R_i w⁰ (축소 없음) 이므로 첫 w-step 은 w⁰ 를 그대로 목표로 삼는다
    z = patch_ops.extract(grid, ctx.image_part(state.w))
    z = z.with_data(sparse_dct.analyze(basis, z.data))
    run = _ChannelRun(x=ctx.image_part(state.w), x0=ctx.image_part(x0))

    for t in range(1, cfg.max_iters + 1):
        with _iteration_guard(t):
            x = solvers.admm_x_step(op, y, state.w, state.v, cfg.beta)
            targets = z.with_data(sparse_dct.synthesize(basis, z.data))
            w = _w_step(ctx, x, state.v, targets)
            rw = patch_ops.extract(grid, ctx.image_part(w))
            z = sparse_dct.solve_z_step(basis, rw, cfg.lambda_, cfg.eta)
            v = solvers.admm_v_step(state.v, x, w)
            residual = solvers.residual(op, y, x)
            objective = 0.5 * float(residual @ residual) + sparse_dct.z_objective(
                basis, rw, z, cfg.lambda_, cfg.eta
            )
            state.objective_trace.append(objective)
            state = replace(state, x=x, w=w, v=v, iteration=t)
        _check_finite(t, state.x, state.w, state.v)
        stats = ctx.record(state.w)
        run.stats.append(stats)
        _log_iteration(ctx, t, stats)

    run.x = ctx.image_part(state.w)
    run.objective_trace = state.objective_trace
    return run


def _consistency_sq(ctx: _ChannelContext, state: SolverState) -> Optional[float]:
    """사영 직후 ‖target − A x‖². GAP 은 y, acc-gap 은 누적 측정 y^t 가 target"""
    if ctx.config.projection == Projection.IST:
        return None
    target = ctx.y if ctx.config.projection == Projection.GAP else state.y_running
    residual = target - sensing.apply(ctx.op, state.x)
    return float(residual @ residual)


def _run_prior_channel(ctx: _ChannelContext, x0: np.ndarray, prior: PatchPrior) -> _ChannelRun:
    cfg, op, y, grid = ctx.config, ctx.op, ctx.y, ctx.grid
    state = SolverState.start(x0, y)
    output = state.x
    run = _ChannelRun(x=ctx.image_part(output), x0=ctx.image_part(x0))

    for t in range(1, cfg.max_iters + 1):
        consistency = None
        with _iteration_guard(t):
            if cfg.projection == Projection.ADMM:
                x = solvers.admm_x_step(op, y, state.w, state.v, cfg.beta)
                updated, change = prior.update(patch_ops.extract(grid, ctx.image_part(x)))
                w = _w_step(ctx, x, state.v, updated)
                v = solvers.admm_v_step(state.v, x, w)
                state = replace(state, x=x, w=w, v=v, iteration=t)
                output = w
            else:
                state = _project(ctx, state)
                consistency = _consistency_sq(ctx, state)
                if consistency is not None:
                    logger.debug("사영 후 데이터 잔차 {:.3e}", float(np.sqrt(consistency)))
                updated, change = prior.update(patch_ops.extract(grid, ctx.image_part(state.x)))
                output = ctx.with_image_part(state.x, patch_ops.average(grid, updated))
                state = replace(state, x=output, iteration=t)
        _check_finite(t, output)
        stats = ctx.record(output, change, consistency)
        run.stats.append(stats)
        _log_iteration(ctx, t, stats)

    run.x = ctx.image_part(output)
    run.model = prior.model
    return run


def _run_channel(
    measurement: Measurement,
    config: ReconstructionConfig,
    reference: Optional[np.ndarray],
    initial_model: Optional[GmmModel],
    stopwatch: Stopwatch,
) -> _ChannelRun:
    if not np.all(np.isfinite(measurement.values)):
        raise ServiceException.non_finite("measurement")
    op = sensing.full_order(sensing.operator_for(measurement))
    grid = patch_ops.build_grid(measurement.height, measurement.width, config.patch_side, config.stride)
    if config.gamma >= grid.patch_dim:
        raise ServiceException.invalid_argument(
            f"gamma 는 {grid.patch_dim} 미만이어야 합니다 (gamma={config.gamma})"
        )
    ctx = _ChannelContext(
        op=op,
        y=np.asarray(measurement.values, dtype=np.float64),
        grid=grid,
        config=config,
        reference=reference,
        stopwatch=stopwatch,
    )
    x0 = warm_start(measurement, op, config.warm_start)

    if config.algorithm == Algorithm.ADMM_SLOPE:
        return _run_admm_slope_channel(ctx, x0)
    if config.algorithm == Algorithm.LR_PLE_SLOPE:
        if initial_model is not None:
            logger.warning("lr-ple-slope 는 초기 GMM 을 사용하지 않습니다. 무시합니다")
        return _run_prior_channel(ctx, x0, PlePrior(config))
    return _run_prior_channel(ctx, x0, GmmPrior(config, initial_model))


def _assemble(
    runs: list[_ChannelRun],
    height: int,
    width: int,
    reference: Optional[ImageBuffer],
) -> ReconstructionResult:
    image = ImageBuffer.from_channels([np.clip(run.x, 0.0, 1.0) for run in runs], height, width)
    iterations = len(runs[0].stats)
    trace = []
    projection_residuals: list[Optional[float]] = []
    for i in range(iterations):
        stats = [run.stats[i] for run in runs]
        consistency = [s.consistency_sq for s in stats]
        projection_residuals.append(
            None if any(c is None for c in consistency) else float(np.sqrt(sum(consistency)))
        )
        changes = [s.class_change_fraction for s in stats if s.class_change_fraction is not None]
        trace.append(
            TraceRecord(
                iteration=i + 1,
                data_residual=float(np.sqrt(sum(s.residual_sq for s in stats))),
                psnr_db=(
                    None if reference is None
                    else metrics.psnr_from_error(
                        sum(s.squared_error for s in stats), reference.pixels.size
                    )
                ),
                seconds=sum(s.seconds for s in stats),
                class_change_fraction=float(np.mean(changes)) if changes else None,
            )
        )
    warm_psnr = None
    if reference is not None:
        warm = ImageBuffer.from_channels([run.x0 for run in runs], height, width)
        warm_psnr = metrics.psnr(reference, warm)
    return ReconstructionResult(
        image=image,
        iterations_run=iterations,
        trace=trace,
        models=[run.model for run in runs],
        warm_start_psnr_db=warm_psnr,
        objective_trace=runs[0].objective_trace,
        projection_residuals=projection_residuals,
    )


def _check_reference(reference: Optional[ImageBuffer], channels: int, height: int, width: int) -> None:
    if reference is None:
        return
    expected = (channels, height, width)
    if reference.pixels.shape != expected:
        raise ServiceException.dimension_mismatch(expected, reference.pixels.shape, "reference image")


class ReconstructionService:
    """1채널 또는 3채널 측정을 채널별로 독립 재구성 (같은 연산자 시드 공유)"""

    def __init__(self, record_timing: bool = True):
        self.record_timing = record_timing

    def reconstruct(
        self,
        measurements: Sequence[Measurement],
        config: ReconstructionConfig,
        reference: Optional[ImageBuffer] = None,
        initial_model: Optional[GmmModel] = None,
    ) -> ReconstructionResult:
        measurements = list(measurements)
        if len(measurements) not in (1, 3):
            raise ServiceException.invalid_argument(
                f"측정 채널 수는 1 또는 3 이어야 합니다 ({len(measurements)})"
            )
        first = measurements[0]
        for m in measurements[1:]:
            if (m.height, m.width, m.csr, m.operator_seed, m.num_rows) != (
                first.height, first.width, first.csr, first.operator_seed, first.num_rows
            ):
                raise ServiceException.invalid_argument("채널별 측정의 크기, CSr 또는 연산자 시드가 다릅니다")
        _check_reference(reference, len(measurements), first.height, first.width)

        logger.info(
            "재구성 시작: {} {}x{}x{} CSr={:g} 반복={} config_hash={}",
            config.algorithm.value,
            len(measurements),
            first.height,
            first.width,
            first.csr,
            config.max_iters,
            config.config_hash(),
        )
        stopwatch = Stopwatch(self.record_timing)
        runs = []
        for c, measurement in enumerate(measurements):
            ref = None if reference is None else reference.channel(c)
            stopwatch.restart()
            runs.append(_run_channel(measurement, config, ref, initial_model, stopwatch))

        result = _assemble(runs, first.height, first.width, reference)
        final_psnr = result.trace[-1].psnr_db if result.trace else result.warm_start_psnr_db
        logger.info(
            "재구성 완료: 반복={} PSNR={}",
            result.iterations_run,
            "-" if final_psnr is None else f"{final_psnr:.4f}",
        )
        return result


def _run_single(
    algorithm: Algorithm,
    measurement: Measurement,
    config: ReconstructionConfig,
    reference: Optional[ImageBuffer],
) -> ReconstructionResult:
    if config.algorithm != algorithm:
        raise ServiceException.invalid_argument(
            f"config.algorithm={config.algorithm.value} 이지만 {algorithm.value} 로 호출되었습니다"
        )
    return ReconstructionService().reconstruct([measurement], config, reference)


def run_admm_slope(
    measurement: Measurement,
    config: ReconstructionConfig,
    reference: Optional[ImageBuffer] = None,
) -> ReconstructionResult:
    return _run_single(Algorithm.ADMM_SLOPE, measurement, config, reference)


def run_lr_gmm_slope(
    measurement: Measurement,
    config: ReconstructionConfig,
    reference: Optional[ImageBuffer] = None,
) -> ReconstructionResult:
    return _run_single(Algorithm.LR_GMM_SLOPE, measurement, config, reference)


def run_lr_ple_slope(
    measurement: Measurement,
    config: ReconstructionConfig,
    reference: Optional[ImageBuffer] = None,
) -> ReconstructionResult:
    return _run_single(Algorithm.LR_PLE_SLOPE, measurement, config, reference)
