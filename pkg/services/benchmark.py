"""
벤치마크 / 파라미터 스윕
========================
(영상 × CSr × 알고리즘) 교차곱을 실행하고 결과 CSV 와 실행별 trace CSV 를 남긴다.
개별 실행 실패는 psnr_db=nan 행으로 기록하고 나머지 실행은 계속한다.
"""
import contextvars
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

from loguru import logger

from core.config import build_config
from exceptions.common import ServiceException
from models.image import ImageBuffer
from repositories.image_repository import ImageRepository
from repositories.result_repository import ResultRepository
from schemas.common import Algorithm
from schemas.config import ReconstructionConfig
from schemas.results import BenchmarkRow, ManifestEntry, SweepRow
from services import metrics, sensing
from services.pipeline import ReconstructionService
from util.time_util import Stopwatch

BENCHMARK_CSV = "benchmark.csv"
SWEEP_CSV = "sweep.csv"
TRACE_DIR = "traces"


def parse_manifest(text: str, base_dir: Path | None = None) -> list[ManifestEntry]:
    """한 줄에 영상 경로 하나 또는 name=path. '#' 주석과 빈 줄 무시. 상대 경로는 base_dir 기준"""
    entries = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            name, path = (part.strip() for part in line.split("=", 1))
        else:
            name, path = Path(line).stem, line
        if not name or not path:
            raise ServiceException.invalid_argument(f"잘못된 manifest 줄: {raw!r}")
        resolved = Path(path)
        if base_dir is not None and not resolved.is_absolute():
            resolved = base_dir / resolved
        entries.append(ManifestEntry(name=name, path=str(resolved)))
    names = [entry.name for entry in entries]
    duplicated = sorted({name for name in names if names.count(name) > 1})
    if duplicated:
        raise ServiceException.invalid_argument(f"manifest 영상 이름이 중복됩니다: {', '.join(duplicated)}")
    return entries


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    path = Path(path)
    if not path.is_file():
        raise ServiceException.not_found(f"manifest 파일을 찾을 수 없습니다: {path}")
    return parse_manifest(path.read_text(encoding="utf-8"), path.parent)


@dataclass(frozen=True)
class _Job:
    entry: ManifestEntry
    csr: float
    config: ReconstructionConfig
    trace_path: Optional[Path]


def trace_file_name(image: str, csr: float, config: ReconstructionConfig, suffix: str = "") -> str:
    return f"{image}_csr{csr:g}_{config.algorithm.value}_{config.projection.value}{suffix}.csv"


class BenchmarkService:
    def __init__(
        self,
        image_repo: ImageRepository,
        result_repo: ResultRepository,
        record_timing: bool = True,
    ):
        self.image_repo = image_repo
        self.result_repo = result_repo
        self.record_timing = record_timing
        self._images: dict[str, ImageBuffer] = {}

    # ── 준비 ──

    def prepare_image(self, entry: ManifestEntry, size: Optional[int], gray: bool = True) -> ImageBuffer:
        """로드 → (옵션) 그레이스케일 → 면적 평균 리사이즈. entry 별로 캐시"""
        key = f"{entry.path}|{size}|{gray}"
        if key not in self._images:
            image = self.image_repo.get(entry.path)
            if gray:
                image = metrics.to_grayscale(image)
            if size is not None:
                image = metrics.resize_area(image, size)
            self._images[key] = image
        return self._images[key]

    # ── 단일 실행 ──

    def _run_job(self, job: _Job, size: Optional[int], gray: bool) -> BenchmarkRow:
        config = job.config
        stopwatch = Stopwatch(self.record_timing)
        try:
            image = self.prepare_image(job.entry, size, gray)
            op = sensing.build_operator(image.height * image.width, job.csr, config.seed)
            measurements = [
                sensing.measure(op, image.channel(c), height=image.height, width=image.width, channel=c)
                for c in range(image.channels)
            ]
            service = ReconstructionService(record_timing=self.record_timing)
            result = service.reconstruct(measurements, config, reference=image)
            psnr_db = metrics.psnr(image, result.image)
            if job.trace_path is not None:
                self.result_repo.save_trace(result.trace, job.trace_path)
            error = None
            logger.info(
                "벤치마크 {} CSr={:g} {}/{}: PSNR={:.4f} dB",
                job.entry.name, job.csr, config.algorithm.value, config.projection.value, psnr_db,
            )
        except ServiceException as exc:
            psnr_db, error = float("nan"), exc.message
            logger.warning(
                "벤치마크 실패 {} CSr={:g} {}: {}", job.entry.name, job.csr, config.algorithm.value, exc.message
            )
        except Exception as exc:
            psnr_db, error = float("nan"), str(exc)
            logger.opt(exception=exc).warning(
                "벤치마크 예기치 못한 실패 {} CSr={:g} {}", job.entry.name, job.csr, config.algorithm.value
            )
        return BenchmarkRow(
            image=job.entry.name,
            csr=job.csr,
            algorithm=config.algorithm.value,
            projection=config.projection.value,
            psnr_db=psnr_db,
            wall_seconds=stopwatch.elapsed(),
            config_hash=config.config_hash(),
            error=error,
        )

    def _execute(self, jobs: list[_Job], size: Optional[int], gray: bool, workers: int) -> list[BenchmarkRow]:
        if workers <= 1 or len(jobs) <= 1:
            return [self._run_job(job, size, gray) for job in jobs]
        # 이미지 캐시를 미리 채워 스레드 간 중복 로드를 피한다
        for job in jobs:
            try:
                self.prepare_image(job.entry, size, gray)
            except ServiceException:
                pass
        # 작업 스레드에서도 run_id 가 로그에 붙도록 호출 측 컨텍스트를 복사해 실행
        contexts = [contextvars.copy_context() for _ in jobs]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(
                pool.map(lambda ctx, job: ctx.run(self._run_job, job, size, gray), contexts, jobs)
            )

    # ── 공개 API ──

    def run_benchmark(
        self,
        entries: Sequence[ManifestEntry],
        csr_grid: Sequence[float],
        config: ReconstructionConfig,
        algorithms: Optional[Sequence[Algorithm]] = None,
        out_dir: Optional[str | Path] = None,
        size: Optional[int] = 256,
        workers: int = 1,
        gray: bool = True,
    ) -> list[BenchmarkRow]:
        """교차곱 실행. out_dir 이 주어지면 benchmark.csv 와 traces/ 를 쓴다"""
        for csr in csr_grid:
            if not 0.0 < csr <= 1.0:
                raise ServiceException.invalid_argument(f"csr 는 (0, 1] 범위여야 합니다 (csr={csr})")
        configs = [
            config if algorithm == config.algorithm else _with_algorithm(config, algorithm)
            for algorithm in (algorithms or [config.algorithm])
        ]
        out_dir = Path(out_dir) if out_dir is not None else None
        jobs = [
            _Job(
                entry=entry,
                csr=float(csr),
                config=cfg,
                trace_path=None if out_dir is None else out_dir / TRACE_DIR / trace_file_name(entry.name, csr, cfg),
            )
            for entry in entries
            for csr in csr_grid
            for cfg in configs
        ]
        logger.info("벤치마크 시작: 실행 {}개, workers={}", len(jobs), workers)
        rows = sorted(self._execute(jobs, size, gray, workers), key=BenchmarkRow.sort_key)
        if out_dir is not None:
            self.result_repo.save_benchmark(rows, out_dir / BENCHMARK_CSV)
        failed = sum(not row.succeeded for row in rows)
        logger.info("벤치마크 완료: 성공 {} / 실패 {}", len(rows) - failed, failed)
        return rows

    def run_sweep(
        self,
        entry: ManifestEntry,
        csr: float,
        config: ReconstructionConfig,
        key: str,
        values: Sequence[Any],
        out_dir: Optional[str | Path] = None,
        size: Optional[int] = 256,
        workers: int = 1,
        gray: bool = True,
    ) -> list[SweepRow]:
        """config 의 key 하나를 values 로 바꿔가며 같은 영상/CSr 에서 실행 (입력 순서 유지)"""
        if key not in ReconstructionConfig.valid_keys():
            raise ServiceException.unknown_config_key(key, ReconstructionConfig.valid_keys())
        if not 0.0 < csr <= 1.0:
            raise ServiceException.invalid_argument(f"csr 는 (0, 1] 범위여야 합니다 (csr={csr})")
        base = config.base_layer()
        out_dir = Path(out_dir) if out_dir is not None else None
        jobs = []
        for value in values:
            cfg = build_config(base, {key: value})
            trace_path = None
            if out_dir is not None:
                name = trace_file_name(entry.name, csr, cfg, suffix=f"_{key}{value}")
                trace_path = out_dir / TRACE_DIR / name
            jobs.append(_Job(entry=entry, csr=float(csr), config=cfg, trace_path=trace_path))
        logger.info("스윕 시작: {} = {} ({}개)", key, list(values), len(jobs))
        rows = [
            SweepRow(parameter=key, value=str(value), row=row)
            for value, row in zip(values, self._execute(jobs, size, gray, workers))
        ]
        if out_dir is not None:
            self.result_repo.save_sweep(rows, out_dir / SWEEP_CSV)
        return rows


def _with_algorithm(config: ReconstructionConfig, algorithm: Algorithm) -> ReconstructionConfig:
    layer = config.base_layer()
    if algorithm == Algorithm.ADMM_SLOPE:
        layer.pop("projection", None)
    return build_config(layer, {"algorithm": algorithm.value})
