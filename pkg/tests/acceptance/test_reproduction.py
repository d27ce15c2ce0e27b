"""
기준 영상(barbara, parrot) 재현 / 절제 실험
CS_GMM_IMAGE_DIR 에 barbara.pgm|ppm, parrot.pgm|ppm 이 있어야 실행된다.
"""
import os
from pathlib import Path

import numpy as np
import pytest

from core.config import build_config
from models.image import ImageBuffer
from repositories.image_repository import ImageRepository
from repositories.result_repository import ResultRepository
from schemas.results import ManifestEntry
from services import metrics, sensing
from services.benchmark import BenchmarkService
from services.pipeline import ReconstructionService

IMAGE_DIR = os.environ.get("CS_GMM_IMAGE_DIR")

pytestmark = [
    pytest.mark.slow,
    pytest.mark.reproduction,
    pytest.mark.skipif(not IMAGE_DIR, reason="CS_GMM_IMAGE_DIR 가 설정되지 않음"),
]


def _entry(name: str) -> ManifestEntry:
    for suffix in (".pgm", ".ppm"):
        path = Path(IMAGE_DIR or ".") / f"{name}{suffix}"
        if path.is_file():
            return ManifestEntry(name=name, path=str(path))
    pytest.skip(f"{name} 영상이 {IMAGE_DIR} 에 없음")


@pytest.fixture(scope="module")
def bench() -> BenchmarkService:
    return BenchmarkService(ImageRepository(), ResultRepository(), record_timing=False)


def _crop(bench: BenchmarkService, name: str, side: int = 64) -> ImageBuffer:
    image = bench.prepare_image(_entry(name), 256)
    top = (image.height - side) // 2
    left = (image.width - side) // 2
    return ImageBuffer(image.pixels[:, top: top + side, left: left + side])


def _reconstruct_psnr(image: ImageBuffer, csr: float, **overrides) -> tuple[float, float]:
    config = build_config(overrides)
    op = sensing.build_operator(image.height * image.width, csr, config.seed)
    measurement = sensing.measure(op, image.channel(0), height=image.height, width=image.width)
    result = ReconstructionService(record_timing=False).reconstruct([measurement], config, reference=image)
    return metrics.psnr(image, result.image), result.warm_start_psnr_db


# ── 전체 크기 재현 ──

def test_barbara_at_ten_percent(bench):
    (row,) = bench.run_benchmark([_entry("barbara")], [0.1], build_config())
    assert abs(row.psnr_db - 26.04) <= 1.0


def test_parrot_at_three_percent(bench):
    (row,) = bench.run_benchmark([_entry("parrot")], [0.03], build_config())
    assert row.psnr_db >= 22.1


def test_barbara_psnr_increases_with_csr(bench):
    rows = bench.run_benchmark([_entry("barbara")], [0.03, 0.05, 0.07, 0.1], build_config())
    assert np.all(np.diff([row.psnr_db for row in rows]) > 0)


@pytest.mark.parametrize("csr", [0.03, 0.05, 0.07, 0.1])
def test_gmm_beats_adjoint_baseline(bench, csr):
    image = bench.prepare_image(_entry("barbara"), 256)
    psnr_db, baseline_db = _reconstruct_psnr(image, csr)
    assert psnr_db >= baseline_db + 3.0


def test_benchmark_csv_is_byte_identical(tmp_path):
    entries = [_entry("barbara")]
    outputs = []
    for name in ("first", "second"):
        bench = BenchmarkService(ImageRepository(), ResultRepository(), record_timing=False)
        bench.run_benchmark(entries, [0.05], build_config({"max_iters": 2}), out_dir=tmp_path / name, size=64)
        outputs.append((tmp_path / name / "benchmark.csv").read_bytes())
    assert outputs[0] == outputs[1]


# ── 64x64 절제 실험 ──

def test_component_count_insensitivity(bench):
    crop = _crop(bench, "barbara")
    scores = [_reconstruct_psnr(crop, 0.1, K=k)[0] for k in (4, 6, 8)]
    assert max(scores) - min(scores) <= 0.5


def test_gmm_not_worse_than_ple_at_low_csr(bench):
    crop = _crop(bench, "barbara")
    gmm_db, _ = _reconstruct_psnr(crop, 0.05, algorithm="lr-gmm-slope")
    ple_db, _ = _reconstruct_psnr(crop, 0.05, algorithm="lr-ple-slope")
    assert gmm_db >= ple_db - 0.1


def test_accelerated_gap_is_best_projection(bench):
    crop = _crop(bench, "barbara")
    scores = {p: _reconstruct_psnr(crop, 0.1, projection=p)[0] for p in ("ist", "admm", "acc-gap")}
    assert scores["acc-gap"] >= max(scores["ist"], scores["admm"]) - 0.1
