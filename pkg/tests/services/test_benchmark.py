import math

import pytest

from core.config import build_config
from exceptions.common import ServiceException
from exceptions.error_codes import ErrorCode
from repositories.image_repository import ImageRepository
from repositories.result_repository import ResultRepository
from schemas.common import Algorithm
from schemas.results import BENCHMARK_CSV_HEADER, SWEEP_CSV_HEADER, TRACE_CSV_HEADER, ManifestEntry
from services.benchmark import (
    BENCHMARK_CSV,
    SWEEP_CSV,
    TRACE_DIR,
    BenchmarkService,
    load_manifest,
    parse_manifest,
    trace_file_name,
)
from services.pipeline import ReconstructionService
from tests.conftest import piecewise_constant, textured


@pytest.fixture
def config():
    return build_config({"patch_side": 4, "stride": 2, "K": 2, "max_iters": 2})


@pytest.fixture
def service():
    return BenchmarkService(ImageRepository(), ResultRepository(), record_timing=False)


@pytest.fixture
def entries(write_image):
    write_image(piecewise_constant(16, 16), "blocks.pgm")
    path = write_image(textured(16, 16), "waves.pgm")
    manifest = path.parent / "manifest.txt"
    manifest.write_text("# 테스트 영상\nblocks.pgm\nwaves = waves.pgm\n", encoding="utf-8")
    return load_manifest(manifest)


# ── manifest ──

def test_parse_manifest_names_and_paths(tmp_path):
    entries = parse_manifest("a.pgm\n\n# comment\nlena = /data/lena.ppm  # 컬러\n", tmp_path)
    assert [e.name for e in entries] == ["a", "lena"]
    assert entries[0].path == str(tmp_path / "a.pgm")
    assert entries[1].path == "/data/lena.ppm"


def test_parse_manifest_rejects_duplicates():
    with pytest.raises(ServiceException) as exc:
        parse_manifest("x/a.pgm\ny/a.pgm\n")
    assert exc.value.error_code == ErrorCode.INVALID_ARGUMENT


def test_missing_manifest(tmp_path):
    with pytest.raises(ServiceException) as exc:
        load_manifest(tmp_path / "nope.txt")
    assert exc.value.error_code == ErrorCode.NOT_FOUND


# ── benchmark ──

def test_empty_manifest_writes_header_only(service, config, tmp_path):
    rows = service.run_benchmark([], [0.3], config, out_dir=tmp_path)
    assert rows == []
    assert (tmp_path / BENCHMARK_CSV).read_text() == ",".join(BENCHMARK_CSV_HEADER) + "\n"


def test_benchmark_rows_cover_cross_product(service, config, entries, tmp_path):
    rows = service.run_benchmark(
        entries,
        [0.5, 0.25],
        config,
        algorithms=[Algorithm.LR_GMM_SLOPE, Algorithm.ADMM_SLOPE],
        out_dir=tmp_path / "out",
        size=16,
    )
    assert len(rows) == 8
    assert [(r.image, r.csr, r.algorithm) for r in rows[:4]] == [
        ("blocks", 0.25, "admm-slope"),
        ("blocks", 0.25, "lr-gmm-slope"),
        ("blocks", 0.5, "admm-slope"),
        ("blocks", 0.5, "lr-gmm-slope"),
    ]
    assert all(row.succeeded and math.isfinite(row.psnr_db) for row in rows)
    assert {r.projection for r in rows if r.algorithm == "admm-slope"} == {"admm"}
    assert {r.projection for r in rows if r.algorithm == "lr-gmm-slope"} == {"acc-gap"}

    table = ResultRepository().get(tmp_path / "out" / BENCHMARK_CSV)
    assert table.header == BENCHMARK_CSV_HEADER
    assert len(table.rows) == 8
    trace = ResultRepository().get(
        tmp_path / "out" / TRACE_DIR / trace_file_name("waves", 0.5, config)
    )
    assert trace.header == TRACE_CSV_HEADER
    assert [row[0] for row in trace.rows] == ["1", "2"]


def test_algorithm_switch_keeps_explicit_values(service, entries):
    config = build_config({"patch_side": 4, "stride": 2, "max_iters": 1, "K": 3})
    rows = service.run_benchmark(
        entries[:1], [0.5], config, algorithms=[Algorithm.LR_PLE_SLOPE], size=16
    )
    assert rows[0].algorithm == "lr-ple-slope"
    expected = build_config({"patch_side": 4, "stride": 2, "max_iters": 1, "K": 3, "algorithm": "lr-ple-slope"})
    assert rows[0].config_hash == expected.config_hash()


def test_algorithm_switch_keeps_explicit_value_equal_to_default(service, entries):
    # K=6 은 lr-gmm-slope 의 기본값과 같지만 명시했으므로 lr-ple-slope 에도 적용
    config = build_config({"patch_side": 4, "stride": 2, "max_iters": 1, "K": 6})
    rows = service.run_benchmark(
        entries[:1], [0.5], config, algorithms=[Algorithm.LR_GMM_SLOPE, Algorithm.LR_PLE_SLOPE], size=16
    )
    ple_row = next(row for row in rows if row.algorithm == "lr-ple-slope")
    expected = build_config({"patch_side": 4, "stride": 2, "max_iters": 1, "K": 6, "algorithm": "lr-ple-slope"})
    assert expected.K == 6
    assert ple_row.config_hash == expected.config_hash()


def test_non_service_failure_becomes_nan_row(service, config, entries, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(ReconstructionService, "reconstruct", broken)
    rows = service.run_benchmark(entries, [0.5], config, size=16)
    assert len(rows) == 2
    assert all(math.isnan(row.psnr_db) for row in rows)
    assert all(row.error == "boom" for row in rows)


def test_failed_run_becomes_nan_row(service, config, entries, tmp_path):
    broken = ManifestEntry(name="missing", path=str(tmp_path / "missing.pgm"))
    rows = service.run_benchmark([broken] + entries[:1], [0.5], config, size=16)
    failed = [r for r in rows if r.image == "missing"]
    assert len(failed) == 1
    assert math.isnan(failed[0].psnr_db)
    assert not failed[0].succeeded
    assert failed[0].csv_row()[4] == "nan"
    assert all(r.succeeded for r in rows if r.image != "missing")


def test_benchmark_output_is_reproducible(config, entries, tmp_path):
    outputs = []
    for workers, name in ((1, "serial"), (2, "threaded")):
        bench = BenchmarkService(ImageRepository(), ResultRepository(), record_timing=False)
        bench.run_benchmark(entries, [0.3, 0.6], config, out_dir=tmp_path / name, size=16, workers=workers)
        outputs.append(
            {p.relative_to(tmp_path / name): p.read_bytes() for p in sorted((tmp_path / name).rglob("*.csv"))}
        )
    assert outputs[0] == outputs[1]
    assert len(outputs[0]) == 1 + 4


def test_benchmark_rejects_invalid_csr(service, config, entries):
    for csr in (0.0, 1.5):
        with pytest.raises(ServiceException) as exc:
            service.run_benchmark(entries, [csr], config)
        assert exc.value.error_code == ErrorCode.INVALID_ARGUMENT


def test_prepare_image_resizes_and_caches(service, entries):
    image = service.prepare_image(entries[0], 8)
    assert (image.channels, image.height, image.width) == (1, 8, 8)
    assert service.prepare_image(entries[0], 8) is image


# ── sweep ──

def test_sweep_keeps_value_order(service, config, entries, tmp_path):
    rows = service.run_sweep(entries[0], 0.5, config, "K", ["3", "1"], out_dir=tmp_path, size=16)
    assert [(r.parameter, r.value) for r in rows] == [("K", "3"), ("K", "1")]
    assert rows[0].row.config_hash != rows[1].row.config_hash
    table = ResultRepository().get(tmp_path / SWEEP_CSV)
    assert table.header == SWEEP_CSV_HEADER
    assert [row[:2] for row in table.rows] == [["K", "3"], ["K", "1"]]


def test_sweep_rejects_unknown_key(service, config, entries):
    with pytest.raises(ServiceException) as exc:
        service.run_sweep(entries[0], 0.5, config, "nope", ["1"])
    assert exc.value.error_code == ErrorCode.UNKNOWN_CONFIG_KEY
