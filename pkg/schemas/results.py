import math
from typing import Optional

from pydantic import BaseModel, field_serializer

TRACE_CSV_HEADER = ["iteration", "data_residual", "psnr_db", "seconds"]
BENCHMARK_CSV_HEADER = [
    "image", "csr", "algorithm", "projection", "psnr_db", "wall_seconds", "config_hash",
]
SWEEP_CSV_HEADER = ["parameter", "value"] + BENCHMARK_CSV_HEADER


def format_db(value: Optional[float]) -> str:
    if value is None:
        return ""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf"
    return f"{value:.4f}"


class TraceRecord(BaseModel):
    iteration: int
    data_residual: float
    psnr_db: Optional[float] = None
    seconds: float = 0.0
    class_change_fraction: Optional[float] = None

    def csv_row(self) -> list[str]:
        return [
            str(self.iteration),
            f"{self.data_residual:.10e}",
            format_db(self.psnr_db),
            f"{self.seconds:.3f}",
        ]


class BenchmarkRow(BaseModel):
    image: str
    csr: float
    algorithm: str
    projection: str
    psnr_db: float
    wall_seconds: float
    config_hash: str
    error: Optional[str] = None

    @field_serializer("psnr_db")
    def _serialize_psnr(self, value: float) -> str:
        return format_db(value)

    @property
    def succeeded(self) -> bool:
        return self.error is None

    def sort_key(self) -> tuple:
        return (self.image, self.csr, self.algorithm, self.projection)

    def csv_row(self) -> list[str]:
        return [
            self.image,
            f"{self.csr:g}",
            self.algorithm,
            self.projection,
            format_db(self.psnr_db),
            f"{self.wall_seconds:.3f}",
            self.config_hash,
        ]


class SweepRow(BaseModel):
    parameter: str
    value: str
    row: BenchmarkRow

    def csv_row(self) -> list[str]:
        return [self.parameter, self.value] + self.row.csv_row()


class ManifestEntry(BaseModel):
    name: str
    path: str
