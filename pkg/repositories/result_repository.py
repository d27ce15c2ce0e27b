import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from repositories.base_repository import BaseRepository
from schemas.results import (
    BENCHMARK_CSV_HEADER,
    SWEEP_CSV_HEADER,
    TRACE_CSV_HEADER,
    BenchmarkRow,
    SweepRow,
    TraceRecord,
)


@dataclass
class CsvTable:
    header: list[str]
    rows: list[list[str]] = field(default_factory=list)

    def as_dicts(self) -> list[dict[str, str]]:
        return [dict(zip(self.header, row)) for row in self.rows]


class ResultRepository(BaseRepository[CsvTable]):
    """trace / benchmark / sweep CSV. 줄바꿈은 항상 '\\n'"""

    kind = "결과 CSV"

    def save_trace(self, records: Iterable[TraceRecord], path: str | Path) -> Path:
        return self.save(CsvTable(TRACE_CSV_HEADER, [r.csv_row() for r in records]), path)

    def save_benchmark(self, rows: Iterable[BenchmarkRow], path: str | Path) -> Path:
        ordered = sorted(rows, key=BenchmarkRow.sort_key)
        return self.save(CsvTable(BENCHMARK_CSV_HEADER, [r.csv_row() for r in ordered]), path)

    def save_sweep(self, rows: Iterable[SweepRow], path: str | Path) -> Path:
        return self.save(CsvTable(SWEEP_CSV_HEADER, [r.csv_row() for r in rows]), path)

    def _read(self, path: Path) -> CsvTable:
        reader = csv.reader(io.StringIO(path.read_text(encoding="utf-8")))
        rows = list(reader)
        if not rows:
            return CsvTable(header=[])
        return CsvTable(header=rows[0], rows=rows[1:])

    def _write(self, obj: CsvTable) -> bytes:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(obj.header)
        writer.writerows(obj.rows)
        return buffer.getvalue().encode("utf-8")
