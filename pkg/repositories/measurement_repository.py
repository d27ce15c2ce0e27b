"""
측정 파일 (CSMEAS1)
===================
바이너리: 레코드(채널)마다
    헤더 <8sQQQdd  {magic "CSMEAS1\\0", N, M, operator_seed, noise_sigma, csr}
    값   M 개의 little-endian f64
    기하 <8sQQ     {magic "CSGEOM1\\0", height, width}  (없으면 √N×√N 정사각형)

텍스트: '#' key=value 헤더 줄 뒤에 값이 한 줄에 하나씩, 레코드 사이는 빈 줄.
"""
import math
import struct
from pathlib import Path

import numpy as np

from exceptions.common import ServiceException
from models.sensing import Measurement
from repositories.base_repository import BaseRepository
from services.sensing import is_power_of_two

MAGIC = b"CSMEAS1\x00"
GEOMETRY_MAGIC = b"CSGEOM1\x00"
HEADER = struct.Struct("<8sQQQdd")
GEOMETRY = struct.Struct("<8sQQ")
TEXT_KEYS = ("N", "M", "operator_seed", "noise_sigma", "csr", "height", "width")


def _geometry_for(order: int, num_rows: int, height: int | None, width: int | None) -> tuple[int, int]:
    if num_rows < 1 or num_rows > order or not is_power_of_two(order):
        raise ServiceException.header_parse(f"잘못된 측정 헤더: N={order}, M={num_rows}")
    if height is None or width is None:
        side = math.isqrt(order)
        if side * side != order:
            raise ServiceException.header_parse(
                f"기하 정보가 없고 N={order} 이 제곱수가 아니어서 영상 크기를 정할 수 없습니다"
            )
        return side, side
    if height < 1 or width < 1 or height * width > order or 2 * height * width <= order:
        raise ServiceException.header_parse(f"잘못된 영상 크기 {height}x{width} (N={order})")
    return height, width


def encode_binary(measurements: list[Measurement]) -> bytes:
    chunks = []
    for m in measurements:
        chunks.append(
            HEADER.pack(MAGIC, m.order, m.num_rows, m.operator_seed, m.noise_sigma, m.csr)
        )
        chunks.append(np.asarray(m.values, dtype="<f8").tobytes())
        chunks.append(GEOMETRY.pack(GEOMETRY_MAGIC, m.height, m.width))
    return b"".join(chunks)


def decode_binary(data: bytes) -> list[Measurement]:
    measurements = []
    offset = 0
    while offset < len(data):
        if len(data) - offset < HEADER.size:
            raise ServiceException.truncated_file(
                f"측정 헤더가 잘렸습니다 (offset={offset}, 남은 바이트={len(data) - offset})"
            )
        magic, order, num_rows, seed, sigma, csr = HEADER.unpack_from(data, offset)
        if magic != MAGIC:
            raise ServiceException.unsupported_format(f"CSMEAS1 파일이 아닙니다 (magic={magic!r})")
        offset += HEADER.size
        if num_rows > order:
            raise ServiceException.header_parse(f"잘못된 측정 헤더: N={order}, M={num_rows}")
        end = offset + 8 * num_rows
        if end > len(data):
            raise ServiceException.truncated_file(
                f"측정값이 잘렸습니다 (기대 {num_rows}개, 실제 {(len(data) - offset) // 8}개)"
            )
        values = np.frombuffer(data, dtype="<f8", count=num_rows, offset=offset).astype(np.float64)
        offset = end

        height = width = None
        if data[offset: offset + len(GEOMETRY_MAGIC)] == GEOMETRY_MAGIC:
            if len(data) - offset < GEOMETRY.size:
                raise ServiceException.truncated_file("기하 정보가 잘렸습니다")
            _, height, width = GEOMETRY.unpack_from(data, offset)
            offset += GEOMETRY.size
        height, width = _geometry_for(order, num_rows, height, width)

        measurements.append(
            Measurement(
                values=values,
                csr=float(csr),
                noise_sigma=float(sigma),
                operator_seed=int(seed),
                order=int(order),
                height=height,
                width=width,
                channel=len(measurements),
            )
        )
    if not measurements:
        raise ServiceException.truncated_file("빈 측정 파일입니다")
    return measurements


def encode_text(measurements: list[Measurement]) -> bytes:
    records = []
    for m in measurements:
        header = {
            "N": m.order,
            "M": m.num_rows,
            "operator_seed": m.operator_seed,
            "noise_sigma": repr(float(m.noise_sigma)),
            "csr": repr(float(m.csr)),
            "height": m.height,
            "width": m.width,
        }
        lines = ["# CSMEAS1"] + [f"# {key}={value}" for key, value in header.items()]
        lines += [repr(float(v)) for v in m.values]
        records.append("\n".join(lines))
    return ("\n\n".join(records) + "\n").encode("utf-8")


def _parse_text_record(lines: list[str], channel: int) -> Measurement:
    header: dict[str, str] = {}
    values = []
    for line in lines:
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = (part.strip() for part in body.split("=", 1))
                header[key] = value
            continue
        try:
            values.append(float(line))
        except ValueError as exc:
            raise ServiceException.header_parse(f"측정값을 해석할 수 없습니다: {line!r}") from exc

    missing = [key for key in TEXT_KEYS[:5] if key not in header]
    if missing:
        raise ServiceException.header_parse(f"측정 헤더에 키가 없습니다: {', '.join(missing)}")
    try:
        order, num_rows, seed = (int(header[k]) for k in ("N", "M", "operator_seed"))
        sigma, csr = float(header["noise_sigma"]), float(header["csr"])
        height = int(header["height"]) if "height" in header else None
        width = int(header["width"]) if "width" in header else None
    except ValueError as exc:
        raise ServiceException.header_parse(f"측정 헤더 값을 해석할 수 없습니다: {exc}") from exc
    if len(values) < num_rows:
        raise ServiceException.truncated_file(f"측정값이 잘렸습니다 (기대 {num_rows}개, 실제 {len(values)}개)")
    if len(values) > num_rows:
        raise ServiceException.header_parse(f"측정값 개수가 M={num_rows} 보다 많습니다 ({len(values)})")
    height, width = _geometry_for(order, num_rows, height, width)
    return Measurement(
        values=np.asarray(values, dtype=np.float64),
        csr=csr,
        noise_sigma=sigma,
        operator_seed=seed,
        order=order,
        height=height,
        width=width,
        channel=channel,
    )


def decode_text(data: bytes) -> list[Measurement]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ServiceException.unsupported_format("측정 텍스트 파일이 UTF-8 이 아닙니다") from exc
    records: list[list[str]] = [[]]
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            if records[-1]:
                records.append([])
            continue
        records[-1].append(line)
    records = [r for r in records if r]
    if not records:
        raise ServiceException.truncated_file("빈 측정 파일입니다")
    return [_parse_text_record(lines, c) for c, lines in enumerate(records)]


class MeasurementRepository(BaseRepository[list[Measurement]]):
    """채널별 측정 목록 저장소. 읽을 때는 내용으로 바이너리/텍스트를 판별한다"""

    kind = "측정"

    def __init__(self, text: bool = False):
        self.text = text

    def _read(self, path: Path) -> list[Measurement]:
        data = path.read_bytes()
        if data.startswith(MAGIC):
            return decode_binary(data)
        if data.lstrip().startswith(b"#"):
            return decode_text(data)
        if len(data) < len(MAGIC) and MAGIC.startswith(data):
            raise ServiceException.truncated_file(f"측정 헤더가 잘렸습니다: {path}")
        raise ServiceException.unsupported_format(f"CSMEAS1 측정 파일이 아닙니다: {path}")

    def _write(self, obj: list[Measurement]) -> bytes:
        if not obj:
            raise ServiceException.invalid_argument("저장할 측정이 없습니다")
        return encode_text(obj) if self.text else encode_binary(obj)
