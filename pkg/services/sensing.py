"""
순열 Hadamard 압축 센싱 연산자
==============================
A = scale · S · H · Π 를 행렬 없이 적용한다.

- H: 자연(Sylvester) 순서의 ±1 Hadamard 행렬, fwht 로 O(N log N) 적용
- Π: 시드 기반 Fisher–Yates 열 치환 (A 의 j 번째 열 = H 의 permutation[j] 번째 열)
- S: 상위 M 개 행 선택
- scale = 1/√N 이므로 A Aᵀ = I_M

영상 픽셀 수가 2의 거듭제곱이 아니면 다음 거듭제곱으로 0-패딩하고 adjoint 후 잘라낸다.
잘라낸 A 는 행이 더 이상 직교 정규가 아니므로, 반복 해법은 full_order 연산자로
패딩 픽셀까지 미지수로 두고 풀어야 A Aᵀ = I 가 유지된다.
"""
from dataclasses import replace
from typing import Optional

import numpy as np
from loguru import logger

from exceptions.common import ServiceException
from models.sensing import Measurement, SensingOperator


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def num_rows_for(csr: float, signal_length: int) -> int:
    # round-half-up, Python round() 의 banker's rounding 회피
    return max(1, int(np.floor(csr * signal_length + 0.5)))


def fwht(v: np.ndarray) -> np.ndarray:
    """마지막 축에 대한 비정규화 Walsh–Hadamard 변환 H·v (자연 순서)"""
    out = np.array(v, dtype=np.float64, copy=True)
    n = out.shape[-1]
    if not is_power_of_two(n):
        raise ServiceException.invalid_argument(f"fwht 길이는 2의 거듭제곱이어야 합니다 (N={n})")
    lead = out.shape[:-1]
    h = 1
    while h < n:
        blocks = out.reshape(*lead, n // (2 * h), 2, h)
        top = blocks[..., 0, :]
        bottom = blocks[..., 1, :]
        out = np.stack((top + bottom, top - bottom), axis=-2).reshape(*lead, n)
        h *= 2
    return out


def build_operator(
    n: int,
    csr: float,
    seed: int,
    permutation: Optional[np.ndarray] = None,
) -> SensingOperator:
    """n 픽셀 신호용 연산자 생성. permutation 은 테스트에서 항등 치환을 강제할 때 사용"""
    if not 0.0 < csr <= 1.0:
        raise ServiceException.invalid_argument(f"csr 는 (0, 1] 범위여야 합니다 (csr={csr})")
    if n < 1:
        raise ServiceException.invalid_argument(f"신호 길이는 양수여야 합니다 (n={n})")

    order = next_power_of_two(n)
    num_rows = num_rows_for(csr, n)
    if permutation is None:
        # Generator.permutation 은 Fisher–Yates 셔플
        permutation = np.random.default_rng(seed).permutation(order)
    else:
        permutation = np.asarray(permutation, dtype=np.int64)
        if sorted(permutation.tolist()) != list(range(order)):
            raise ServiceException.invalid_argument("permutation 이 {0..N-1} 의 전단사가 아닙니다")

    if order != n:
        logger.debug("신호 길이 {} → Hadamard 차수 {} 로 0-패딩", n, order)

    return SensingOperator(
        order=order,
        num_rows=num_rows,
        permutation=permutation,
        row_selection=np.arange(num_rows, dtype=np.int64),
        scale=1.0 / np.sqrt(order),
        seed=int(seed),
        csr=float(csr),
        signal_length=n,
    )


def apply(op: SensingOperator, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (op.signal_length,):
        raise ServiceException.dimension_mismatch(op.signal_length, x.shape, "x")
    scratch = np.zeros(op.order)
    scratch[op.permutation[: op.signal_length]] = x
    return fwht(scratch)[op.row_selection] * op.scale


def adjoint(op: SensingOperator, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (op.num_rows,):
        raise ServiceException.dimension_mismatch(op.num_rows, y.shape, "y")
    scratch = np.zeros(op.order)
    scratch[op.row_selection] = y
    # H 는 대칭
    return fwht(scratch)[op.permutation[: op.signal_length]] * op.scale


def dense_matrix(op: SensingOperator) -> np.ndarray:
    """작은 N 에서 검증용으로 A 를 명시적으로 구성"""
    return np.stack([apply(op, e) for e in np.eye(op.signal_length)], axis=1)


def full_order(op: SensingOperator) -> SensingOperator:
    """패딩 픽셀을 포함한 N 열 연산자. 앞쪽 signal_length 개 성분이 영상 픽셀"""
    if not op.is_padded:
        return op
    return replace(op, signal_length=op.order)


def operator_for(measurement: Measurement) -> SensingOperator:
    op = build_operator(measurement.signal_length, measurement.csr, measurement.operator_seed)
    if op.order != measurement.order or op.num_rows != measurement.num_rows:
        raise ServiceException.dimension_mismatch(
            (measurement.order, measurement.num_rows), (op.order, op.num_rows), "measurement"
        )
    return op


def measure(
    op: SensingOperator,
    image: np.ndarray,
    noise_sigma: float = 0.0,
    noise_seed: int = 0,
    height: Optional[int] = None,
    width: Optional[int] = None,
    channel: int = 0,
) -> Measurement:
    image = np.asarray(image, dtype=np.float64).reshape(-1)
    if image.shape[0] != op.signal_length:
        raise ServiceException.dimension_mismatch(op.signal_length, image.shape[0], "image")
    if noise_sigma < 0:
        raise ServiceException.invalid_argument(f"noise_sigma 는 음수일 수 없습니다 ({noise_sigma})")
    if not np.all(np.isfinite(image)):
        raise ServiceException.non_finite("image")

    values = apply(op, image)
    if noise_sigma > 0:
        values = values + np.random.default_rng(noise_seed).normal(0.0, noise_sigma, size=values.shape)

    if height is None or width is None:
        side = int(round(np.sqrt(op.signal_length)))
        if side * side != op.signal_length:
            raise ServiceException.invalid_argument("정사각형이 아닌 영상은 height/width 를 지정해야 합니다")
        height = width = side
    if height * width != op.signal_length:
        raise ServiceException.dimension_mismatch(op.signal_length, height * width, "height*width")

    return Measurement(
        values=values,
        csr=op.csr,
        noise_sigma=float(noise_sigma),
        operator_seed=op.seed,
        order=op.order,
        height=int(height),
        width=int(width),
        channel=channel,
    )
