from dataclasses import dataclass

import numpy as np


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class SensingOperator:
    """행 선택 + 열 치환 + 정규화된 Hadamard 측정 행렬 A (암묵적 표현)"""

    order: int
    num_rows: int
    permutation: np.ndarray
    row_selection: np.ndarray
    scale: float
    seed: int
    csr: float
    signal_length: int

    def __post_init__(self):
        object.__setattr__(self, "permutation", _frozen(self.permutation))
        object.__setattr__(self, "row_selection", _frozen(self.row_selection))

    @property
    def shape(self) -> tuple[int, int]:
        return self.num_rows, self.signal_length

    @property
    def is_padded(self) -> bool:
        return self.signal_length < self.order


@dataclass(eq=False)
class Measurement:
    values: np.ndarray
    csr: float
    noise_sigma: float
    operator_seed: int
    order: int
    height: int
    width: int
    channel: int = 0

    @property
    def num_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def signal_length(self) -> int:
        return self.height * self.width
