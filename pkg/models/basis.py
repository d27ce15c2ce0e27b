from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class PatchBasis:
    dimension: int
    basis: np.ndarray  # (P, P) 직교 정규 2-D DCT-II, 열이 atom
