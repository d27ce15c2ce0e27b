from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class SolverState:
    x: np.ndarray
    w: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    y_running: Optional[np.ndarray] = None
    iteration: int = 0
    objective_trace: list[float] = field(default_factory=list)

    @classmethod
    def start(cls, x0: np.ndarray, y: np.ndarray) -> "SolverState":
        return cls(
            x=x0.copy(),
            w=x0.copy(),
            v=np.zeros_like(x0),
            y_running=np.array(y, dtype=float, copy=True),
        )
