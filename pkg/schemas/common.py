from enum import Enum


class Algorithm(str, Enum):
    ADMM_SLOPE = "admm-slope"
    LR_GMM_SLOPE = "lr-gmm-slope"
    LR_PLE_SLOPE = "lr-ple-slope"


class Projection(str, Enum):
    IST = "ist"
    GAP = "gap"
    ACC_GAP = "acc-gap"
    ADMM = "admm"


class WarmStart(str, Enum):
    ZERO = "zero"
    ADJOINT = "adjoint"
