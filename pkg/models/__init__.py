from models.basis import PatchBasis
from models.image import ImageBuffer
from models.mixture import GaussianComponent, GmmModel, LowRankGmm, PleModel
from models.patches import PatchGrid, PatchSet
from models.sensing import Measurement, SensingOperator
from models.solver_state import SolverState
from models.reconstruction import ReconstructionResult
