from .state import CutPool, IterationRecord, SolverState, gap_closed, iteration_bound
from .g2apm import g2apm, master_with_repair
from .lshaped import lshaped
from .reference import MeanValueResult, SAAResult, mean_value, saa_reference
