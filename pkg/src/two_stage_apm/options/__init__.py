from .solver_options import DEFAULT_OPTIONS_PATH, MODES, SolverOptions, load_options
