from .builtin import BUILTIN_NAMES, builtin, cvar, lands_mini, parse_builtin_name, prodmix, random_discrete
from .problem_file import (
    ProblemFile,
    problem_from_dict,
    problem_to_dict,
    read_problem_file,
    write_problem_file,
)
