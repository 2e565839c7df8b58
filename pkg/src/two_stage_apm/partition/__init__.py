from .cells import (
    Cell,
    Partition,
    common_refinement,
    intersect_cell,
    is_refinement,
    partition_from_atom_groups,
    trivial_partition,
)
from .adapted import adapted_partition, check_adapted, cone_cell, decision_label, problem_fans
