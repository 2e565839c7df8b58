"""Builtin instances: Prod-Mix, CVaR portfolio, a small LandS-style capacity plan and random discrete problems."""
from typing import Optional, Sequence, Tuple

import numpy as np

from two_stage_apm.exceptions import ProblemValidationError
from two_stage_apm.measure import DiscreteAtoms, UniformBox
from two_stage_apm.problems.problem_file import ProblemFile
from two_stage_apm.recourse import RecourseScenario, TwoStageProblem

BUILTIN_NAMES = ("prodmix", "cvar", "lands-mini", "random-discrete")
MAX_RANDOM_SIZE = 10


def prodmix() -> ProblemFile:
    """
    Production mix: choose labor and machine capacity x at unit costs (12, 40), then buy overtime y at (5, 10) to
    cover the random workload T x - y <= h. The slack columns of W turn the coupling rows into equalities.
    """
    W = np.array([[-1.0, 0.0, 1.0, 0.0], [0.0, -1.0, 0.0, 1.0]])
    q = np.array([5.0, 10.0, 0.0, 0.0])
    distribution = UniformBox(
        T_low=np.array([[3.5, 9.0], [0.8, 36.0]]),
        T_high=np.array([[4.5, 11.0], [1.2, 44.0]]),
        h_low=np.array([5970.0, 3979.0]),
        h_high=np.array([6030.0, 4021.0]),
    )
    problem = TwoStageProblem.single(
        c=-np.array([12.0, 40.0]),
        A=np.zeros((0, 2)),
        b=np.zeros(0),
        W=W,
        q=q,
        distribution=distribution,
        name="prodmix",
    )
    return ProblemFile(
        problem=problem,
        options=dict(solver=dict(eps=0.05)),
        description="Prod-Mix: min -c^T x + E[q^T y] with T x - y <= h, uniform T and h.",
    )


CVAR_RETURN_LOW = np.array([-0.05, -0.02, 0.0])
CVAR_RETURN_HIGH = np.array([0.15, 0.08, 0.04])


def cvar(alpha: float = 0.9, target_return: float = 0.04, points_per_axis: Optional[int] = None) -> ProblemFile:
    """
    Minimum CVaR portfolio over three assets with uniform returns r.

    The first stage is (x1, x2, x3, tau_plus, tau_minus, s) with tau = tau_plus - tau_minus the value-at-risk level and s
    the surplus over the target mean return. The recourse y1 - y2 = -(r^T x + tau) / (1 - alpha) at cost y1 measures
    the expected excess loss, so its dual set is the segment [0, 1].

    Parameters
    ----------
    alpha : float, default: 0.9
    target_return : float, default: 0.04
        Lower bound on the expected portfolio return.
    points_per_axis : int, optional
        Replace the uniform law by its equally weighted midpoint grid.
    """
    if not 0.0 < alpha < 1.0:
        raise ProblemValidationError(f"alpha must be in (0, 1), got {alpha}", path="alpha")
    if points_per_axis is not None and points_per_axis < 1:
        raise ProblemValidationError(
            f"points_per_axis must be at least 1, got {points_per_axis}", path="points_per_axis"
        )
    scale = 1.0 / (1.0 - alpha)
    fixed = np.array([1.0, -1.0, 0.0]) * scale
    distribution = UniformBox(
        T_low=np.concatenate([CVAR_RETURN_LOW * scale, fixed])[None, :],
        T_high=np.concatenate([CVAR_RETURN_HIGH * scale, fixed])[None, :],
        h_low=np.zeros(1),
        h_high=np.zeros(1),
    )
    name = "cvar"
    if points_per_axis is not None:
        distribution = distribution.discretize(points_per_axis)
        name = f"cvar:{points_per_axis}"
    mean_return = 0.5 * (CVAR_RETURN_LOW + CVAR_RETURN_HIGH)
    A = np.array(
        [
            [1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
            [*mean_return, 0.0, 0.0, -1.0],
        ]
    )
    problem = TwoStageProblem.single(
        c=np.array([0.0, 0.0, 0.0, 1.0, -1.0, 0.0]),
        A=A,
        b=np.array([1.0, target_return]),
        W=np.array([[1.0, -1.0]]),
        q=np.array([1.0, 0.0]),
        distribution=distribution,
        name=name,
        metadata=dict(alpha=alpha, target_return=target_return),
    )
    return ProblemFile(
        problem=problem,
        description=f"CVaR_{alpha} of the portfolio loss under a mean return of at least {target_return}.",
    )


LANDS_OPERATING_COST = np.array([4.0, 4.5, 3.2])
LANDS_MODE_DURATION = np.array([5.0, 3.0, 1.0])
LANDS_SHORTAGE_PENALTY = 100.0


def lands_mini() -> ProblemFile:
    """
    Three technologies with capacities x_i serve three demand modes d_j.

    First stage (x1, x2, x3, s1, s2): total capacity at least 12 and an investment budget of 120. The recourse
    allocates y_ij with idle capacity v_i, shortage z_j and surplus w_j; only d1 is random. The coefficients are fixed
    by this generator rather than taken from a published dataset.
    """
    num_tech = num_modes = 3
    allocation = np.kron(np.eye(num_tech), np.ones(num_modes))
    demand = np.kron(np.ones(num_tech), np.eye(num_modes))
    W = np.block(
        [
            [allocation, np.eye(num_tech), np.zeros((num_tech, 2 * num_modes))],
            [demand, np.zeros((num_modes, num_tech)), np.eye(num_modes), -np.eye(num_modes)],
        ]
    )
    q = np.concatenate(
        [
            np.outer(LANDS_OPERATING_COST, LANDS_MODE_DURATION).ravel(),
            np.zeros(num_tech),
            np.full(num_modes, LANDS_SHORTAGE_PENALTY),
            np.zeros(num_modes),
        ]
    )
    T = np.zeros((num_tech + num_modes, num_tech + 2))
    T[:num_tech, :num_tech] = -np.eye(num_tech)
    distribution = UniformBox.fixed_technology_law(
        T=T,
        h_low=np.array([0.0, 0.0, 0.0, 3.0, 3.0, 2.0]),
        h_high=np.array([0.0, 0.0, 0.0, 7.0, 3.0, 2.0]),
    )
    problem = TwoStageProblem.single(
        c=np.array([10.0, 7.0, 16.0, 0.0, 0.0]),
        A=np.array([[1.0, 1.0, 1.0, -1.0, 0.0], [10.0, 7.0, 16.0, 0.0, 1.0]]),
        b=np.array([12.0, 120.0]),
        W=W,
        q=q,
        distribution=distribution,
        name="lands-mini",
    )
    return ProblemFile(
        problem=problem,
        description="LandS-style capacity planning with three technologies and three demand modes (generator data).",
    )


def random_discrete(seed: int = 0, sizes: Sequence[int] = (2, 3, 2)) -> ProblemFile:
    """
    A random finitely supported instance with complete recourse.

    Parameters
    ----------
    seed : int
    sizes : (n, m, l)
        First-stage variables, core recourse columns and recourse rows, each between 1 and 10. W = [W0, I, -I] with
        penalty costs on the identity blocks, so that D is a nonempty polytope.
    """
    n, m, l = _check_sizes(sizes)
    rng = np.random.default_rng(seed)
    W0 = rng.uniform(-1.0, 1.0, size=(l, m))
    q0 = rng.uniform(0.5, 2.0, size=m)
    penalties = rng.uniform(2.0, 5.0, size=l)
    W = np.hstack([W0, np.eye(l), -np.eye(l)])
    q = np.concatenate([q0, penalties, penalties])
    c = rng.uniform(-1.0, 1.0, size=n)

    num_atoms = int(rng.integers(2, 13))
    weights = rng.dirichlet(np.ones(num_atoms))
    weights /= weights.sum()
    h = rng.uniform(-5.0, 5.0, size=(num_atoms, l))
    if rng.random() < 0.5:
        T = np.broadcast_to(rng.uniform(-1.0, 1.0, size=(l, n)), (num_atoms, l, n)).copy()
    else:
        T = rng.uniform(-1.0, 1.0, size=(num_atoms, l, n))

    problem = TwoStageProblem(
        c=c,
        A=np.ones((1, n)),
        b=np.array([float(n)]),
        scenarios=(RecourseScenario(W=W, q=q),),
        distribution=DiscreteAtoms(T=T, h=h, weights=weights),
        name=f"random-discrete:{seed}:{n},{m},{l}",
        metadata=dict(seed=seed, sizes=(n, m, l)),
    )
    return ProblemFile(problem=problem, description=f"Random discrete instance with {num_atoms} atoms.")


def _check_sizes(sizes: Sequence[int]) -> Tuple[int, int, int]:
    if len(sizes) != 3:
        raise ProblemValidationError(f"Expected sizes (n, m, l), got {tuple(sizes)}", path="sizes")
    for size in sizes:
        if not 1 <= int(size) <= MAX_RANDOM_SIZE:
            raise ProblemValidationError(
                f"Sizes must lie between 1 and {MAX_RANDOM_SIZE}, got {tuple(sizes)}", path="sizes"
            )
    return tuple(int(size) for size in sizes)


def parse_builtin_name(name: str) -> Tuple[str, Tuple[str, ...]]:
    """Split ``random-discrete:7:2,3,2`` or ``cvar:5`` into the base name and its arguments."""
    base, *arguments = name.split(":")
    if base not in BUILTIN_NAMES:
        raise ProblemValidationError(f"Unknown builtin '{base}', expected one of {BUILTIN_NAMES}", path="name")
    return base, tuple(arguments)


def builtin(name: str, seed: Optional[int] = None, sizes: Optional[Sequence[int]] = None) -> ProblemFile:
    """
    Build a builtin instance by name.

    ``random-discrete`` takes its seed and sizes either as arguments or in the name, as in ``random-discrete:7:2,3,2``;
    ``cvar:<k>`` uses a k-point-per-axis grid instead of the uniform return law.
    """
    base, arguments = parse_builtin_name(name)
    if base == "prodmix":
        return prodmix()
    if base == "lands-mini":
        return lands_mini()
    if base == "cvar":
        if len(arguments) > 1:
            raise ProblemValidationError(f"Malformed builtin name '{name}': cvar takes one grid size", path="name")
        try:
            points_per_axis = int(arguments[0]) if arguments else None
        except ValueError as error:
            raise ProblemValidationError(f"Malformed builtin name '{name}': {error}", path="name") from error
        return cvar(points_per_axis=points_per_axis)
    try:
        if seed is None:
            seed = int(arguments[0]) if arguments else 0
        if sizes is None:
            sizes = tuple(int(size) for size in arguments[1].split(",")) if len(arguments) > 1 else (2, 3, 2)
    except ValueError as error:
        raise ProblemValidationError(f"Malformed builtin name '{name}': {error}", path="name") from error
    return random_discrete(seed=seed, sizes=sizes)
