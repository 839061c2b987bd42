"""Branch-and-cut and heuristics for reserve set covering with buffers and connectivity."""
from .instance import (
    Instance,
    InstanceFormatError,
    InvalidParameterError,
    Scenario,
    apply_scenario,
    derive_lambda,
    generate_grid,
    make_instance,
    parse_instance,
    read_instance,
    threat_score,
    write_instance,
)
from .solution import Solution, Variant
from .formulations import SeparationSettings, build
from .milp import Strategy, branch_and_cut, root_bound, solve_lp
from .oracle import brute_force, validate
from .heuristics import LocalBranchingParams, construct, local_branching, post_process
from .bench import Setting, solve
from .render import render_solution

__version__ = "0.1.0"
