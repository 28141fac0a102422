"""Safe navigation of control-affine systems with control density functions.

A density rho(x) that vanishes on obstacles and blows up at the target is
built from inverse bump functions and a quadratic shaping term; a small QP
per step picks the least-effort control whose closed-loop field keeps
div((f + g u) rho) >= beta rho, with a finite-difference trace bound
standing in for the spatial derivative of u.
"""

from .controller import CdfConfig, StepResult, assemble_step_qp, certificate_ok, step_control
from .density import DensityFunction, ObstacleSpec, ShapingFunction, grad_rho, rho
from .dynamics import ControlAffineSystem, dubin_reduced, duffing, single_integrator
from .errors import (
    CdfError,
    InfeasibleStepError,
    InvalidStateError,
    ScenarioError,
    TargetSingularityError,
)
from .qp import QpProblem, QpSolution, qp_solve
from .simulator import (
    BoxSampler,
    CircleSampler,
    SweepReport,
    Trajectory,
    monte_carlo_sweep,
    simulate,
    simulate_dubin,
)

__version__ = "0.1.0"
