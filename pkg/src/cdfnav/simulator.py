"""Closed-loop Euler simulation, Dubin heading tracking and Monte Carlo sweeps."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import controller as ctl
from .density import as_state
from .errors import InfeasibleStepError

CONVERGED = "converged"
UNSAFE = "unsafe"
TIMEOUT = "timeout"
INFEASIBLE = "infeasible"

EXIT_CODES = {CONVERGED: 0, UNSAFE: 2, INFEASIBLE: 3, TIMEOUT: 4}


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass
class Trajectory:
    """Recorded closed-loop run.

    ``controls[k]`` is the control applied from ``states[k]`` to
    ``states[k + 1]``; the final state has no control. ``rho`` and
    ``clearance`` are per recorded state.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    step_flags: list
    outcome: str
    min_clearance: float
    terminal_distance: float
    rho: np.ndarray
    clearance: np.ndarray
    dt: float
    steps: list = field(default_factory=list, repr=False)
    extras: dict = field(default_factory=dict, repr=False)
    message: str = ""

    @property
    def unsafe_dwell_time(self):
        return float(self.dt * np.count_nonzero(self.clearance <= 0.0))

    @property
    def time_to_target(self):
        return float(self.times[-1]) if self.outcome == CONVERGED else math.inf

    @property
    def relaxed_steps(self):
        return sum(1 for f in self.step_flags if f == "relaxed")


def _rho_or_cap(df, x, cap=np.inf):
    try:
        return df.rho(x)
    except ValueError:
        return cap


class _Recorder:
    def __init__(self, df, dt, keep_steps):
        self.df = df
        self.dt = dt
        self.keep_steps = keep_steps
        self.states, self.controls, self.flags, self.steps = [], [], [], []
        self.rho, self.clear = [], []

    def state(self, x, planar=None):
        xs = x if planar is None else planar
        self.states.append(np.array(x, dtype=float))
        self.clear.append(self.df.clearance(xs))
        self.rho.append(_rho_or_cap(self.df, xs))

    def control(self, u, flag, step=None):
        self.controls.append(np.array(u, dtype=float))
        self.flags.append(flag)
        if self.keep_steps and step is not None:
            self.steps.append(step)

    def finish(self, outcome, m, message="", planar_last=None):
        states = np.array(self.states)
        last = states[-1] if planar_last is None else planar_last
        clear = np.array(self.clear)
        return Trajectory(
            times=self.dt * np.arange(len(states)),
            states=states,
            controls=np.array(self.controls).reshape(-1, m),
            step_flags=self.flags,
            outcome=outcome,
            min_clearance=float(np.min(clear)),
            terminal_distance=float(np.linalg.norm(last - self.df.target)),
            rho=np.array(self.rho),
            clearance=clear,
            dt=self.dt,
            steps=self.steps,
            message=message,
        )


def _control(sys, df, cfg, x):
    """Applied control and (flag, StepResult or None) for the configured mode."""
    if cfg.mode == "nominal":
        return np.asarray(cfg.u_nominal(x), dtype=float).reshape(sys.m), "nominal", None
    if cfg.mode == "gradient":
        if sys.n != sys.m:
            raise ValueError("gradient mode needs a fully actuated single integrator")
        return cfg.gain * df.grad_rho(x), "gradient", None
    step = ctl.step_control(sys, df, cfg, x)
    return step.u, "relaxed" if step.relaxed else "optimal", step


def _terminal(df, x):
    if df.clearance(x) <= 0.0:
        return UNSAFE
    if np.linalg.norm(x - df.target) <= df.eta:
        return CONVERGED
    return None


def simulate(sys, df, cfg, x0, keep_steps=False):
    """Run the closed loop x_k = x_{k-1} + dt (f + g u_k) for up to N steps.

    Stops early when the state enters the unsafe set, reaches the eta-ball
    around the target, or the step QP is infeasible under the ``error``
    policy. With ``keep_steps`` every StepResult is kept on the trajectory.
    """
    x = as_state(x0, sys.n).copy()
    rec = _Recorder(df, cfg.dt, keep_steps)
    rec.state(x)
    for _ in range(int(cfg.horizon_steps)):
        outcome = _terminal(df, x)
        if outcome is not None:
            return rec.finish(outcome, sys.m)
        try:
            u, flag, step = _control(sys, df, cfg, x)
        except InfeasibleStepError as exc:
            return rec.finish(INFEASIBLE, sys.m, message=str(exc))
        rec.control(u, flag, step)
        x = x + cfg.dt * (sys.f(x) + sys.g(x) @ u)
        rec.state(x)
    return rec.finish(_terminal(df, x) or TIMEOUT, sys.m)


@dataclass
class DubinState:
    """Pose of the car plus the heading reference from the previous step."""

    x1: float
    x2: float
    theta: float
    k_gain: float = 10.0
    theta_tilde_prev: float = None

    def __post_init__(self):
        if not (self.k_gain > 0):
            raise ValueError("k_gain must be positive")
        self.theta = wrap_angle(self.theta)
        if self.theta_tilde_prev is not None:
            self.theta_tilde_prev = wrap_angle(self.theta_tilde_prev)


def dubin_steering(u_planar, ds, dt):
    """Turn a planar velocity command into speed and turn rate for the car.

    Speed is the command norm, the heading reference is its four-quadrant
    angle, and the turn rate is the reference rate minus ``k`` times the
    wrapped heading error. The reference rate is a wrapped backward
    difference (zero on the first call); a zero command keeps the previous
    heading reference with zero speed.
    """
    u1, u2 = float(u_planar[0]), float(u_planar[1])
    v = math.hypot(u1, u2)
    if v == 0.0:
        theta_tilde = ds.theta_tilde_prev if ds.theta_tilde_prev is not None else ds.theta
    else:
        theta_tilde = math.atan2(u2, u1)
        if theta_tilde == -math.pi:
            theta_tilde = math.pi
    if ds.theta_tilde_prev is None:
        rate = 0.0
    else:
        rate = wrap_angle(theta_tilde - ds.theta_tilde_prev) / dt
    omega = rate - ds.k_gain * wrap_angle(ds.theta - theta_tilde)
    new = DubinState(ds.x1, ds.x2, ds.theta, ds.k_gain, theta_tilde)
    return v, omega, new


def simulate_dubin(df, cfg, x0, theta0, k_gain=10.0, sys=None, keep_steps=False):
    """Dubin car driven by the planar density controller plus heading tracking.

    The recorded state is (x1, x2, theta); controls are (v, omega).
    ``extras`` carries the planar commands, heading references and heading
    errors per step.
    """
    from .dynamics import dubin_reduced

    sys = sys or dubin_reduced()
    pos = as_state(x0, 2).copy()
    ds = DubinState(pos[0], pos[1], theta0, k_gain)
    rec = _Recorder(df, cfg.dt, keep_steps)
    rec.state(np.array([ds.x1, ds.x2, ds.theta]), planar=pos)
    planar, refs, errors = [], [], []
    outcome = None
    message = ""
    for _ in range(int(cfg.horizon_steps)):
        outcome = _terminal(df, pos)
        if outcome is not None:
            break
        try:
            u, flag, step = _control(sys, df, cfg, pos)
        except InfeasibleStepError as exc:
            outcome, message = INFEASIBLE, str(exc)
            break
        v, omega, ds = dubin_steering(u, ds, cfg.dt)
        planar.append(u)
        refs.append(ds.theta_tilde_prev)
        errors.append(wrap_angle(ds.theta - ds.theta_tilde_prev))
        rec.control([v, omega], flag, step)
        theta = ds.theta
        pos = pos + cfg.dt * v * np.array([math.cos(theta), math.sin(theta)])
        ds = DubinState(pos[0], pos[1], theta + cfg.dt * omega, k_gain, ds.theta_tilde_prev)
        rec.state(np.array([ds.x1, ds.x2, ds.theta]), planar=pos)
        outcome = None
    if outcome is None:
        outcome = _terminal(df, pos) or TIMEOUT
    traj = rec.finish(outcome, 2, message=message, planar_last=pos)
    traj.extras["planar_controls"] = np.array(planar).reshape(-1, 2)
    traj.extras["theta_tilde"] = np.array(refs)
    traj.extras["heading_error"] = np.array(errors)
    return traj


@dataclass(frozen=True)
class BoxSampler:
    """Uniform samples from an axis-aligned box."""

    lower: tuple
    upper: tuple

    def sample(self, rng, count):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        return rng.uniform(lo, hi, size=(count, lo.shape[0]))


@dataclass(frozen=True)
class CircleSampler:
    """Uniform samples on a circle (2-D) of given center and radius."""

    center: tuple
    radius: float

    def sample(self, rng, count):
        phi = rng.uniform(0.0, 2.0 * math.pi, size=count)
        c = np.asarray(self.center, dtype=float)
        return c + self.radius * np.column_stack([np.cos(phi), np.sin(phi)])


@dataclass
class SweepReport:
    initial_states: np.ndarray
    outcomes: list
    terminal_distances: np.ndarray
    dwell_times: np.ndarray
    min_clearances: np.ndarray
    relaxed_steps: np.ndarray
    seed: int
    trajectories: list = field(default_factory=list, repr=False)

    @property
    def count(self):
        return len(self.outcomes)

    def fraction(self, outcome):
        return sum(1 for o in self.outcomes if o == outcome) / self.count

    @property
    def converged_fraction(self):
        return self.fraction(CONVERGED)

    @property
    def unsafe_fraction(self):
        return self.fraction(UNSAFE)


def sample_initial_states(df, sampler, count, seed, max_draws=100):
    """Seeded samples from ``sampler`` with unsafe or target points redrawn.

    Sample i depends only on (seed, i), so a sweep with count = 1 reproduces
    the first state of any larger sweep with the same seed.
    """
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        for _ in range(max_draws):
            x = sampler.sample(rng, 1)[0]
            if df.clearance(x) > 0.0 and np.linalg.norm(x - df.target) > df.eta:
                break
        else:
            raise ValueError("sampler keeps producing unsafe initial states")
        out.append(x)
    return np.array(out)


def monte_carlo_sweep(sys, df, cfg, sampler, count, seed, run=None, keep_trajectories=False):
    """Simulate from ``count`` seeded initial states and tally outcomes.

    ``run(x0)`` overrides the per-sample simulation (used for the Dubin
    car); by default it is :func:`simulate`. Failures of individual runs are
    recorded as outcomes, never raised.
    """
    if int(count) < 1:
        raise ValueError("count must be >= 1")
    run = run or (lambda x0: simulate(sys, df, cfg, x0))
    x0s = sample_initial_states(df, sampler, int(count), seed)
    outcomes, dist, dwell, clear, relaxed, trajs = [], [], [], [], [], []
    for x0 in x0s:
        traj = run(x0)
        outcomes.append(traj.outcome)
        dist.append(traj.terminal_distance)
        dwell.append(traj.unsafe_dwell_time)
        clear.append(traj.min_clearance)
        relaxed.append(traj.relaxed_steps)
        if keep_trajectories:
            trajs.append(traj)
    return SweepReport(
        initial_states=x0s, outcomes=outcomes,
        terminal_distances=np.array(dist), dwell_times=np.array(dwell),
        min_clearances=np.array(clear), relaxed_steps=np.array(relaxed),
        seed=seed, trajectories=trajs,
    )


def heading_windows(traj, window=1.0, rate_limit=1.0, tol=0.05):
    """Check heading tracking on a Dubin trajectory.

    For every window of length ``window`` seconds over which the heading
    reference turns no faster than ``rate_limit`` rad/s, the heading error
    at the end of the window must be below ``tol``. Returns
    (windows checked, windows violating).
    """
    ref = traj.extras["theta_tilde"]
    err = np.abs(traj.extras["heading_error"])
    w = int(round(window / traj.dt))
    rate = np.zeros(len(ref))
    if len(ref) > 1:
        rate[1:] = np.abs([wrap_angle(d) for d in np.diff(ref)]) / traj.dt
    checked = bad = 0
    for i in range(len(err) - w):
        if rate[i + 1:i + w + 1].max() <= rate_limit:
            checked += 1
            bad += bool(err[i + w] >= tol)
    return checked, bad
