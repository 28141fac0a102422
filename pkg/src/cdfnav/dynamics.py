"""Control-affine systems x' = f(x) + g(x) u and the shipped plants."""

from dataclasses import dataclass, field

import numpy as np


def fd_divergence(field_fn, x, h=1e-6):
    """Central-difference divergence of a vector field R^n -> R^n."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = h
        total += (field_fn(x + e)[j] - field_fn(x - e)[j]) / (2 * h)
    return total


@dataclass(frozen=True)
class ControlAffineSystem:
    """A control-affine plant with analytic divergences of its vector fields.

    ``input_columns(x)`` returns the n x m matrix whose columns are g_1..g_m.
    When ``drift_divergence`` or ``input_divergences`` are omitted they are
    evaluated by central differences and ``numeric_divergence`` is set.
    """

    n: int
    m: int
    drift: object
    input_columns: object
    drift_divergence: object = None
    input_divergences: object = None
    control_lower: np.ndarray = None
    control_upper: np.ndarray = None
    name: str = "custom"
    numeric_divergence: bool = field(default=False, init=False)

    def __post_init__(self):
        lower = np.full(self.m, -np.inf) if self.control_lower is None else np.array(self.control_lower, dtype=float)
        upper = np.full(self.m, np.inf) if self.control_upper is None else np.array(self.control_upper, dtype=float)
        lower = np.broadcast_to(lower, (self.m,)).copy()
        upper = np.broadcast_to(upper, (self.m,)).copy()
        if np.any(lower > upper):
            raise ValueError("control_lower must not exceed control_upper")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "control_lower", lower)
        object.__setattr__(self, "control_upper", upper)
        if self.drift_divergence is None or self.input_divergences is None:
            object.__setattr__(self, "numeric_divergence", True)

    def f(self, x):
        return np.asarray(self.drift(x), dtype=float)

    def g(self, x):
        return np.asarray(self.input_columns(x), dtype=float).reshape(self.n, self.m)

    def div_f(self, x):
        if self.drift_divergence is not None:
            return float(self.drift_divergence(x))
        return fd_divergence(self.f, x)

    def div_g(self, x):
        if self.input_divergences is not None:
            return np.asarray(self.input_divergences(x), dtype=float)
        return np.array([fd_divergence(lambda y, i=i: self.g(y)[:, i], x) for i in range(self.m)])

    def vector_field(self, x, u):
        return self.f(x) + self.g(x) @ np.asarray(u, dtype=float)

    def with_bounds(self, lower, upper):
        """Copy of the system with different box bounds on u."""
        return ControlAffineSystem(
            self.n, self.m, self.drift, self.input_columns,
            self.drift_divergence, self.input_divergences,
            lower, upper, self.name,
        )


def single_integrator(d=2, lower=None, upper=None):
    """x' = u in R^d."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    eye = np.eye(d)
    return ControlAffineSystem(
        n=d, m=d,
        drift=lambda x: np.zeros(d),
        input_columns=lambda x: eye,
        drift_divergence=lambda x: 0.0,
        input_divergences=lambda x: np.zeros(d),
        control_lower=lower, control_upper=upper,
        name="single_integrator",
    )


def duffing(lower=-2.0, upper=2.0):
    """Forced Duffing oscillator x1' = x2, x2' = x1 - x1^3 - 0.1 x2 + u."""
    g = np.array([[0.0], [1.0]])
    return ControlAffineSystem(
        n=2, m=1,
        drift=lambda x: np.array([x[1], x[0] - x[0] ** 3 - 0.1 * x[1]]),
        input_columns=lambda x: g,
        drift_divergence=lambda x: -0.1,
        input_divergences=lambda x: np.zeros(1),
        control_lower=lower, control_upper=upper,
        name="duffing",
    )


def dubin_reduced(lower=None, upper=None):
    """Planar single integrator standing in for the Dubin car position dynamics.

    The simulator recognises ``name == "dubin"`` and adds heading tracking.
    """
    sys = single_integrator(2, lower, upper)
    return ControlAffineSystem(
        sys.n, sys.m, sys.drift, sys.input_columns,
        sys.drift_divergence, sys.input_divergences,
        sys.control_lower, sys.control_upper, name="dubin",
    )


SYSTEMS = {
    "single_integrator": single_integrator,
    "duffing": duffing,
    "dubin": dubin_reduced,
}
