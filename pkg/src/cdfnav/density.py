"""Safe-navigation density: inverse bump functions, distance shaping and rho.

The density is

    rho(x) = prod_k Psi_k(x) / V(x) ** alpha

where each ``Psi_k`` vanishes on an unsafe ball, equals one outside a larger
sensing ball, and blends smoothly in between, and ``V`` is a quadratic
distance to the target.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError, TargetSingularityError

# psi(m) is analytically smooth at m = 0 and m = 1 but exp(-1/m) is not
# evaluable there.
M_GUARD = 1e-12


def as_state(x, n=None):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidStateError(f"invalid state: expected a vector, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise InvalidStateError(f"invalid state: expected length {n}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise InvalidStateError("invalid state: non-finite component")
    return x


@dataclass(frozen=True)
class ObstacleSpec:
    """Unsafe ball of radius ``r_unsafe`` inside a sensing ball ``r_sense``.

    Both balls share ``center`` and live in the state coordinates ``dims``
    (all coordinates when ``dims`` is None).
    """

    center: tuple
    r_unsafe: float
    r_sense: float
    dims: tuple = None

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        dims = tuple(range(len(center))) if self.dims is None else tuple(int(d) for d in self.dims)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "_center", np.array(center))
        object.__setattr__(self, "_idx", np.array(dims, dtype=int))
        if not (self.r_unsafe > 0):
            raise ValueError("r_unsafe must be positive")
        if not (self.r_sense > self.r_unsafe):
            raise ValueError("r_sense must exceed r_unsafe")
        if len(dims) != len(center):
            raise ValueError("dims and center must have the same length")
        if len(set(dims)) != len(dims) or min(dims) < 0:
            raise ValueError("dims must be distinct non-negative indices")

    def check_dimension(self, n):
        if max(self.dims) >= n:
            raise ValueError(f"obstacle dims {self.dims} exceed state dimension {n}")

    def _offset(self, x):
        return x[self._idx] - self._center

    def _sqdist(self, x):
        d = self._offset(x)
        return float(d @ d)

    def c(self, x):
        """Unsafe-set function; ``c(x) <= 0`` inside the obstacle."""
        return self._sqdist(x) - self.r_unsafe ** 2

    def b(self, x):
        """Sensing-set function; ``b(x) <= 0`` inside the sensing ball."""
        return self._sqdist(x) - self.r_sense ** 2

    def grad_c(self, x):
        g = np.zeros(x.shape[0])
        g[self._idx] = 2.0 * self._offset(x)
        return g

    # both functions differ by a constant for balls
    grad_b = grad_c


def _sigmoid(s):
    # logistic without overflow for large |s|
    if s >= 0:
        return 1.0 / (1.0 + np.exp(-s))
    e = np.exp(s)
    return e / (1.0 + e)


def _blend(m):
    """psi(m) and its derivative."""
    if m <= M_GUARD:
        return 0.0, 0.0
    if m >= 1.0 - M_GUARD:
        return 1.0, 0.0
    # psi = exp(-1/m) / (exp(-1/m) + exp(-1/(1-m))) = sigmoid(1/(1-m) - 1/m)
    s = 1.0 / (1.0 - m) - 1.0 / m
    psi = _sigmoid(s)
    ds = 1.0 / m ** 2 + 1.0 / (1.0 - m) ** 2
    return psi, psi * (1.0 - psi) * ds


def _blend_parameter(obs, x):
    d2 = obs._sqdist(x)
    c = d2 - obs.r_unsafe ** 2
    b = d2 - obs.r_sense ** 2
    return c, b, c / (c - b)


def _bump_value(obs, x):
    c, b, m = _blend_parameter(obs, x)
    if c <= 0.0:
        return 0.0
    if b > 0.0:
        return 1.0
    return _blend(m)[0]


def _bump_gradient(obs, x):
    c, b, m = _blend_parameter(obs, x)
    if c <= 0.0 or b > 0.0:
        return np.zeros(x.shape[0])
    _, dpsi = _blend(m)
    if dpsi == 0.0:
        return np.zeros(x.shape[0])
    gc = obs.grad_c(x)
    gb = obs.grad_b(x)
    dm = gc / (c - b) - c * (gc - gb) / (c - b) ** 2
    return dpsi * dm


def _bump_log_gradient(obs, x):
    c, b, m = _blend_parameter(obs, x)
    if c <= 0.0:
        raise ValueError("log-gradient undefined inside the obstacle")
    if b > 0.0 or m >= 1.0 - M_GUARD:
        return np.zeros(x.shape[0])
    # d log(sigmoid(s))/ds = 1 - sigmoid(s); no psi factor, so no underflow
    s = 1.0 / (1.0 - m) - 1.0 / m
    ds = 1.0 / m ** 2 + 1.0 / (1.0 - m) ** 2
    dlog = _sigmoid(-s) * ds
    gc = obs.grad_c(x)
    gb = obs.grad_b(x)
    dm = gc / (c - b) - c * (gc - gb) / (c - b) ** 2
    return dlog * dm


def bump_value(obs, x):
    """Inverse bump Psi_k(x): 0 on the obstacle, 1 outside sensing, smooth between."""
    return _bump_value(obs, as_state(x))


def bump_gradient(obs, x):
    """Analytic gradient of :func:`bump_value` with respect to the full state."""
    return _bump_gradient(obs, as_state(x))


def bump_log_gradient(obs, x):
    """Gradient of log Psi_k for x outside the obstacle.

    Stays finite and accurate where Psi_k itself underflows, which the
    normalised QP rows rely on near obstacle boundaries.
    """
    return _bump_log_gradient(obs, as_state(x))


@dataclass(frozen=True)
class ShapingFunction:
    """Quadratic distance V(x) = (x - target)^T P (x - target) and exponent alpha."""

    target: np.ndarray
    P: np.ndarray = None
    alpha: float = 0.2

    def __post_init__(self):
        target = np.array(self.target, dtype=float).ravel()
        n = target.shape[0]
        P = np.eye(n) if self.P is None else np.array(self.P, dtype=float)
        if P.shape != (n, n):
            raise ValueError(f"P must be {n}x{n}, got {P.shape}")
        if np.max(np.abs(P - P.T)) > 1e-12:
            raise ValueError("P must be symmetric")
        try:
            np.linalg.cholesky(P)
        except np.linalg.LinAlgError:
            raise ValueError("P must be positive definite") from None
        if not (self.alpha > 0):
            raise ValueError("alpha must be positive")
        target.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n(self):
        return self.target.shape[0]

    def value(self, x):
        d = x - self.target
        return float(d @ self.P @ d)

    def gradient(self, x):
        return 2.0 * self.P @ (x - self.target)


@dataclass(frozen=True)
class DensityFunction:
    """The navigation density rho for a set of obstacles and a shaping term.

    ``eta`` is the radius of the terminal neighbourhood around the target in
    which simulations hand over and stop.
    """

    obstacles: tuple
    shaping: ShapingFunction
    eta: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if not (self.eta > 0):
            raise ValueError("eta must be positive")
        for obs in self.obstacles:
            obs.check_dimension(self.n)

    @property
    def n(self):
        return self.shaping.n

    @property
    def target(self):
        return self.shaping.target

    def _state(self, x):
        return as_state(x, self.n)

    def _shaping(self, x):
        V = self.shaping.value(x)
        if V <= 0.0:
            raise TargetSingularityError("target singularity: V(x) = 0")
        return V

    def clearance(self, x):
        """min_k c_k(x); non-positive means x is in the unsafe set."""
        x = self._state(x)
        if not self.obstacles:
            return np.inf
        return min(obs.c(x) for obs in self.obstacles)

    def in_unsafe(self, x):
        return self.clearance(x) <= 0.0

    def in_sensing(self, x):
        x = self._state(x)
        return any(obs.b(x) <= 0.0 < obs.c(x) for obs in self.obstacles)

    def rho(self, x):
        x = self._state(x)
        V = self._shaping(x)
        num = 1.0
        for obs in self.obstacles:
            num *= _bump_value(obs, x)
            if num == 0.0:
                return 0.0
        return num / V ** self.shaping.alpha

    def grad_rho(self, x):
        x = self._state(x)
        V = self._shaping(x)
        alpha = self.shaping.alpha
        values = [_bump_value(obs, x) for obs in self.obstacles]
        num = float(np.prod(values)) if values else 1.0
        grad_num = np.zeros(self.n)
        for k, obs in enumerate(self.obstacles):
            others = np.prod(values[:k] + values[k + 1:]) if len(values) > 1 else 1.0
            if others != 0.0:
                grad_num += others * _bump_gradient(obs, x)
        return grad_num / V ** alpha - alpha * num * V ** (-alpha - 1.0) * self.shaping.gradient(x)

    def log_gradient(self, x):
        """grad(rho)/rho, defined wherever rho > 0 analytically (outside all obstacles)."""
        return self.rho_and_log_gradient(x)[1]

    def rho_and_log_gradient(self, x):
        """(rho, grad log rho) in one pass; the gradient is None inside the unsafe set.

        The log-gradient is returned for every state strictly outside the
        obstacles, including states so close to a boundary that rho itself
        underflows to zero.
        """
        x = self._state(x)
        V = self._shaping(x)
        g = -self.shaping.alpha * self.shaping.gradient(x) / V
        num = 1.0
        for obs in self.obstacles:
            if obs.c(x) <= 0.0:
                return 0.0, None
            num *= _bump_value(obs, x)
            g = g + _bump_log_gradient(obs, x)
        return num / V ** self.shaping.alpha, g


def rho(df, x):
    """Density value prod_k Psi_k(x) / V(x)^alpha."""
    return df.rho(x)


def grad_rho(df, x):
    """Analytic gradient of the density."""
    return df.grad_rho(x)


def gradient_controller(df, x, gain=1.0):
    """Density-gradient feedback u = gain * grad rho(x) for single integrators."""
    if not (gain > 0):
        raise ValueError("gain must be positive")
    return gain * df.grad_rho(x)
