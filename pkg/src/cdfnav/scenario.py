"""Scenario files: INI-style experiment descriptions parsed with configparser.

Grammar (sections and keys; ``#`` or ``;`` start comments)::

    [system]
    name = single_integrator | duffing | dubin
    dimension = 2                 # single_integrator only
    control_lower = -2            # scalar or one value per input; "inf" allowed
    control_upper = 2

    [obstacle.<label>]            # any number, ordered by appearance
    center = 0 0
    r_unsafe = 0.5
    r_sense = 0.7
    dims = 0 1                    # optional, defaults to the leading coordinates

    [shaping]
    target = -1 0
    P = 2.5 0.24; 0.24 1.1        # row-major, rows separated by ";"; default identity
    alpha = 0.2
    eta = 0.1

    [controller]
    mode = qp | gradient | nominal
    beta = 0.01
    epsilon = 1e-3
    dt = 0.01
    horizon_steps = 5000
    infeasibility_policy = error | slack
    margin = 0
    gain = 1                      # gradient mode / gradient nominal
    nominal = none | gradient | constant <values>

    [initial]
    x0 = -2 0.5
    theta0 = 0                    # dubin only
    k_gain = 10                   # dubin only

    [sampler]
    kind = circle | box
    center = 0 0                  # circle
    radius = 2.5
    lower = -3 -3                 # box
    upper = 3 3
    count = 20
    seed = 42

    [grid]
    lower = -3 -3
    upper = 3 3
    slice = 0 1                   # state coordinates on the grid axes (n > 2)
    fixed = 0                     # values of the remaining coordinates
"""

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .controller import CdfConfig
from .density import DensityFunction, ObstacleSpec, ShapingFunction
from .dynamics import SYSTEMS
from .errors import ScenarioError
from .simulator import BoxSampler, CircleSampler

SCENARIO_DIR = Path(__file__).parent / "scenarios"


def shipped_scenarios():
    return sorted(p.name for p in SCENARIO_DIR.glob("*.scenario"))


def _vector(text, key):
    try:
        vals = [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise ScenarioError(f"{key}: expected numbers, got {text!r}") from None
    if not vals:
        raise ScenarioError(f"{key}: empty value")
    return np.array(vals)


def _matrix(text, key):
    rows = [r for r in text.split(";") if r.strip()]
    mat = [_vector(r, key) for r in rows]
    if len({len(r) for r in mat}) != 1:
        raise ScenarioError(f"{key}: rows have different lengths")
    return np.array(mat)


def _float(sec, key, default=None):
    if key not in sec:
        if default is None:
            raise ScenarioError(f"[{sec.name}] missing required key {key!r}")
        return default
    try:
        return float(sec[key])
    except ValueError:
        raise ScenarioError(f"[{sec.name}] {key}: expected a number, got {sec[key]!r}") from None


def _int(sec, key, default=None):
    val = _float(sec, key, default)
    if val != int(val):
        raise ScenarioError(f"[{sec.name}] {key}: expected an integer")
    return int(val)


def _section(cp, name, required=True):
    if name not in cp:
        if required:
            raise ScenarioError(f"missing section [{name}]")
        return None
    return cp[name]


@dataclass
class Scenario:
    """A parsed, validated scenario with ready-to-use library objects."""

    name: str
    system: object
    density: DensityFunction
    config: CdfConfig
    x0: np.ndarray = None
    theta0: float = 0.0
    k_gain: float = 10.0
    sampler: object = None
    count: int = None
    seed: int = 0
    grid_lower: np.ndarray = None
    grid_upper: np.ndarray = None
    grid_slice: tuple = None
    grid_fixed: np.ndarray = None
    source: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def is_dubin(self):
        return self.system.name == "dubin"

    def with_overrides(self, dt=None, beta=None):
        cfg = self.config
        if dt is not None:
            cfg = replace(cfg, dt=dt)
        if beta is not None:
            cfg = replace(cfg, beta=beta)
        return replace(self, config=cfg)


def _build_system(cp):
    sec = _section(cp, "system")
    name = sec.get("name", "").strip()
    if name not in SYSTEMS:
        raise ScenarioError(f"[system] name must be one of {sorted(SYSTEMS)}, got {name!r}")
    kwargs = {}
    if name == "single_integrator":
        kwargs["d"] = _int(sec, "dimension", 2)
    try:
        sys = SYSTEMS[name](**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"[system] {exc}") from None
    lo = _vector(sec["control_lower"], "control_lower") if "control_lower" in sec else None
    hi = _vector(sec["control_upper"], "control_upper") if "control_upper" in sec else None
    if lo is not None or hi is not None:
        lo = sys.control_lower if lo is None else lo
        hi = sys.control_upper if hi is None else hi
        for v, key in ((lo, "control_lower"), (hi, "control_upper")):
            if v.shape[0] not in (1, sys.m):
                raise ScenarioError(f"[system] {key}: expected 1 or {sys.m} values")
        try:
            sys = sys.with_bounds(np.broadcast_to(lo, (sys.m,)), np.broadcast_to(hi, (sys.m,)))
        except ValueError as exc:
            raise ScenarioError(f"[system] {exc}") from None
    return sys


def _build_obstacles(cp, n):
    obstacles = []
    for name in cp.sections():
        if not name.startswith("obstacle"):
            continue
        sec = cp[name]
        center = _vector(sec.get("center", ""), f"[{name}] center")
        r1 = _float(sec, "r_unsafe")
        r2 = _float(sec, "r_sense")
        if not r1 > 0:
            raise ScenarioError(f"[{name}] r_unsafe must be positive")
        if not r2 > r1:
            raise ScenarioError(f"[{name}] r_sense must exceed r_unsafe")
        dims = tuple(int(d) for d in _vector(sec["dims"], f"[{name}] dims")) if "dims" in sec else None
        try:
            obs = ObstacleSpec(tuple(center), r1, r2, dims)
            obs.check_dimension(n)
        except ValueError as exc:
            raise ScenarioError(f"[{name}] {exc}") from None
        obstacles.append(obs)
    return obstacles


def _build_shaping(cp, n):
    sec = _section(cp, "shaping")
    target = _vector(sec.get("target", ""), "[shaping] target")
    if target.shape[0] != n:
        raise ScenarioError(f"[shaping] target must have {n} components")
    P = _matrix(sec["P"], "[shaping] P") if "P" in sec else None
    alpha = _float(sec, "alpha", 0.2)
    eta = _float(sec, "eta", 0.1)
    if not eta > 0:
        raise ScenarioError("[shaping] eta must be positive")
    try:
        shaping = ShapingFunction(target, P, alpha)
    except ValueError as exc:
        raise ScenarioError(f"[shaping] {exc}") from None
    return shaping, eta


def _nominal(spec, density, gain, m):
    words = spec.split()
    if not words or words[0] == "none":
        return None
    if words[0] == "gradient":
        return lambda x: gain * density.grad_rho(x)
    if words[0] == "constant":
        value = _vector(" ".join(words[1:]), "[controller] nominal")
        if value.shape[0] != m:
            raise ScenarioError(f"[controller] nominal constant needs {m} values")
        return lambda x: value.copy()
    raise ScenarioError(f"[controller] nominal must be none, gradient or constant, got {spec!r}")


def _build_config(cp, density, sys):
    sec = _section(cp, "controller")
    gain = _float(sec, "gain", 1.0)
    mode = sec.get("mode", "qp").strip()
    nominal = _nominal(sec.get("nominal", "none"), density, gain, sys.m)
    if mode == "gradient" and sys.n != sys.m:
        raise ScenarioError("[controller] gradient mode needs a single-integrator system")
    try:
        return CdfConfig(
            beta=_float(sec, "beta", 0.1),
            epsilon=_float(sec, "epsilon", 1e-3),
            dt=_float(sec, "dt", 0.01),
            horizon_steps=_int(sec, "horizon_steps", 5000),
            u_nominal=nominal,
            infeasibility_policy=sec.get("infeasibility_policy", "error").strip(),
            margin=_float(sec, "margin", 0.0),
            mode=mode,
            gain=gain,
        )
    except ValueError as exc:
        raise ScenarioError(f"[controller] {exc}") from None


def _build_sampler(sec, n):
    kind = sec.get("kind", "box").strip()
    if kind == "circle":
        if n != 2:
            raise ScenarioError("[sampler] circle sampler needs a 2-D state")
        center = _vector(sec.get("center", "0 0"), "[sampler] center")
        radius = _float(sec, "radius")
        if center.shape[0] != 2 or not radius > 0:
            raise ScenarioError("[sampler] circle needs a 2-D center and positive radius")
        return CircleSampler(tuple(center), radius)
    if kind == "box":
        lo = _vector(sec.get("lower", ""), "[sampler] lower")
        hi = _vector(sec.get("upper", ""), "[sampler] upper")
        if lo.shape[0] != n or hi.shape[0] != n or np.any(lo > hi):
            raise ScenarioError(f"[sampler] box bounds must be {n}-vectors with lower <= upper")
        return BoxSampler(tuple(lo), tuple(hi))
    raise ScenarioError(f"[sampler] kind must be circle or box, got {kind!r}")


def parse_scenario(text, name="<string>"):
    """Parse and validate scenario text; raises ScenarioError naming the bad field."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=name)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from None

    sys = _build_system(cp)
    # density lives in the position plane for the Dubin car
    n = sys.n
    obstacles = _build_obstacles(cp, n)
    shaping, eta = _build_shaping(cp, n)
    density = DensityFunction(obstacles, shaping, eta)
    if density.clearance(density.target) <= 0:
        raise ScenarioError("target inside an unsafe set")
    cfg = _build_config(cp, density, sys)
    sc = Scenario(name=name, system=sys, density=density, config=cfg, source=text)

    init = _section(cp, "initial", required=False)
    if init is not None:
        if "x0" in init:
            x0 = _vector(init["x0"], "[initial] x0")
            if x0.shape[0] != n:
                raise ScenarioError(f"[initial] x0 must have {n} components")
            if density.clearance(x0) <= 0:
                raise ScenarioError("initial state unsafe")
            if density.shaping.value(x0) <= 0:
                raise ScenarioError("initial state at the target")
            sc.x0 = x0
        sc.theta0 = _float(init, "theta0", 0.0)
        sc.k_gain = _float(init, "k_gain", 10.0)
        if not sc.k_gain > 0:
            raise ScenarioError("[initial] k_gain must be positive")

    smp = _section(cp, "sampler", required=False)
    if smp is not None:
        sc.sampler = _build_sampler(smp, n)
        sc.count = _int(smp, "count", 20)
        sc.seed = _int(smp, "seed", 0)

    grid = _section(cp, "grid", required=False)
    if grid is not None:
        sc.grid_lower = _vector(grid.get("lower", ""), "[grid] lower")
        sc.grid_upper = _vector(grid.get("upper", ""), "[grid] upper")
        if sc.grid_lower.shape[0] != 2 or sc.grid_upper.shape[0] != 2 or np.any(sc.grid_lower >= sc.grid_upper):
            raise ScenarioError("[grid] lower/upper must be 2-vectors with lower < upper")
        if "slice" in grid:
            sl = tuple(int(v) for v in _vector(grid["slice"], "[grid] slice"))
            if len(sl) != 2 or len(set(sl)) != 2 or max(sl) >= n or min(sl) < 0:
                raise ScenarioError("[grid] slice must name two distinct state coordinates")
            sc.grid_slice = sl
            rest = n - 2
            fixed = _vector(grid["fixed"], "[grid] fixed") if "fixed" in grid else np.zeros(rest)
            if fixed.shape[0] != rest:
                raise ScenarioError(f"[grid] fixed needs {rest} values")
            sc.grid_fixed = fixed
    return sc


def load_scenario(path):
    """Load a scenario from a path, or by file name from the shipped set."""
    p = Path(path)
    if not p.exists() and (SCENARIO_DIR / p.name).exists():
        p = SCENARIO_DIR / p.name
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from None
    return parse_scenario(text, name=p.name)
