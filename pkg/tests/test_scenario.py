import numpy as np
import pytest

from cdfnav.errors import ScenarioError
from cdfnav.scenario import load_scenario, parse_scenario, shipped_scenarios

BASE = """
[system]
name = single_integrator
dimension = 2

[obstacle.a]
center = 0 0
r_unsafe = 0.5
r_sense = 0.7

[shaping]
target = 2 0
alpha = 0.2
eta = 0.1

[controller]
beta = 0.1

[initial]
x0 = -2 0
"""


def edit(text, old, new):
    assert old in text
    return text.replace(old, new)


def test_every_shipped_scenario_parses():
    names = shipped_scenarios()
    assert {"duffing.scenario", "dubin.scenario", "integrator_free.scenario", "alpha_sweep.scenario"} <= set(names)
    for name in names:
        sc = load_scenario(name)
        assert sc.x0 is not None and sc.sampler is not None


def test_duffing_constants():
    sc = load_scenario("duffing.scenario")
    assert sc.system.name == "duffing"
    np.testing.assert_array_equal(sc.system.control_lower, [-2.0])
    obs = sc.density.obstacles[0]
    assert (obs.r_unsafe, obs.r_sense) == (0.5, 0.7)
    assert sc.config.dt == 0.01 and sc.config.horizon_steps == 5000
    # shipped P is the Riccati solution: symmetric and positive definite
    P = sc.density.shaping.P
    assert np.all(np.linalg.eigvalsh(P) > 0)


def test_minimal_text_parses_with_defaults():
    sc = parse_scenario(BASE)
    assert sc.config.epsilon == 1e-3
    assert sc.config.mode == "qp"
    np.testing.assert_array_equal(sc.density.shaping.P, np.eye(2))


def test_matrix_is_row_major():
    sc = parse_scenario(edit(BASE, "alpha = 0.2", "P = 2 1; 1 3\nalpha = 0.2"))
    np.testing.assert_array_equal(sc.density.shaping.P, [[2, 1], [1, 3]])


@pytest.mark.parametrize(
    "old,new,needle",
    [
        ("r_sense = 0.7", "r_sense = 0.5", "r_sense"),
        ("r_sense = 0.7", "r_sense = 0.3", "r_sense"),
        ("alpha = 0.2", "P = 1 0; 0 -1\nalpha = 0.2", "P"),
        ("alpha = 0.2", "P = 1 2; 0 1\nalpha = 0.2", "symmetric"),
        ("target = 2 0", "target = 0.1 0", "target inside an unsafe set"),
        ("x0 = -2 0", "x0 = 0.2 0.1", "initial state unsafe"),
        ("name = single_integrator", "name = rocket", "[system] name"),
        ("beta = 0.1", "beta = -1", "beta"),
        ("beta = 0.1", "beta = fast", "beta"),
        ("target = 2 0", "target = 2 0 0", "target"),
        ("center = 0 0", "center = 0 0 0 0", "obstacle.a"),
        ("beta = 0.1", "beta = 0.1\ninfeasibility_policy = ignore", "infeasibility_policy"),
        ("beta = 0.1", "beta = 0.1\nnominal = wobble", "nominal"),
        ("eta = 0.1", "eta = 0", "eta"),
    ],
)
def test_validation_names_the_field(old, new, needle):
    with pytest.raises(ScenarioError, match=needle.replace("[", r"\[").replace("]", r"\]")):
        parse_scenario(edit(BASE, old, new))


def test_missing_section_and_garbage():
    with pytest.raises(ScenarioError, match="shaping"):
        parse_scenario(BASE.split("[shaping]")[0])
    with pytest.raises(ScenarioError, match="malformed"):
        parse_scenario("this is not a scenario")
    with pytest.raises(ScenarioError):
        load_scenario("/nonexistent/file.scenario")


def test_gradient_mode_rejected_for_underactuated_system():
    text = load_scenario("duffing.scenario").source.replace("mode = qp", "mode = gradient")
    with pytest.raises(ScenarioError, match="gradient"):
        parse_scenario(text)


def test_nominal_variants():
    sc = parse_scenario(edit(BASE, "beta = 0.1", "beta = 0.1\nnominal = constant 1 -1"))
    np.testing.assert_array_equal(sc.config.u_nominal(np.zeros(2)), [1, -1])
    sc = parse_scenario(edit(BASE, "beta = 0.1", "beta = 0.1\nnominal = gradient\ngain = 2"))
    x = np.array([-1.5, 0.3])
    np.testing.assert_allclose(sc.config.u_nominal(x), 2 * sc.density.grad_rho(x))


def test_overrides():
    sc = load_scenario("duffing.scenario").with_overrides(dt=0.005, beta=0.02)
    assert sc.config.dt == 0.005 and sc.config.beta == 0.02
    assert sc.config.infeasibility_policy == "slack"


def test_grid_slice_for_higher_dimension():
    text = edit(BASE, "dimension = 2", "dimension = 3")
    text = edit(text, "target = 2 0", "target = 2 0 0").replace("x0 = -2 0", "x0 = -2 0 0")
    text += "\n[grid]\nlower = -1 -1\nupper = 1 1\nslice = 0 2\nfixed = 0.5\n"
    sc = parse_scenario(text)
    assert sc.grid_slice == (0, 2)
    np.testing.assert_array_equal(sc.grid_fixed, [0.5])
    with pytest.raises(ScenarioError, match="fixed"):
        parse_scenario(text.replace("fixed = 0.5", "fixed = 0.5 1"))
