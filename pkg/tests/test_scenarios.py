import dataclasses

import numpy as np
import pytest

from artifact.errors import ConfigError
from artifact.scenarios import SCENARIO_NAMES, load_scenario


def test_builtin_constants():
    lin = load_scenario("linear_2x2")
    assert lin.t_s == 1e-3 and lin.dt == 1e-5 and lin.num_anchors == 1
    assert np.array_equal(lin.constants["A"], [[1, 4], [5, -1]])
    assert np.array_equal(lin.constants["B"], [[2, 1], [0.6, 1]])
    assert lin.inputs == ((1.0, 2.0), (2.0, 4.0), (3.0, 8.0))
    bl = load_scenario("bloch")
    assert bl.constants == {"epsilon": 0.6, "omega": 1.4}
    assert bl.num_anchors == 20 and len(bl.inputs) == 8 and bl.order == 2
    prc = load_scenario("prc")
    assert prc.basis == "fourier" and prc.order == 6 and prc.num_anchors == 35 and prc.noise == 0.0
    noisy = load_scenario("prc_noise")
    assert noisy.noise == 1.0 and noisy.trials == 20 and noisy.n_values == (5, 25, 100, 200)


def test_systems_build():
    for name in SCENARIO_NAMES:
        sc = load_scenario(name)
        s = sc.system()
        assert sc.basis_spec(s).dimension == s.state_dim
        assert len(sc.inputs[0]) == s.input_dim


def test_overrides_apply():
    sc = load_scenario("bloch", {"basis": "fourier", "order": 5, "seed": 3, "t_s": 2e-4})
    assert (sc.basis, sc.order, sc.seed, sc.t_s) == ("fourier", 5, 3, 2e-4)
    sc = load_scenario("linear_2x2", {"num_perturbations": 4})
    assert len(sc.inputs) == 5
    sc = load_scenario("prc_noise", {"n_values": "2,4"})
    assert sc.n_values == (2, 4)
    sc = load_scenario("prc", {"num_perturbations": 3})
    np.testing.assert_allclose(np.array(sc.inputs)[:, 0], [0, -2 / 3, 0, 2 / 3], atol=1e-15)
    sc = load_scenario("linear_2x2", {"A": [[0, 1], [-1, 0]]})
    assert sc.system().f(np.array([1.0, 0.0]))[1] == -1.0


@pytest.mark.parametrize(
    "name,overrides",
    [
        ("nope", {}),
        ("bloch", {"colour": 1}),
        ("bloch", {"t_s": -1}),
        ("bloch", {"t_s": "fast"}),
        ("bloch", {"dt": 1e-3, "t_s": 1e-4}),
        ("bloch", {"dt": 3e-5}),
        ("bloch", {"basis": "wavelet"}),
        ("bloch", {"order": -1}),
        ("bloch", {"num_anchors": 0}),
        ("bloch", {"sampler": "grid"}),
        ("bloch", {"num_perturbations": 1}),
        ("prc_noise", {"n_values": "10,5"}),
        ("linear_2x2", {"A": [[1, 2, 3]]}),
        ("linear_2x2", {"inputs": [[1.0], [2.0]]}),
        ("linear_2x2", {"inputs": [[1.0, 2.0]]}),
        ("prc", {"oracle_derivatives": "maybe"}),
        ("prc", {"seed": 2**65}),
    ],
)
def test_invalid_overrides(name, overrides):
    with pytest.raises(ConfigError):
        load_scenario(name, overrides)


def test_scenarios_are_immutable():
    sc = load_scenario("bloch")
    with pytest.raises(dataclasses.FrozenInstanceError):
        sc.t_s = 1.0


def test_checksum_is_stable_and_sensitive():
    a = load_scenario("prc").checksum()
    assert a == load_scenario("prc").checksum()
    assert len(a) == 64
    assert a != load_scenario("prc", {"seed": 1}).checksum()
    assert load_scenario("prc", {"seed": 0}).checksum() == a


def test_overrides_round_trip():
    for name in SCENARIO_NAMES:
        sc = load_scenario(name, {"seed": 9})
        again = load_scenario(name, sc.overrides())
        assert again == sc
        assert again.checksum() == sc.checksum()
