import math

import pytest

from applearm.config import load_config
from applearm.errors import ConfigError
from applearm.plant import PlantModel


def write(tmp_path, text):
    path = tmp_path / "run.yaml"
    path.write_text(text)
    return path


def test_defaults():
    rt = load_config()
    assert rt.config.seed == 0
    assert rt.plant == PlantModel.perturbed()
    assert rt.limits.phi == pytest.approx((-math.radians(25), math.radians(25)))
    assert rt.budget.approach == 2.0


def test_yaml_sections_and_overrides(tmp_path):
    path = write(
        tmp_path,
        "seed: 7\nplant:\n  preset: ideal\n  gain_bias_phi: 1.1\ngains:\n  k1: 3\nsimulation:\n  dt: 0.002\n",
    )
    rt = load_config(path, seed=11, out_dir=None)
    assert rt.config.seed == 11
    assert rt.plant.encoder_counts_per_rev == 0 and rt.plant.gain_bias_phi == 1.1
    assert rt.gains.k1 == 3.0
    assert rt.settings.dt == 0.002


@pytest.mark.parametrize(
    "text",
    [
        "sede: 1\n",
        "gains:\n  k3: 1\n",
        "plant:\n  preset: wobbly\n",
        "gains:\n  k1: -2\n",
        "plant:\n  gain_bias_theta: 0\n",
        "simulation:\n  dt: 0\n",
        "links:\n  d3: 0\n",
        "camera:\n  extrinsics:\n    rotation: [[1,0,0],[0,1,0],[0,0,-1]]\n",
        "limits:\n  phi_deg: [10, -10]\n",
        "- a\n- b\n",
        "seed: [unclosed\n",
    ],
)
def test_invalid_config_rejected(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")
