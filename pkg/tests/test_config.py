import os

import pytest

from core.config import DetectiveConfig, load_config, parse_overrides
from core.error_handler import ConfigError

CONF = os.path.join(os.path.dirname(os.path.dirname(__file__)), "config", "detective.conf")


def test_shipped_config_equals_defaults():
    assert load_config(CONF) == DetectiveConfig()


def test_defaults_match_hyperparameter_table():
    cfg = DetectiveConfig()
    assert (cfg.graph.alpha, cfg.graph.tau, cfg.graph.top_k) == (0.6, 30.0, 8)
    assert (cfg.segmenter.theta_sim, cfg.segmenter.l_min) == (0.82, 10)
    assert (cfg.diffusion.beta, cfg.diffusion.t_prop) == (0.6, 7)
    assert (cfg.loop.base_budget, cfg.loop.window_frames) == (10, 9)
    assert (cfg.selection.m, cfg.selection.n_f, cfg.selection.eta) == (8, 4, 0.2)
    assert cfg.scoring.source_weights() == {"ocr": 0.7, "asr": 0.5, "caption": 0.3}
    assert (cfg.providers.max_attempts, cfg.providers.observer_timeout) == (5, 300.0)


def test_overrides_apply_on_top_of_file():
    cfg = load_config(CONF, ["loop.base_budget=3", "graph.top_k = 4"])
    assert cfg.loop.base_budget == 3
    assert cfg.graph.top_k == 4
    assert cfg.selection.m == 8


def test_zero_budget_is_rejected():
    with pytest.raises(ConfigError):
        load_config(overrides=["loop.base_budget=0"])


@pytest.mark.parametrize("override", ["loop.nonsense=1", "bogus.key=1", "nodot=1"])
def test_unknown_keys_are_rejected(override):
    with pytest.raises(ConfigError):
        load_config(overrides=[override])


def test_out_of_range_values_are_rejected():
    with pytest.raises(ConfigError):
        load_config(overrides=["selection.eta=1.5"])


def test_malformed_override_and_missing_file():
    with pytest.raises(ConfigError):
        parse_overrides(["loop.base_budget"])
    with pytest.raises(ConfigError):
        load_config("/definitely/not/here.conf")


def test_config_file_values_are_read(tmp_path):
    path = tmp_path / "small.conf"
    path.write_text("# tiny\ndiffusion.beta = 0.5\nproviders.cache_enabled = false\n", encoding="utf-8")
    cfg = load_config(str(path))
    assert cfg.diffusion.beta == 0.5
    assert cfg.providers.cache_enabled is False
