import pytest

from hebbmem.config import LONGMEMEVAL, ConfigError, EngineConfig, validate_config, with_ablation


def test_defaults_are_valid():
    cfg = EngineConfig()
    assert validate_config(cfg) == []
    assert (cfg.eta, cfg.lambda_retention, cfg.beta, cfg.theta_spread) == (0.02, 0.995, 0.1, 0.6)
    assert (cfg.tau_days, cfg.k_episodic, cfg.k_semantic, cfg.m_flip, cfg.alpha_keyword) == (60.0, 10, 5, 3, 0.7)


def test_longmemeval_preset():
    assert (LONGMEMEVAL.k_episodic, LONGMEMEVAL.k_semantic, LONGMEMEVAL.theta_spread) == (15, 5, 0.4)
    assert (LONGMEMEVAL.alpha_keyword, LONGMEMEVAL.m_flip, LONGMEMEVAL.eta) == (0.7, 3, 0.02)


@pytest.mark.parametrize(
    "changes, message",
    [
        ({"eta": 0}, "eta must be positive"),
        ({"lambda_retention": 1.2}, "retention outside [0,1]"),
        ({"lambda_retention": -0.1}, "retention outside [0,1]"),
        ({"beta": -1}, "beta must be nonnegative"),
        ({"tau_days": 0}, "tau_days must be positive"),
        ({"k_episodic": 0}, "k_episodic must be at least 1"),
        ({"m_flip": -1}, "m_flip must be nonnegative"),
        ({"delta_prune": -0.5}, "delta_prune must be nonnegative"),
    ],
)
def test_violations_reported(changes, message):
    cfg = EngineConfig(**changes)
    assert message in validate_config(cfg)
    with pytest.raises(ConfigError) as err:
        cfg.validated()
    assert message in err.value.violations


def test_every_violation_listed():
    problems = validate_config(EngineConfig(eta=0, lambda_retention=2, tau_days=-1))
    assert len(problems) == 3


def test_dict_round_trip():
    cfg = EngineConfig(k_episodic=7, recency_window_days=45.0)
    assert EngineConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        EngineConfig.from_dict({"bogus": 1})


def test_ablation_overrides():
    assert with_ablation(EngineConfig(), "no-spreading").enable_spreading is False
    assert with_ablation(EngineConfig(), "no-reflective").enable_reflective is False
    assert with_ablation(EngineConfig(), "no-forgetting").enable_forgetting is False
    assert with_ablation(EngineConfig(), "full") == EngineConfig()
    with pytest.raises(ConfigError):
        with_ablation(EngineConfig(), "no-such-thing")


def test_derived_thresholds():
    cfg = EngineConfig()
    assert cfg.recency_window == cfg.delta_age_days
    assert cfg.cluster_floor == cfg.eta
