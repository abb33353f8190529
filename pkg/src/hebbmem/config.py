"""Engine configuration and validation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any


class ConfigError(ValueError):
    """Raised when an :class:`EngineConfig` fails validation."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class EngineConfig:
    """All tunables of the memory engine.

    Plasticity follows ``w <- retention * w + eta * coactive`` once per
    retrieval event, so ``retention`` is the fraction of weight *kept* per step.
    """

    # Hebbian plasticity
    eta: float = 0.02
    lambda_retention: float = 0.995
    w_initial: float = 0.1

    # retrieval
    beta: float = 0.1
    theta_spread: float = 0.6
    tau_days: float = 60.0
    alpha_keyword: float = 0.7
    k_episodic: int = 10
    k_semantic: int = 5
    m_flip: int = 3

    # lifecycle thresholds
    delta_hub: float = 5.0
    delta_prune: float = 0.05
    delta_age_days: float = 30.0
    # None means "same as delta_age_days"
    recency_window_days: float | None = None
    hub_degree_threshold: int | None = None  # diagnostic only, never gates distillation
    cooldown_steps: int = 100
    cluster_max_neighbors: int = 10
    # None means "eta": one reinforcement that has not yet decayed away
    cluster_weight_floor: float | None = None

    keyword_cap: int = 16
    # None: inferred from the first embedding the engine sees
    embedding_dim: int | None = None

    enable_spreading: bool = True
    enable_forgetting: bool = True
    enable_reflective: bool = True

    @property
    def recency_window(self) -> float:
        return self.delta_age_days if self.recency_window_days is None else self.recency_window_days

    @property
    def cluster_floor(self) -> float:
        return self.eta if self.cluster_weight_floor is None else self.cluster_weight_floor

    def replace(self, **changes: Any) -> "EngineConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EngineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError([f"unknown config field {name!r}" for name in unknown])
        return cls(**data)

    def validated(self) -> "EngineConfig":
        """Return ``self`` or raise :class:`ConfigError` listing every violation."""
        problems = validate_config(self)
        if problems:
            raise ConfigError(problems)
        return self


def validate_config(config: EngineConfig) -> list[str]:
    """Check every invariant of ``config``.

    Returns a list of human readable violations; an empty list means the
    configuration is usable.
    """
    problems: list[str] = []
    if not config.eta > 0:
        problems.append("eta must be positive")
    if not 0.0 <= config.lambda_retention <= 1.0:
        problems.append("retention outside [0,1]")
    if not config.beta >= 0:
        problems.append("beta must be nonnegative")
    if not config.tau_days > 0:
        problems.append("tau_days must be positive")
    if config.k_episodic < 1:
        problems.append("k_episodic must be at least 1")
    if config.k_semantic < 0:
        problems.append("k_semantic must be nonnegative")
    if config.m_flip < 0:
        problems.append("m_flip must be nonnegative")
    for name in (
        "theta_spread",
        "alpha_keyword",
        "delta_hub",
        "delta_prune",
        "delta_age_days",
        "w_initial",
    ):
        if not getattr(config, name) >= 0:
            problems.append(f"{name} must be nonnegative")
    for name in ("recency_window_days", "cluster_weight_floor"):
        value = getattr(config, name)
        if value is not None and not value >= 0:
            problems.append(f"{name} must be nonnegative")
    if config.hub_degree_threshold is not None and config.hub_degree_threshold < 0:
        problems.append("hub_degree_threshold must be nonnegative")
    if config.cooldown_steps < 0:
        problems.append("cooldown_steps must be nonnegative")
    if config.cluster_max_neighbors < 0:
        problems.append("cluster_max_neighbors must be nonnegative")
    if config.keyword_cap < 1:
        problems.append("keyword_cap must be at least 1")
    if config.embedding_dim is not None and config.embedding_dim < 1:
        problems.append("embedding_dim must be at least 1")
    return problems


# Settings used for the LoCoMo experiments.
LOCOMO = EngineConfig()

# Best setting reported for LongMemEval-S: top-15 episodic / top-5 semantic.
LONGMEMEVAL = EngineConfig(k_episodic=15, k_semantic=5, theta_spread=0.4, alpha_keyword=0.7, m_flip=3)

PRESETS = {"locomo": LOCOMO, "longmemeval": LONGMEMEVAL}

ABLATIONS = {
    "full": {},
    "no-forgetting": {"enable_forgetting": False},
    "no-spreading": {"enable_spreading": False},
    "no-reflective": {"enable_reflective": False},
}


def with_ablation(config: EngineConfig, name: str) -> EngineConfig:
    try:
        overrides = ABLATIONS[name]
    except KeyError:
        raise ConfigError([f"unknown ablation {name!r}; expected one of {sorted(ABLATIONS)}"]) from None
    return config.replace(**overrides)
