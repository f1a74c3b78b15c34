"""
Models for experiment configuration
^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^

All settings of a run live in an :py:class:`ExperimentConfig`. The configuration is immutable,
serializable and identified by :py:func:`config_hash`, which is recorded in every artifact the run
writes.
"""
# pylint: disable=missing-class-docstring
import enum
from hashlib import sha256
import json
import typing

from ..utils.errors import ConfigError


class Method(enum.Enum):
    """
    Exploration methods
    """
    BEE = "bee"
    DISAGREEMENT = "disagreement"
    SMM = "smm"
    RANDOM = "random"


class RewardMode(enum.Enum):
    """
    Aggregation of the relevance ensemble's member scores into one reward
    """
    MAX = "max"
    MEAN_PLUS_VARIANCE = "mean_plus_variance"
    SINGLE = "single"


class ModelConfig(typing.NamedTuple):
    latent_dim: int = 32
    encoder_hidden: typing.Tuple[int, ...] = (128,)
    decoder_hidden: typing.Tuple[int, ...] = (128,)
    dynamics_hidden: int = 64
    dynamics_head_hidden: typing.Tuple[int, ...] = (64,)
    discriminator_hidden: typing.Tuple[int, ...] = (64, 32)
    ensemble_size: int = 3
    disagreement_heads: int = 5
    smm_hidden: typing.Tuple[int, ...] = (32,)
    smm_latent_dim: int = 16
    lr: float = 1e-3
    beta: float = 1e-3
    smm_beta: float = 0.5
    power_iterations: int = 1
    mixup_alpha: float = 1.0
    discriminator_batch: int = 16

    def validate(self) -> "ModelConfig":
        for field in ("latent_dim", "dynamics_hidden", "ensemble_size", "disagreement_heads",
                      "smm_latent_dim", "power_iterations", "discriminator_batch"):
            if getattr(self, field) < 1:
                raise ConfigError(f"model.{field} must be positive")
        if self.lr <= 0 or self.mixup_alpha <= 0:
            raise ConfigError("model.lr and model.mixup_alpha must be positive")
        if self.beta < 0 or self.smm_beta < 0:
            raise ConfigError("KL weights must not be negative")
        return self


class PlanConfig(typing.NamedTuple):
    """
    Settings of the sampling based planner

    The defaults are those of exploration time planning; see :py:data:`GOAL_PLAN_DEFAULTS` for the
    settings used when planning towards goal images.
    """
    num_samples: int = 1000
    horizon: int = 10
    cem_iterations: int = 1
    elite_count: int = 40
    top_k_choice: int = 5
    epsilon_random: float = 0.1
    action_sample_std: float = 0.5
    workers: int = 1

    def validate(self) -> "PlanConfig":
        if self.num_samples < 1:
            raise ConfigError("Planner needs at least one sample (num_samples >= 1)")
        if self.horizon < 1 or self.cem_iterations < 1 or self.workers < 1:
            raise ConfigError("horizon, cem_iterations and workers must be positive")
        if not 1 <= self.elite_count <= self.num_samples:
            raise ConfigError(f"elite_count must be within [1, {self.num_samples}]")
        if not 1 <= self.top_k_choice <= self.num_samples:
            raise ConfigError(f"top_k_choice must be within [1, {self.num_samples}]")
        if not 0.0 <= self.epsilon_random <= 1.0:
            raise ConfigError("epsilon_random must be within [0, 1]")
        if self.action_sample_std <= 0:
            raise ConfigError("action_sample_std must be positive")
        return self


#: Planner settings for reaching goal images
GOAL_PLAN_DEFAULTS = PlanConfig(num_samples=200, horizon=10, cem_iterations=2, elite_count=40,
                                top_k_choice=1, epsilon_random=0.0)

#: Episode count from which a dynamics training horizon applies
HORIZON_SCHEDULE_DEFAULTS = ((0, 2), (50, 4), (150, 8), (300, 10))


class ExperimentConfig(typing.NamedTuple):
    name: str = "bee"
    layout: str = "blocks"
    layout_overrides: typing.Optional[typing.Mapping[str, typing.Any]] = None
    method: str = Method.BEE.value
    seed: int = 0
    episodes: int = 500
    warmup_episodes: int = 20
    num_examples: int = 100
    updates_per_episode: int = 20
    batch_size: int = 32
    replay_window: int = 500
    crop_pad: int = 2
    balanced_examples: bool = True
    reward_mode: str = RewardMode.MAX.value
    horizon_schedule: typing.Tuple[typing.Tuple[int, int], ...] = HORIZON_SCHEDULE_DEFAULTS
    metrics_window: int = 100
    model: ModelConfig = ModelConfig()
    plan: PlanConfig = PlanConfig()
    goal_plan: PlanConfig = GOAL_PLAN_DEFAULTS
    downstream_updates: int = 5000
    downstream_trials: int = 100
    downstream_rounds: int = 5

    @property
    def method_enum(self) -> Method:
        return Method(self.method)

    @property
    def reward_mode_enum(self) -> RewardMode:
        return RewardMode(self.reward_mode)

    def validate(self) -> "ExperimentConfig":
        """
        Check value ranges and cross-field constraints

        :return: The config itself
        :raises ConfigError: if any setting is invalid
        """
        try:
            Method(self.method)
            RewardMode(self.reward_mode)
        except ValueError as error:
            raise ConfigError(str(error)) from error

        for field in ("episodes", "num_examples", "updates_per_episode", "batch_size",
                      "replay_window", "metrics_window", "downstream_trials",
                      "downstream_rounds"):
            if getattr(self, field) < 1:
                raise ConfigError(f"{field} must be positive")
        for field in ("warmup_episodes", "crop_pad", "downstream_updates"):
            if getattr(self, field) < 0:
                raise ConfigError(f"{field} must not be negative")

        starts = [start for start, _ in self.horizon_schedule]
        horizons = [horizon for _, horizon in self.horizon_schedule]
        if not starts or starts[0] != 0 or starts != sorted(set(starts)):
            raise ConfigError("horizon_schedule must start at episode 0 with increasing starts")
        if horizons != sorted(horizons) or horizons[0] < 1:
            raise ConfigError("horizon_schedule horizons must be positive and non-decreasing")

        self.model.validate()
        self.plan.validate()
        self.goal_plan.validate()
        return self

    def asdict(self) -> typing.Dict[str, typing.Any]:
        """
        Canonical, JSON serializable representation
        """
        data = self._asdict()
        data["layout_overrides"] = dict(self.layout_overrides or {})
        data["horizon_schedule"] = [list(item) for item in self.horizon_schedule]
        for key in ("model", "plan", "goal_plan"):
            data[key] = {name: list(value) if isinstance(value, tuple) else value
                         for name, value in getattr(self, key)._asdict().items()}
        return data

    @classmethod
    def from_dict(cls, data: typing.Optional[typing.Mapping[str, typing.Any]]) \
            -> "ExperimentConfig":
        """
        Build a config from plain data, e.g. a parsed YAML or JSON document

        Missing keys take their default values.

        :raises ConfigError: on unknown keys or wrong value types
        """
        data = dict(data or {})
        _check_keys("config", data, cls._fields)

        kwargs = {}
        for key, value in data.items():
            if key == "model":
                kwargs[key] = _nested(ModelConfig, ModelConfig(), value, "model")
            elif key in ("plan", "goal_plan"):
                default = PlanConfig() if key == "plan" else GOAL_PLAN_DEFAULTS
                kwargs[key] = _nested(PlanConfig, default, value, key)
            elif key == "horizon_schedule":
                try:
                    kwargs[key] = tuple((int(start), int(horizon)) for start, horizon in value)
                except (TypeError, ValueError) as error:
                    raise ConfigError("horizon_schedule must be a list of pairs") from error
            elif key == "layout_overrides":
                kwargs[key] = dict(value or {})
            else:
                kwargs[key] = _coerce(key, value, cls._field_defaults[key])

        return cls(**kwargs).validate()


def _check_keys(section: str, data: typing.Mapping, allowed: typing.Iterable[str]) -> None:
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"Unknown {section} keys: {', '.join(sorted(unknown))}")


def _coerce(key: str, value: typing.Any, default: typing.Any) -> typing.Any:
    """
    Convert ``value`` to the type of the field's default
    """
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError(f"expected a boolean, got {value!r}")
            return value
        if isinstance(default, tuple):
            return tuple(int(item) for item in value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise TypeError(f"expected an integer, got {value!r}")
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, str):
            return str(value)
    except (TypeError, ValueError) as error:
        raise ConfigError(f"Invalid value for '{key}': {error}") from error
    return value


def _nested(factory: typing.Type, default: typing.NamedTuple, value: typing.Any, section: str):
    if value is None:
        return default
    if not isinstance(value, typing.Mapping):
        raise ConfigError(f"Section '{section}' must be a mapping")
    _check_keys(section, value, factory._fields)
    return default._replace(**{key: _coerce(f"{section}.{key}", item, getattr(default, key))
                               for key, item in value.items()})


def config_hash(config: ExperimentConfig) -> str:
    """
    SHA-256 hex digest of the canonical JSON form of ``config``
    """
    canonical = json.dumps(config.asdict(), sort_keys=True, separators=(",", ":"))
    return sha256(canonical.encode("utf-8")).hexdigest()
