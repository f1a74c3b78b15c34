"""
Exploration methods
^^^^^^^^^^^^^^^^^^^

Uniform interface over the reward models an exploration run can be guided by. Every method plugs
its reward into the same planner; only the reward and its training differ.
"""
import typing

import numpy as np

from ..models.config import ExperimentConfig, Method
from ..nn.rng import Rng
from ..utils.buffer import ReplayBuffer
from .baselines import DisagreementEnsemble, SmmDensityPair
from .relevance import RelevanceEnsemble


class ExplorationMethod:
    """
    Base class

    :param config: Experiment settings
    :param rng: Stream for initialization and training of the method's models
    """
    method = None
    uses_planner = True

    def __init__(self, config: ExperimentConfig, rng: Rng):
        self.config = config
        self.rng = rng

    def reward(self, z0: np.ndarray, actions: np.ndarray, latents: np.ndarray) -> np.ndarray:
        raise NotImplementedError()

    def state_reward(self, latents: np.ndarray) -> typing.Optional[np.ndarray]:
        """
        Per-state reward of visited latents, if the method has one
        """
        return None

    # pylint: disable=unused-argument,too-many-arguments
    def train_step(self, buffer: ReplayBuffer, examples: np.ndarray, world_model,
                   episode_index: int, rng: Rng) -> None:
        """
        Called together with every world model update
        """

    def end_of_episode(self, buffer: ReplayBuffer, examples: np.ndarray, world_model,
                       rng: Rng) -> None:
        """
        Called once after the world model updates of an episode
        """

    def named_arrays(self) -> typing.Dict[str, np.ndarray]:
        return {}


class BeeMethod(ExplorationMethod):
    """
    Relevance ensemble reward
    """
    method = Method.BEE

    def __init__(self, config: ExperimentConfig, rng: Rng):
        super().__init__(config, rng)
        self.ensemble = RelevanceEnsemble(config.model, rng.child("relevance"),
                                          mode=config.reward_mode_enum)

    def reward(self, z0, actions, latents):
        return self.ensemble(z0, actions, latents)

    def state_reward(self, latents):
        return self.ensemble.r_exp(latents)

    def end_of_episode(self, buffer, examples, world_model, rng):
        self.ensemble.train_members(buffer, examples, world_model, crop_pad=self.config.crop_pad,
                                    window=self.config.replay_window)

    def named_arrays(self):
        return self.ensemble.named_arrays()


class DisagreementMethod(ExplorationMethod):
    """
    Variance of an ensemble of dynamics heads
    """
    method = Method.DISAGREEMENT

    def __init__(self, config: ExperimentConfig, rng: Rng):
        super().__init__(config, rng)
        self.ensemble = DisagreementEnsemble(config.model, rng.child("disagreement"))

    def reward(self, z0, actions, latents):
        return self.ensemble(z0, actions, latents)

    def train_step(self, buffer, examples, world_model, episode_index, rng):
        horizon = min(world_model.schedule(episode_index), buffer[-1].length)
        self.ensemble.train(buffer, world_model, horizon, batch_size=self.config.batch_size,
                            window=self.config.replay_window)

    def named_arrays(self):
        return self.ensemble.named_arrays()


class SmmMethod(ExplorationMethod):
    """
    State marginal matching against the relevant examples
    """
    method = Method.SMM

    def __init__(self, config: ExperimentConfig, rng: Rng):
        super().__init__(config, rng)
        self.densities = SmmDensityPair.build(config.model, rng.child("smm"))

    def reward(self, z0, actions, latents):
        return self.densities(z0, actions, latents)

    def state_reward(self, latents):
        return self.densities.smm_reward(latents)

    def train_step(self, buffer, examples, world_model, episode_index, rng):
        batch = self.config.batch_size
        pick = rng.child("smm-examples").integers(0, len(examples), size=batch)
        relevant = world_model.encode_mean(examples[pick])
        visited = world_model.encode_mean(
            buffer.sample_frames(batch, rng.child("smm-visited"), self.config.replay_window))
        self.densities.train(relevant, visited, rng.child("smm-noise"))

    def named_arrays(self):
        return self.densities.named_arrays()


class RandomMethod(ExplorationMethod):
    """
    Uniformly random actions; the world model is still trained
    """
    method = Method.RANDOM
    uses_planner = False

    def reward(self, z0, actions, latents):
        return np.zeros(len(latents))


METHODS = {cls.method: cls for cls in (BeeMethod, DisagreementMethod, SmmMethod, RandomMethod)}


def build_method(config: ExperimentConfig, rng: Rng) -> ExplorationMethod:
    return METHODS[config.method_enum](config, rng)
