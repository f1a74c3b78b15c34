"""
Downstream evaluation
^^^^^^^^^^^^^^^^^^^^^

Judges a collected dataset by how well a world model trained only on it can reach goal images.

A fresh world model is trained offline on the dataset for a fixed number of updates. Each trial
then resets the task's environment and repeats ``downstream_rounds`` times: encode the current
frame, plan towards the goal image, execute the plan. Success is decided from ground truth after
the trial.
"""
import logging
import typing

import numpy as np

from ..agent import planner as planning
from ..agent.world_model import HorizonSchedule, WorldModel
from ..models import ACTION_DIM
from ..models.config import PlanConfig
from ..models.episode import Dataset
from ..sim.render import render
from ..sim.tabletop import TabletopEnv
from ..sim.tasks import DownstreamTask, get_task
from ..utils.base import ExtensionBase
from ..utils.buffer import ReplayBuffer
from ..utils.errors import UsageError

#: Maps (current latent, goal frame, world model, settings, rng) to actions or a goal plan
Planner = typing.Callable[..., typing.Any]


class DownstreamResult(typing.NamedTuple):
    task: str
    successes: typing.Tuple[bool, ...]

    @property
    def trials(self) -> int:
        return len(self.successes)

    @property
    def success_rate(self) -> float:
        return float(np.mean(self.successes)) if self.successes else 0.0


def _plan_goal(z0, goal, world_model, cfg, rng):
    return planning.plan_goal(z0, goal, world_model, cfg, rng)


class Downstream(ExtensionBase):
    """
    Downstream evaluation of a :py:class:`~beetiny.bee.Bee` experiment
    """
    def train_model(self, dataset: Dataset, updates: typing.Optional[int] = None) -> WorldModel:
        """
        Train a fresh world model on ``dataset`` only
        """
        config = self.bee.config
        count = len(dataset.episodes)
        if not count:
            raise UsageError("Cannot train on an empty dataset")
        updates = config.downstream_updates if updates is None else updates
        buffer = ReplayBuffer.from_dataset(dataset)
        image_size = dataset.episodes[0].frames.shape[-1]
        world_model = WorldModel(config.model, image_size, self.bee.rng("downstream", "model"),
                                 schedule=HorizonSchedule(config.horizon_schedule))
        logger = logging.getLogger("beetiny.downstream")
        for update in range(updates):
            stats = world_model.train_step(buffer, None, count,
                                           self.bee.rng("downstream", "update", update),
                                           batch_size=config.batch_size, window=count,
                                           crop_pad=config.crop_pad)
            if logger.isEnabledFor(logging.DEBUG) and update % 500 == 0:
                logger.debug("Offline update %d/%d: vae %.5f dynamics %.5f", update, updates,
                             stats.vae_loss, stats.dyn_loss)
        return world_model

    # pylint: disable=too-many-arguments,too-many-locals
    def run_eval(self, dataset: Dataset, task: typing.Union[str, DownstreamTask],
                 trials: typing.Optional[int] = None, planner: typing.Optional[Planner] = None,
                 model: typing.Optional[WorldModel] = None,
                 plan_config: typing.Optional[PlanConfig] = None) -> DownstreamResult:
        """
        Success rate of goal reaching with a model trained on ``dataset``

        :param dataset: Collected episodes
        :param task: Task or task name
        :param trials: Number of trials; defaults to ``config.downstream_trials``
        :param planner: Replacement of :py:func:`~beetiny.agent.planner.plan_goal`; may return a
                        goal plan or a bare action array
        :param model: Already trained world model; skips offline training
        :param plan_config: Planner settings; defaults to ``config.goal_plan``
        """
        config = self.bee.config
        task = get_task(task) if isinstance(task, str) else task
        trials = config.downstream_trials if trials is None else trials
        planner = planner or _plan_goal
        plan_config = plan_config or config.goal_plan
        logger = logging.getLogger("beetiny.downstream")

        world_model = model if model is not None else self.train_model(dataset)
        overrides = {key: value for key, value in (config.layout_overrides or {}).items()
                     if key in ("horizon", "image_size", "max_step")}
        layout = task.layout(overrides)
        env = TabletopEnv(layout)
        initial = layout.initial_state()
        goal = render(task.goal_state(initial), layout.image_size)

        successes = []
        for trial in range(trials):
            observation = env.reset()
            for round_index in range(config.downstream_rounds):
                remaining = env.horizon - env.state.time
                if remaining <= 0:
                    break
                z0 = world_model.encode_mean(observation.frame)
                result = planner(z0, goal, world_model, plan_config,
                                 self.bee.rng("downstream", "trial", trial, round_index))
                actions = np.asarray(getattr(result, "actions", result), dtype=np.float64)
                steps = min(plan_config.horizon, remaining)
                for action in actions.reshape((-1, ACTION_DIM))[:steps]:
                    observation = env.step(action)
            successes.append(task.is_success(initial, env.state))
            logger.info("Trial %d/%d of %s: %s", trial + 1, trials, task.name,
                        "success" if successes[-1] else "failure")

        result = DownstreamResult(task.name, tuple(successes))
        logger.info("%s success rate: %.3f over %d trials", task.name, result.success_rate,
                    result.trials)
        return result
