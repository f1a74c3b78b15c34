"""
Batch exploration
^^^^^^^^^^^^^^^^^

The data collection loop: act for one episode (randomly during warmup, then with the planner
guided by the method's reward), append the episode to the replay buffer, train the world model and
the method's models, record ground-truth metrics.

Output directory content after :py:meth:`Exploration.run`:

* ``dataset.bin``: collected episodes, see :py:mod:`beetiny.extensions.datasets`
* ``metrics.csv``: one row per episode, see :py:mod:`beetiny.utils.metrics`
* ``world_model.ckpt`` and ``method.ckpt``: final parameters
* ``config.json``: the canonical configuration
* ``runs.changes``: journal entry of the run
* ``diagnostic.ckpt``: only written when training hits a non-finite value
"""
import logging
from pathlib import Path
import typing

import numpy as np

from ..agent import planner
from ..agent.methods import ExplorationMethod, build_method
from ..agent.world_model import TrainStats, WorldModel
from ..models.episode import Dataset, Episode
from ..nn.params import save_checkpoint
from ..sim.metrics import interaction_report
from ..utils.base import ExtensionBase
from ..utils.buffer import ReplayBuffer
from ..utils.conf import dump_config
from ..utils.errors import NonFiniteError
from ..utils.journal import JOURNAL_NAME, Entry, RunJournal
from ..utils.metrics import MetricsLog, format_value
from .datasets import save_dataset


class ExplorationResult(typing.NamedTuple):
    dataset: Dataset
    metrics: MetricsLog
    world_model: WorldModel
    method: ExplorationMethod
    out_dir: typing.Optional[Path] = None


def _mean(values: typing.Sequence[float]) -> typing.Optional[float]:
    return float(np.mean(values)) if len(values) else None


class Exploration(ExtensionBase):
    """
    Runs the exploration stage of a :py:class:`~beetiny.bee.Bee` experiment
    """
    def collect_episode(self, env, world_model: WorldModel, method: ExplorationMethod,
                        index: int) -> Episode:
        config = self.bee.config
        rng = self.bee.rng("episode", index, "act")
        if method.uses_planner and index >= config.warmup_episodes:
            return planner.act_episode(env, world_model, method.reward, config.plan, rng)
        return planner.random_episode(env, rng)

    # pylint: disable=too-many-arguments
    def train(self, buffer: ReplayBuffer, examples: np.ndarray, world_model: WorldModel,
              method: ExplorationMethod, index: int) -> typing.List[TrainStats]:
        """
        All model updates that follow the collection of episode ``index``
        """
        config = self.bee.config
        stats = []
        for update in range(config.updates_per_episode):
            rng = self.bee.rng("episode", index, "update", update)
            stats.append(world_model.train_step(
                buffer, examples if config.balanced_examples else None, index, rng,
                batch_size=config.batch_size, window=config.replay_window,
                crop_pad=config.crop_pad))
            method.train_step(buffer, examples, world_model, index, rng.child("method"))
        method.end_of_episode(buffer, examples, world_model, self.bee.rng("episode", index, "end"))
        return stats

    # pylint: disable=too-many-arguments
    def metrics_row(self, index: int, episode: Episode, stats: typing.Sequence[TrainStats],
                    world_model: WorldModel, method: ExplorationMethod) \
            -> typing.Dict[str, typing.Any]:
        config = self.bee.config
        report = interaction_report(episode.states, self.bee.layout.target_ids)
        state_reward = method.state_reward(world_model.encode_mean(episode.frames))
        row = {
            "episode": index,
            "name": config.name,
            "method": config.method,
            "seed": config.seed,
            "config_hash": self.bee.config_hash,
            "target_moved": report.target_moved,
            "target_displacement": report.target_displacement,
            "mean_reward": None if state_reward is None else float(np.mean(state_reward)),
            "vae_loss": _mean([item.vae_loss for item in stats]),
            "kl": _mean([item.kl for item in stats]),
            "dyn_loss": _mean([item.dyn_loss for item in stats]),
            "top_score": _mean(episode.plan_scores),
        }
        for name, value in report.displacement.items():
            row[f"disp_{name}"] = value
            row[f"moved_{name}"] = report.moved[name]
        return row

    def run(self, out_dir: typing.Optional[typing.Union[str, Path]] = None) -> ExplorationResult:
        """
        Collect ``config.episodes`` episodes

        :param out_dir: Directory for the artifacts; nothing is written if omitted
        :return: Dataset (without ground truth), metrics and the trained models
        :raises NonFiniteError: if any loss or gradient becomes non-finite; with ``out_dir`` a
                                ``diagnostic.ckpt`` is written first
        """
        config = self.bee.config
        logger = logging.getLogger("beetiny.explore")
        out_dir = Path(out_dir) if out_dir is not None else None
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)

        env = self.bee.make_env()
        examples = self.bee.relevant_examples()
        world_model = self.bee.make_world_model()
        method = build_method(config, self.bee.rng("method"))
        buffer = ReplayBuffer()
        metrics = MetricsLog([obj.name for obj in self.bee.layout.objects])

        logger.info("Exploring %s with %s for %d episodes (seed %d, config %s)", config.layout,
                    config.method, config.episodes, config.seed, self.bee.config_hash[:12])
        try:
            for index in range(config.episodes):
                episode = self.collect_episode(env, world_model, method, index)
                buffer.append(episode)
                stats = self.train(buffer, examples, world_model, method, index)
                metrics.append(self.metrics_row(index, episode, stats, world_model, method))
                if logger.isEnabledFor(logging.INFO):
                    row = metrics.rows[-1]
                    logger.info("Episode %d/%d: target moved %s (%s), vae %s, dynamics %s",
                                index + 1, config.episodes, row["target_moved"],
                                format_value(row["target_displacement"]),
                                format_value(row["vae_loss"]), format_value(row["dyn_loss"]))
        except NonFiniteError as error:
            logger.error("Aborting run %s: %s", self.bee.run_id, error)
            if out_dir is not None:
                arrays = dict(world_model.named_arrays())
                arrays.update(method.named_arrays())
                save_checkpoint(out_dir.joinpath("diagnostic.ckpt"), arrays)
            raise

        dataset = Dataset(tuple(episode.without_truth() for episode in buffer.episodes),
                          self.bee.config_hash)
        if out_dir is not None:
            self.write_artifacts(out_dir, dataset, metrics, world_model, method)
        return ExplorationResult(dataset, metrics, world_model, method, out_dir)

    # pylint: disable=too-many-arguments
    def write_artifacts(self, out_dir: Path, dataset: Dataset, metrics: MetricsLog,
                        world_model: WorldModel, method: ExplorationMethod) -> None:
        config = self.bee.config
        save_dataset(dataset, out_dir.joinpath("dataset.bin"))
        metrics.write_csv(out_dir.joinpath("metrics.csv"))
        save_checkpoint(out_dir.joinpath("world_model.ckpt"), world_model.named_arrays())
        method_arrays = method.named_arrays()
        if method_arrays:
            save_checkpoint(out_dir.joinpath("method.ckpt"), method_arrays)
        dump_config(config, out_dir.joinpath("config.json"))

        window = min(config.metrics_window, len(metrics))
        frequency = metrics.interaction_frequency(window)[-1] if window else None
        content = "\n".join([
            f"method: {config.method}",
            f"layout: {config.layout}",
            f"seed: {config.seed}",
            f"config_hash: {self.bee.config_hash}",
            f"episodes: {len(dataset.episodes)}",
            f"transitions: {dataset.transitions}",
            f"final_interaction_frequency: {format_value(frequency)}",
        ])
        RunJournal.append(out_dir.joinpath(JOURNAL_NAME), Entry(self.bee.run_id, content))
