"""
Main entry point
----------------
"""
from functools import cached_property
from pathlib import Path
import typing

import numpy as np

from .agent.world_model import HorizonSchedule, WorldModel
from .extensions.ablation import Ablation
from .extensions.datasets import Datasets
from .extensions.downstream import Downstream
from .extensions.exploration import Exploration
from .models.config import ExperimentConfig, config_hash
from .models.sim import LayoutSpec
from .nn.rng import Key, Rng
from .sim.examples import generate_relevant_examples
from .sim.layouts import get_layout
from .sim.tabletop import TabletopEnv
from .utils.conf import load_config


class Bee:
    """
    Weakly-supervised batch exploration experiment

    An instance of :py:class:`Bee` wraps one validated configuration and provides the experiment
    stages as attributes, e.g. to collect a dataset and evaluate it on a downstream task use:

    .. code-block:: python

        bee = Bee(ExperimentConfig(layout="drawer", episodes=200))
        result = bee.exploration.run(out_dir="runs/drawer")
        bee.downstream.run_eval(result.dataset, "drawer_open")

    .. list-table:: Extensions
        :header-rows: 1

        * - Extension
          - Accessible through attribute
        * - :py:class:`beetiny.extensions.exploration.Exploration`
          - :py:attr:`exploration`
        * - :py:class:`beetiny.extensions.downstream.Downstream`
          - :py:attr:`downstream`
        * - :py:class:`beetiny.extensions.ablation.Ablation`
          - :py:attr:`ablation`
        * - :py:class:`beetiny.extensions.datasets.Datasets`
          - :py:attr:`datasets`

    All randomness of an experiment derives from ``config.seed`` through :py:meth:`rng`, so a
    configuration fully determines datasets, metrics and checkpoints.

    :param config: Experiment settings; defaults to the file found by
                   :py:func:`beetiny.utils.conf.get_config_path` if ``config_path`` is given, else
                   to the built-in defaults
    :param config_path: Path of a YAML or JSON config file
    :raises beetiny.utils.errors.ConfigError: if the configuration is invalid
    """
    def __init__(self, config: typing.Optional[ExperimentConfig] = None,
                 config_path: typing.Optional[typing.Union[str, Path]] = None):
        if config is None:
            config = load_config(config_path) if config_path else ExperimentConfig()
        self.config = config.validate()

        self.exploration = Exploration(bee_obj=self)
        self.downstream = Downstream(bee_obj=self)
        self.ablation = Ablation(bee_obj=self)
        self.datasets = Datasets(bee_obj=self)

    @cached_property
    def config_hash(self) -> str:
        return config_hash(self.config)

    @property
    def run_id(self) -> str:
        return f"{self.config.name}-seed{self.config.seed}"

    @cached_property
    def layout(self) -> LayoutSpec:
        return get_layout(self.config.layout, self.config.layout_overrides)

    def rng(self, *key: Key) -> Rng:
        """
        Random stream of this experiment for a consumer identified by ``key``
        """
        return Rng(self.config.seed, key)

    def make_env(self, layout: typing.Optional[LayoutSpec] = None) -> TabletopEnv:
        return TabletopEnv(layout or self.layout)

    def make_world_model(self, *key: Key) -> WorldModel:
        return WorldModel(self.config.model, self.layout.image_size,
                          self.rng("world_model", *key),
                          schedule=HorizonSchedule(self.config.horizon_schedule))

    def relevant_examples(self) -> np.ndarray:
        """
        Frames of the relevant examples, shape ``(K, H, W)``
        """
        examples = generate_relevant_examples(self.layout, self.config.num_examples,
                                              self.rng("examples"))
        return np.stack([example.frame for example in examples])
