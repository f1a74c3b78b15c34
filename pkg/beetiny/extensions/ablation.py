"""
Ablations
^^^^^^^^^

Sweeps over one configuration key. Every (value, seed) cell is a complete exploration run in its
own directory; the comparison report is computed from the cells' metrics files alone.

Sweep specifications have the form ``key=value1,value2,...``, e.g.
``reward_mode=max,mean_plus_variance,single`` or ``latent_dim=8,16,32,64``. Keys of the model
section may be given with or without the ``model.`` prefix.
"""
from concurrent.futures import ProcessPoolExecutor
import csv
import logging
from pathlib import Path
import typing
import warnings

import numpy as np

from ..models.config import ExperimentConfig, ModelConfig, PlanConfig
from ..utils.base import ExtensionBase
from ..utils.errors import ConfigError
from ..utils.journal import JOURNAL_NAME, RunJournal
from ..utils.metrics import MetricsLog, format_value, interaction_frequency

PathLike = typing.Union[str, Path]

REPORT_COLUMNS = ("setting", "window", "mean", "stderr", "seeds", "across_window_variance")


class Sweep(typing.NamedTuple):
    key: str
    values: typing.Tuple[str, ...]

    @property
    def label(self) -> str:
        return self.key.rsplit(".", 1)[-1]


class AblationCell(typing.NamedTuple):
    setting: str
    seed: int
    config: ExperimentConfig
    out_dir: Path


class ReportRow(typing.NamedTuple):
    setting: str
    window: int
    mean: float
    stderr: float
    seeds: int
    across_window_variance: float


class AblationResult(typing.NamedTuple):
    cells: typing.Tuple[AblationCell, ...]
    report: typing.Tuple[ReportRow, ...]


def parse_sweep(spec: str) -> Sweep:
    """
    :raises ConfigError: if the specification is malformed or names an unknown key
    """
    key, sep, values = spec.partition("=")
    key = key.strip()
    values = tuple(value.strip() for value in values.split(",") if value.strip())
    if not sep or not key or not values:
        raise ConfigError(f"Sweep must look like 'key=value1,value2'. Got: {spec!r}")
    if "." not in key and key not in ExperimentConfig._fields and key in ModelConfig._fields:
        key = f"model.{key}"
    section, _, field = key.rpartition(".")
    allowed = {"": ExperimentConfig._fields, "model": ModelConfig._fields,
               "plan": PlanConfig._fields, "goal_plan": PlanConfig._fields}
    if section not in allowed or field not in allowed[section]:
        raise ConfigError(f"Cannot sweep over unknown key '{key}'")
    return Sweep(key, values)


def apply_setting(config: ExperimentConfig, sweep: Sweep, value: str, seed: int) \
        -> ExperimentConfig:
    data = config.asdict()
    section, _, field = sweep.key.rpartition(".")
    target = data[section] if section else data
    target[field] = value
    data["name"] = f"{sweep.label}={value}"
    data["seed"] = seed
    return ExperimentConfig.from_dict(data)


def _run_cell(config_data: typing.Dict[str, typing.Any], out_dir: str) -> str:
    # Module level so that process pools can pickle it
    from ..bee import Bee  # pylint: disable=import-outside-toplevel,cyclic-import
    Bee(ExperimentConfig.from_dict(config_data)).exploration.run(out_dir=out_dir)
    return out_dir


def build_report(run_dirs: typing.Iterable[PathLike], window: int = 100) \
        -> typing.List[ReportRow]:
    """
    Interaction frequency curves per setting, with mean and standard error across seeds

    Cells are grouped by the ``name`` column of their metrics. Directories without a metrics file
    are skipped with a warning.
    """
    curves: typing.Dict[str, typing.List[typing.List[float]]] = {}
    for run_dir in run_dirs:
        run_dir = Path(run_dir)
        metrics_path = run_dir.joinpath("metrics.csv")
        if not metrics_path.is_file():
            warnings.warn(f"No metrics found in {run_dir}; skipping")
            continue
        if not run_dir.joinpath(JOURNAL_NAME).is_file() \
                or not RunJournal.parse(run_dir.joinpath(JOURNAL_NAME)).entries:
            warnings.warn(f"No journal entry found in {run_dir}")
        metrics = MetricsLog.read_csv(metrics_path)
        if not len(metrics):
            warnings.warn(f"Empty metrics in {run_dir}; skipping")
            continue
        setting = metrics.rows[0]["name"]
        curves.setdefault(setting, []).append(interaction_frequency(metrics.target_moved(),
                                                                    window))

    rows = []
    for setting in sorted(curves):
        length = min(len(curve) for curve in curves[setting])
        values = np.array([curve[:length] for curve in curves[setting]])
        seeds = len(values)
        mean = values.mean(axis=0)
        if seeds > 1:
            stderr = values.std(axis=0, ddof=1) / np.sqrt(seeds)
        else:
            stderr = np.zeros(length)
        variance = float(mean.var())
        for index in range(length):
            rows.append(ReportRow(setting, index, float(mean[index]), float(stderr[index]),
                                  seeds, variance))
    return rows


def write_report(rows: typing.Iterable[ReportRow], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    return path


class Ablation(ExtensionBase):
    """
    Sweeps based on the configuration of a :py:class:`~beetiny.bee.Bee` instance
    """
    def cells(self, sweep: typing.Union[str, Sweep], seeds: typing.Sequence[int],
              out_dir: PathLike) -> typing.List[AblationCell]:
        sweep = parse_sweep(sweep) if isinstance(sweep, str) else sweep
        out_dir = Path(out_dir)
        return [
            AblationCell(f"{sweep.label}={value}", seed,
                         apply_setting(self.bee.config, sweep, value, seed),
                         out_dir.joinpath(f"{sweep.label}={value}", f"seed{seed}"))
            for value in sweep.values for seed in seeds
        ]

    def run(self, sweep: typing.Union[str, Sweep], seeds: typing.Sequence[int] = (0, 1),
            out_dir: PathLike = "ablation", workers: int = 1,
            window: typing.Optional[int] = None) -> AblationResult:
        """
        Run every cell of a sweep and build the comparison report

        Writes ``report.csv`` into ``out_dir``.

        :param sweep: Sweep or its specification string
        :param seeds: Seeds per setting
        :param out_dir: Parent directory of the cell directories
        :param workers: Number of cells run in parallel processes
        :param window: Interaction frequency window; defaults to the smaller of
                       ``metrics_window`` and ``episodes``
        """
        logger = logging.getLogger("beetiny.ablation")
        cells = self.cells(sweep, seeds, out_dir)
        jobs = [(cell.config.asdict(), str(cell.out_dir)) for cell in cells]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                futures = [executor.submit(_run_cell, *job) for job in jobs]
                for cell, future in zip(cells, futures):
                    future.result()
                    logger.info("Finished %s (seed %d)", cell.setting, cell.seed)
        else:
            for cell, job in zip(cells, jobs):
                logger.info("Starting %s (seed %d)", cell.setting, cell.seed)
                _run_cell(*job)
                logger.info("Finished %s (seed %d)", cell.setting, cell.seed)

        config = self.bee.config
        window = window or min(config.metrics_window, config.episodes)
        report = build_report([cell.out_dir for cell in cells], window)
        write_report(report, Path(out_dir).joinpath("report.csv"))
        return AblationResult(tuple(cells), tuple(report))

    @staticmethod
    def report(run_dirs: typing.Iterable[PathLike], window: int = 100,
               out: typing.Optional[PathLike] = None) -> typing.List[ReportRow]:
        rows = build_report(run_dirs, window)
        if out is not None:
            write_report(rows, out)
        return rows
