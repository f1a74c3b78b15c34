"""
Metrics log
^^^^^^^^^^^

One row per completed episode, written as CSV. Columns:

``episode``, ``name``, ``method``, ``seed``, ``config_hash``
    Run identification
``target_moved``, ``target_displacement``
    Whether any target object moved beyond its threshold, and the largest target displacement
``disp_<object>``, ``moved_<object>``
    Per-object maximum displacement and moved flag
``mean_reward``
    Mean per-state reward of the method on the visited frames (empty for methods without one)
``vae_loss``, ``kl``, ``dyn_loss``
    Mean world model losses of the episode's updates
``top_score``
    Mean score of the selected plans (empty for episodes without planning)

Flags are written as ``0``/``1``, reals with ten significant digits.
"""
import csv
from pathlib import Path
import typing

import numpy as np

from .errors import UsageError

BASE_COLUMNS = ("episode", "name", "method", "seed", "config_hash", "target_moved",
                "target_displacement")
TAIL_COLUMNS = ("mean_reward", "vae_loss", "kl", "dyn_loss", "top_score")


def format_value(value: typing.Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    return str(value)


def interaction_frequency(flags: typing.Sequence[bool], window: int = 100) -> typing.List[float]:
    """
    Fraction of episodes with a moved target per consecutive window

    Windows do not overlap; a trailing partial window is ignored.

    :raises UsageError: if there are fewer episodes than ``window``
    """
    if window < 1:
        raise UsageError("window must be positive")
    if len(flags) < window:
        raise UsageError(f"Need at least {window} episodes, got {len(flags)}")
    flags = np.asarray(flags, dtype=bool)
    return [float(flags[start:start + window].mean())
            for start in range(0, len(flags) - window + 1, window)]


class MetricsLog:
    """
    :param object_names: Names of all objects in the layout, in layout order
    """
    def __init__(self, object_names: typing.Sequence[str]):
        self.object_names = tuple(object_names)
        self.rows: typing.List[typing.Dict[str, typing.Any]] = []

    @property
    def columns(self) -> typing.Tuple[str, ...]:
        per_object = []
        for name in self.object_names:
            per_object += [f"disp_{name}", f"moved_{name}"]
        return BASE_COLUMNS + tuple(per_object) + TAIL_COLUMNS

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, row: typing.Mapping[str, typing.Any]) -> None:
        missing = set(self.columns) - set(row)
        if missing:
            raise UsageError(f"Metrics row lacks columns: {', '.join(sorted(missing))}")
        self.rows.append(dict(row))

    def column(self, name: str) -> typing.List[typing.Any]:
        return [row[name] for row in self.rows]

    def target_moved(self) -> typing.List[bool]:
        return [bool(int(value)) if isinstance(value, str) else bool(value)
                for value in self.column("target_moved")]

    def interaction_frequency(self, window: int = 100) -> typing.List[float]:
        return interaction_frequency(self.target_moved(), window)

    def write_csv(self, path: typing.Union[str, Path]) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([format_value(row[column]) for column in self.columns])
        return path

    @classmethod
    def read_csv(cls, path: typing.Union[str, Path]) -> "MetricsLog":
        """
        Read a metrics file; values stay strings
        """
        with Path(path).open("r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            names = [column[len("disp_"):] for column in reader.fieldnames or ()
                     if column.startswith("disp_")]
            log = cls(names)
            for row in reader:
                log.rows.append(row)
        return log
