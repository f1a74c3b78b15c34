"""
Configuration utilities
^^^^^^^^^^^^^^^^^^^^^^^

This module reads and writes experiment configurations. Config files are YAML documents; since
JSON is a subset of YAML, JSON config files are accepted as well.
"""
import json
import os
from pathlib import Path
import typing

from yaml import load, YAMLError

from ..models.config import ExperimentConfig
from .errors import ConfigError

try:
    from yaml import CSafeLoader as SafeLoader
except ImportError:
    # If libyaml is not installed, we fall back to the pure Python loader
    from yaml import SafeLoader


PathLike = typing.Union[str, Path]


def get_config_path() -> Path:
    """
    Return path of the default experiment configuration file

    Candidates in order: ``$BEE_CONFIG``, ``./bee.yaml``,
    ``$XDG_CONFIG_HOME/bee-tiny/config.yaml``.

    :return: Path
    :raises FileNotFoundError: if no config file found
    """
    env_path = os.environ.get("BEE_CONFIG", None)
    conf_path = os.environ.get("XDG_CONFIG_HOME", "~/.config")
    if env_path:
        path = Path(env_path)
        if path.is_file():
            return path

    for path in (Path.cwd().joinpath("bee.yaml"),
                 Path(conf_path).joinpath("bee-tiny/config.yaml").expanduser()):
        if path.is_file():
            return path

    raise FileNotFoundError("No `bee-tiny` configuration file found")


def parse_config(text: str) -> ExperimentConfig:
    """
    Parse a YAML or JSON document into a validated config

    :raises ConfigError: if the document is malformed or contains invalid settings
    """
    try:
        data = load(text, Loader=SafeLoader)
    except YAMLError as error:
        raise ConfigError(f"Cannot parse config: {error}") from error

    if data is not None and not isinstance(data, dict):
        raise ConfigError("Config document must be a mapping")

    return ExperimentConfig.from_dict(data)


def load_config(path: typing.Optional[PathLike] = None) -> ExperimentConfig:
    """
    Load a config file

    :param path: Path to YAML or JSON file. If not specified, :py:func:`get_config_path` is used.
    :return: Validated config
    :raises FileNotFoundError: if no config file found
    :raises ConfigError: if the file contains invalid settings
    """
    path = Path(path) if path is not None else get_config_path()
    with path.open("r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def dump_config(config: ExperimentConfig, path: PathLike) -> Path:
    """
    Write ``config`` as canonical JSON (which any YAML loader reads back)
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        json.dump(config.asdict(), handle, sort_keys=True, indent=2)
        handle.write("\n")
    return path
