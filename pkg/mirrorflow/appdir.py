"""Lookup of experiment files in the user app directory and in the package defaults.

An experiment argument is resolved in this order: an existing file path, a file in the
app directory, a default experiment shipped with mirrorflow. Names without a suffix are
matched against ".yaml" and ".yml" files, so "ou_process" finds "ou_process.yaml".
"""

import errno
import os
import pathlib
import shutil
from typing import Iterator, Optional

import platformdirs


APPNAME = "MirrorFlow"
EXPERIMENT_SUFFIXES = (".yaml", ".yml")


def locate_appdir() -> str:
    """Returns the path to the user specific app data directory."""
    return platformdirs.user_data_dir(appname=APPNAME, appauthor=False)


def get_appdir_experiments() -> list[str]:
    """Returns the sorted experiment filenames in the user app data directory."""
    return sorted(_experiment_files(pathlib.Path(locate_appdir())))


def get_default_experiments() -> list[str]:
    """Returns the sorted filenames of the default experiments."""
    return sorted(fn.name for fn in _get_default_experiment_files())


def setup_appdir(overwrite_experiments: bool = False) -> None:
    """Creates a user specific app data directory and copies default experiment files.

    Args:
        overwrite_experiments: If True, existing experiment files will be overwritten.
    """
    data_dir = locate_appdir()
    if not os.path.isdir(data_dir):
        os.makedirs(data_dir)
    _copy_default_experiments(data_dir, overwrite_experiments)


def get_experiment_path(experiment: str) -> str:
    """Returns the path to the specified experiment file.

    Args:
        experiment: A path to an experiment file, or the name of an experiment file in
            the app directory or among the default experiments, with or without suffix.

    Raises:
        FileNotFoundError: If no matching experiment file exists.
    """
    if pathlib.Path(experiment).is_file():
        return experiment
    if (name := _match_name(experiment, get_appdir_experiments())) is not None:
        return pathlib.Path(locate_appdir(), name).as_posix()
    if (name := _match_name(experiment, get_default_experiments())) is not None:
        return (_default_experiment_dir() / name).as_posix()
    raise FileNotFoundError(errno.ENOENT, os.strerror(errno.ENOENT), experiment)


def _match_name(experiment: str, filenames: list[str]) -> Optional[str]:
    candidates = [experiment]
    if not pathlib.PurePath(experiment).suffix:
        candidates.extend(experiment + suffix for suffix in EXPERIMENT_SUFFIXES)
    for candidate in candidates:
        if candidate in filenames:
            return candidate
    return None


def _experiment_files(directory: pathlib.Path) -> list[str]:
    return [
        fn.name for suffix in EXPERIMENT_SUFFIXES for fn in directory.glob(f"*{suffix}")
    ]


def _copy_default_experiments(directory: str, overwrite: bool) -> None:
    for source in _get_default_experiment_files():
        destiny = pathlib.Path(directory, source.name)
        if not pathlib.Path.is_file(destiny) or overwrite:
            shutil.copyfile(source, destiny)


def _default_experiment_dir() -> pathlib.Path:
    return pathlib.Path(__file__).parent / "default_experiments"


def _get_default_experiment_files() -> Iterator[pathlib.Path]:
    """Returns the default experiment files included in the mirrorflow package."""
    return _default_experiment_dir().glob("*.yaml")
