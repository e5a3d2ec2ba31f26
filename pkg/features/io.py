from __future__ import annotations

from pathlib import Path

from core.errors import ConfigError

from . import load_formats
from .base import FeatureFormat, FeatureSet, View


def get_format(name: str) -> FeatureFormat:
    formats = load_formats()
    try:
        return formats[name]
    except KeyError:
        raise ConfigError(f"unknown feature format {name!r}; available: {sorted(formats)}") from None


def format_for_path(path: Path) -> str:
    """Guess the format name from a file suffix (".tfv1"/".bin" -> bin, anything else -> csv)."""
    return "bin" if path.suffix.lower() in (".tfv1", ".bin") else "csv"


def load_feature_set(
    path: Path | str,
    format: str | None = None,
    *,
    descriptor_name: str = "features",
    view: View | None = None,
) -> FeatureSet:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"feature file not found: {path}")
    fmt = get_format(format or format_for_path(path))
    return fmt.read(path, descriptor_name=descriptor_name, view=view)


def write_feature_set(fs: FeatureSet, path: Path | str, format: str = "csv") -> Path:
    path = Path(path)
    get_format(format).write(fs, path)
    return path


def default_filename(fs: FeatureSet, format: str = "csv") -> str:
    return f"{fs.descriptor_name}_{fs.view}{get_format(format).suffix}"
