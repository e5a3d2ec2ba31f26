# features/__init__.py
from __future__ import annotations

import importlib
import pkgutil
from typing import Dict

from .base import FeatureFormat


def load_formats() -> Dict[str, FeatureFormat]:
    """
    Auto-discover descriptor file formats in this package.
    Each format module must expose FORMAT = <FeatureFormat instance>.
    """
    registry: Dict[str, FeatureFormat] = {}

    package_name = __name__  # "features"
    for mod in pkgutil.iter_modules(__path__):
        if mod.name.startswith("_") or mod.name in ("base",):
            continue

        module = importlib.import_module(f"{package_name}.{mod.name}")

        fmt = getattr(module, "FORMAT", None)
        if fmt is None:
            continue  # io, prep, synth are helpers

        name = getattr(fmt, "name", None)
        if not name:
            raise ValueError(f"{module.__name__}.FORMAT missing name")

        if name in registry:
            raise ValueError(f"Duplicate feature format: {name}")

        registry[name] = fmt

    return registry
