from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.errors import ConfigError

from .synth_config import SynthConfig

Method = Literal["txqda", "xqda", "euclidean"]
Direction = Literal["a_to_b", "b_to_a", "both"]
FileFormat = Literal["csv", "bin"]


class DescriptorFiles(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    view_a: Path
    view_b: Path
    format: Optional[FileFormat] = None     # guessed from the suffix when omitted


class RunConfig(BaseModel):
    """One experiment: where the descriptors live and how to learn/evaluate on them."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    descriptors: dict[str, DescriptorFiles] = Field(default_factory=dict)
    synth: Optional[SynthConfig] = None
    part_width: int = Field(..., ge=1)
    fusions: list[list[str]] = Field(default_factory=list)
    p_out: int = Field(..., ge=1)
    d_out: list[int] = Field(..., min_length=1)      # sweep, mirrors the "Dim" column
    method: Method = "txqda"
    max_iters: int = Field(5, ge=1)
    conv_tol: float = Field(1e-6, ge=0.0)
    reg_eps: float = Field(1e-3, gt=0.0)
    standardize: bool = True
    folds: int = Field(10, ge=1)
    train_fraction: float = Field(0.5, gt=0.0, lt=1.0)
    seed: int = 0
    direction: Direction = "a_to_b"
    report_ranks: list[int] = Field(default_factory=lambda: [1, 5, 10, 20], min_length=1)
    out_dir: Path = Path("out")
    model_path: Path = Path("out/model.txqd")

    @field_validator("d_out", mode="before")
    @classmethod
    def validate_d_out(cls, value: object) -> object:
        # a single Dim is accepted as shorthand for a one-entry sweep
        return [value] if isinstance(value, int) else value

    @field_validator("d_out", "report_ranks")
    @classmethod
    def validate_positive(cls, value: list[int]) -> list[int]:
        if any(v < 1 for v in value):
            raise ValueError("entries must be >= 1")
        return value

    @field_validator("descriptors")
    @classmethod
    def validate_descriptor_names(cls, value: dict[str, DescriptorFiles]) -> dict[str, DescriptorFiles]:
        for name in value:
            if not name.strip() or any(ch.isspace() or ch in "+=/" for ch in name):
                raise ValueError(f"descriptor name {name!r} cannot be empty or contain spaces, '+', '=' or '/'")
        return value

    @model_validator(mode="after")
    def validate_sources(self) -> "RunConfig":
        if bool(self.descriptors) == (self.synth is not None):
            raise ValueError("give exactly one of `descriptors` or `synth`")
        known = set(self.descriptor_names)
        for fusion in self.fusions:
            if not fusion:
                raise ValueError("fusions must not contain an empty list")
            unknown = [name for name in fusion if name not in known]
            if unknown:
                raise ValueError(f"fusion {fusion} names unknown descriptors {unknown}")
            if len(set(fusion)) != len(fusion):
                raise ValueError(f"fusion {fusion} repeats a descriptor")
        return self

    @property
    def descriptor_names(self) -> list[str]:
        if self.synth is not None:
            return [self.synth.descriptor_name]
        return list(self.descriptors)

    def fusion_list(self) -> list[tuple[str, ...]]:
        """Configured fusions, or all descriptors fused in config order."""
        if self.fusions:
            return [tuple(f) for f in self.fusions]
        return [tuple(self.descriptor_names)]

    def resolve_paths(self, base: Path) -> "RunConfig":
        """Anchor relative paths at `base` (the config file's directory)."""

        def anchor(p: Path) -> Path:
            return p if p.is_absolute() else base / p

        descriptors = {
            name: files.model_copy(update={"view_a": anchor(files.view_a), "view_b": anchor(files.view_b)})
            for name, files in self.descriptors.items()
        }
        return self.model_copy(
            update={
                "descriptors": descriptors,
                "out_dir": anchor(self.out_dir),
                "model_path": anchor(self.model_path),
            }
        )

    def snapshot(self) -> dict:
        """JSON-safe dict of the learning/evaluation settings (no output paths)."""
        return self.model_dump(mode="json", exclude={"out_dir", "model_path"})

    def config_hash(self) -> str:
        canonical = json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def load_run_config(path: Path | str, **overrides: object) -> RunConfig:
    """Parse and validate a JSON config; `overrides` with value None are ignored."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None

    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    raw.update({key: value for key, value in overrides.items() if value is not None})

    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config.resolve_paths(path.resolve().parent)


def load_synth_config(path: Path | str, **overrides: object) -> SynthConfig:
    """A standalone SynthConfig document, or the `synth` block of a RunConfig."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None

    if isinstance(raw, dict) and isinstance(raw.get("synth"), dict):
        raw = raw["synth"]
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    raw.update({key: value for key, value in overrides.items() if value is not None})

    try:
        return SynthConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc}") from None
