from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class SynthConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_persons: int = Field(100, ge=1)
    latent_dim: int = Field(8, ge=1)
    feature_dim: int = Field(60, ge=1)
    noise_sigma: float = Field(0.2, ge=0.0)
    view_shift: float = Field(1.0, ge=0.0)
    latent_scale: float = Field(1.0, gt=0.0)
    view_transform_seed: int = 7
    sample_seed: int = 11
    descriptor_name: str = "synth"

    @field_validator("descriptor_name")
    @classmethod
    def validate_descriptor_name(cls, value: str) -> str:
        name = value.strip()
        if not name:
            raise ValueError("descriptor_name is required")
        if any(ch.isspace() or ch in "+=/" for ch in name):
            raise ValueError("descriptor_name cannot contain spaces, '+', '=' or '/'")
        return name

    @model_validator(mode="after")
    def validate_latent_dim(self) -> "SynthConfig":
        if self.latent_dim > self.feature_dim:
            raise ValueError(f"latent_dim ({self.latent_dim}) must not exceed feature_dim ({self.feature_dim})")
        return self
