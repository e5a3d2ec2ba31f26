"""
Deterministic synthetic cross-view descriptors with known identities.

Generator (frozen; acceptance thresholds depend on it):

- Random numbers come from numpy's PCG64 bit generator via
  ``numpy.random.default_rng(seed)``; normal variates use
  ``Generator.standard_normal`` (numpy's ziggurat method).
- The view generator (``view_transform_seed``) draws, in this order, a shared
  map G0 and a discrepancy map G1, both D x L with N(0, 1/L) entries. View A
  uses G0, view B uses G0 + view_shift * G1.
- The sample generator (``sample_seed``) draws, in this order, latent
  identities Z (n x L, N(0, latent_scale^2)), view-A noise and view-B noise
  (n x D each, N(0, 1) scaled by noise_sigma).
- Person ids are 0..n-1 in both views.
"""

from __future__ import annotations

import logging

import numpy as np

from models.synth_config import SynthConfig

from .base import FeatureSet

log = logging.getLogger("txreid.features")


def generate_crossview(cfg: SynthConfig) -> tuple[FeatureSet, FeatureSet]:
    view_rng = np.random.default_rng(cfg.view_transform_seed)
    scale = 1.0 / np.sqrt(cfg.latent_dim)
    shared = view_rng.standard_normal((cfg.feature_dim, cfg.latent_dim)) * scale
    discrepancy = view_rng.standard_normal((cfg.feature_dim, cfg.latent_dim)) * scale
    map_a = shared
    map_b = shared + cfg.view_shift * discrepancy

    sample_rng = np.random.default_rng(cfg.sample_seed)
    latent = sample_rng.standard_normal((cfg.n_persons, cfg.latent_dim)) * cfg.latent_scale
    noise_a = sample_rng.standard_normal((cfg.n_persons, cfg.feature_dim)) * cfg.noise_sigma
    noise_b = sample_rng.standard_normal((cfg.n_persons, cfg.feature_dim)) * cfg.noise_sigma

    ids = tuple(range(cfg.n_persons))
    view_a = FeatureSet(cfg.descriptor_name, "A", ids, latent @ map_a.T + noise_a)
    view_b = FeatureSet(cfg.descriptor_name, "B", ids, latent @ map_b.T + noise_b)
    log.debug(
        "generated %d persons x %d features (latent %d, noise %.3g, shift %.3g)",
        cfg.n_persons, cfg.feature_dim, cfg.latent_dim, cfg.noise_sigma, cfg.view_shift,
    )
    return view_a, view_b
