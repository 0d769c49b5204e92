"""Rate coding of images into Poisson spike trains.

Each pixel maps linearly to a firing rate: rate_i = (pixel_i / 255) * r_max.
Spike trains are generated as a Bernoulli process per tick with
p = rate * dt (rate in spikes/ms), which approximates a Poisson process to
O(rate * dt) per tick.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_PIXELS = 784
IMAGE_SIDE = 28


@dataclass(frozen=True)
class RateImage:
    """Per-input-neuron firing rates (Hz) derived from a 28x28 image."""

    rates: np.ndarray          # (784,), Hz
    source_pixels: np.ndarray  # (784,), original intensities 0..255


class PoissonTrains:
    """Spike trains for the input layer over a fixed window.

    Stored as a (n_ticks, 784) boolean matrix; `spike_times(i)` gives the
    per-neuron spike time list view used by the tests and exports.
    """

    def __init__(self, spikes: np.ndarray, dt: float):
        self.spikes = spikes
        self.dt = dt

    @property
    def n_ticks(self) -> int:
        return self.spikes.shape[0]

    @property
    def n_neurons(self) -> int:
        return self.spikes.shape[1]

    def spike_times(self, neuron: int) -> np.ndarray:
        """Spike times of one neuron in ms, at dt resolution."""
        return np.flatnonzero(self.spikes[:, neuron]) * self.dt

    def counts(self) -> np.ndarray:
        return self.spikes.sum(axis=0)


def image_to_rates(image: np.ndarray, r_max: float = 63.75) -> RateImage:
    """Linear intensity-to-rate map. image is 28x28 (or flat 784) in [0, 255]."""
    if r_max <= 0:
        raise ValueError(f"r_max must be positive, got {r_max}")
    img = np.asarray(image, dtype=np.float64)
    if img.shape == (IMAGE_SIDE, IMAGE_SIDE):
        flat = img.reshape(N_PIXELS)
    elif img.shape == (N_PIXELS,):
        flat = img
    else:
        raise ValueError(f"expected a 28x28 or flat 784 image, got shape {img.shape}")
    if flat.min() < 0 or flat.max() > 255:
        raise ValueError("pixel intensities must lie in [0, 255]")
    return RateImage(rates=flat / 255.0 * r_max, source_pixels=flat.copy())


def generate_poisson_train(
    rate_image: RateImage,
    duration: float,
    dt: float,
    seed,
) -> PoissonTrains:
    """Bernoulli-per-tick Poisson approximation over `duration` ms.

    Each neuron fires independently each tick with probability rate*dt
    (rate converted to spikes/ms). Reproducible under the seed, which may be
    an int or a numpy SeedSequence/Generator.
    """
    if duration <= 0 or dt <= 0:
        raise ValueError("duration and dt must be positive")
    p = rate_image.rates * (dt / 1000.0)
    if np.any(p > 1.0):
        raise ValueError(
            "rate * dt exceeds 1 spike per tick; lower r_max or dt (aliasing guard)"
        )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_ticks = int(round(duration / dt))
    draws = rng.random((n_ticks, rate_image.rates.shape[0]), dtype=np.float32)
    return PoissonTrains(draws < p.astype(np.float32), dt)
