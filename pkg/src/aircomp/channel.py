"""Random channel realizations and OFDM timing-offset modeling.

Fading model: block Rayleigh flat fading, one independent realization per
aggregation round.  Gains are drawn i.i.d. circularly-symmetric complex
Gaussian with unit average power, so empirical E[|h|^2] -> 1.

Noise convention used throughout the toolkit: ``noise_variance`` is the
variance of the *in-phase (real) noise component* at the receiver.  Only
the real quadrature carries data, so this is the noise power that actually
corrupts detection.  The full complex noise has twice this power.

All realization types are immutable after construction and safe to share
across parallel workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ChannelRealization:
    """Flat-fading gains of K devices plus receiver noise power for one block.

    gains: complex per-device channel coefficients.
    noise_variance: variance of the real (in-phase) receiver noise component.
    seed_tag: the seed the realization was drawn with (0 for hand-built ones).
    """

    gains: np.ndarray
    noise_variance: float
    seed_tag: int = 0

    def __post_init__(self):
        gains = _readonly(np.asarray(self.gains, dtype=np.complex128))
        if gains.ndim != 1 or gains.size < 1:
            raise InvalidArgumentError("gains must be a non-empty 1-D array")
        if self.noise_variance < 0:
            raise InvalidArgumentError("noise_variance must be >= 0")
        object.__setattr__(self, "gains", gains)

    @property
    def num_devices(self) -> int:
        return self.gains.size

    def gain_powers(self) -> np.ndarray:
        """|h_k|^2 computed as re^2 + im^2 (no sqrt round-trip)."""
        return (self.gains * self.gains.conj()).real

    def with_noise_variance(self, noise_variance: float) -> "ChannelRealization":
        """Same gains, different receiver noise power."""
        return ChannelRealization(self.gains, noise_variance, self.seed_tag)


@dataclass(frozen=True)
class MimoChannelRealization:
    """Channel vectors of K single-antenna devices to an N-antenna server."""

    matrices: np.ndarray  # (K, N) complex
    noise_variance: float
    seed_tag: int = 0

    def __post_init__(self):
        m = _readonly(np.asarray(self.matrices, dtype=np.complex128))
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise InvalidArgumentError("matrices must be a (K, N) array with K, N >= 1")
        if self.noise_variance < 0:
            raise InvalidArgumentError("noise_variance must be >= 0")
        object.__setattr__(self, "matrices", m)

    @property
    def num_devices(self) -> int:
        return self.matrices.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.matrices.shape[1]


@dataclass(frozen=True)
class OfdmTimingModel:
    """Cyclic-prefix length, subcarrier spacing and per-device timing offsets.

    The useful symbol duration is 1/subcarrier_spacing; an offset longer
    than the cyclic prefix eats into it and causes inter-symbol
    interference.
    """

    cp_duration: float
    subcarrier_spacing: float
    timing_offsets: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        if self.cp_duration <= 0:
            raise InvalidArgumentError("cp_duration must be > 0")
        if self.subcarrier_spacing <= 0:
            raise InvalidArgumentError("subcarrier_spacing must be > 0")
        offsets = _readonly(np.asarray(self.timing_offsets, dtype=np.float64))
        if offsets.ndim != 1 or offsets.size < 1:
            raise InvalidArgumentError("timing_offsets must be a non-empty 1-D array")
        object.__setattr__(self, "timing_offsets", offsets)

    @property
    def num_devices(self) -> int:
        return self.timing_offsets.size

    @property
    def useful_symbol_duration(self) -> float:
        return 1.0 / self.subcarrier_spacing


def draw_rayleigh(num_devices: int, rng_seed: int, noise_variance: float = 1.0) -> ChannelRealization:
    """Draw K i.i.d. unit-power complex Gaussian gains, deterministic in the seed."""
    if num_devices < 1:
        raise InvalidArgumentError("num_devices must be >= 1")
    rng = np.random.default_rng(rng_seed)
    re = rng.standard_normal(num_devices)
    im = rng.standard_normal(num_devices)
    gains = (re + 1j * im) / np.sqrt(2.0)
    return ChannelRealization(gains, noise_variance, seed_tag=int(rng_seed))


def draw_mimo_rayleigh(
    num_devices: int, num_antennas: int, rng_seed: int, noise_variance: float = 1.0
) -> MimoChannelRealization:
    """Draw a (K, N) matrix of i.i.d. unit-power complex Gaussian entries.

    With num_antennas=1 the entries coincide with draw_rayleigh(K, seed)
    up to shape: both consume the seed's stream in the same order.
    """
    if num_devices < 1 or num_antennas < 1:
        raise InvalidArgumentError("num_devices and num_antennas must be >= 1")
    rng = np.random.default_rng(rng_seed)
    shape = (num_devices, num_antennas)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return MimoChannelRealization((re + 1j * im) / np.sqrt(2.0), noise_variance, seed_tag=int(rng_seed))


def timing_offset_phase(device_index: int, subcarrier_index: int, model: OfdmTimingModel) -> float:
    """Phase shift (radians) a device's timing offset puts on one subcarrier.

    Returns -2*pi * (subcarrier_index * subcarrier_spacing) * offset, i.e.
    the signed rotation the received symbol picks up.  This is the value to
    hand to :func:`equalize_phase` to undo it.
    """
    _check_indices(device_index, subcarrier_index, model)
    offset = float(model.timing_offsets[device_index])
    return -2.0 * math.pi * (subcarrier_index * model.subcarrier_spacing) * offset


def apply_timing_offset(
    symbol: complex, device_index: int, subcarrier_index: int, model: OfdmTimingModel
) -> tuple[complex, bool]:
    """Receive one subcarrier symbol through a device's timing offset.

    Offsets shorter than the cyclic prefix only rotate the symbol (the
    magnitude is untouched) and the rotation can be undone by sub-channel
    equalization.  Offsets at or beyond the prefix additionally shrink the
    magnitude by the fraction of the useful symbol lost and the sample is
    flagged as ISI-corrupted.

    Returns (received symbol, isi_corrupted).
    """
    _check_indices(device_index, subcarrier_index, model)
    offset = float(model.timing_offsets[device_index])
    phase = timing_offset_phase(device_index, subcarrier_index, model)
    rotated = complex(symbol) * complex(math.cos(phase), math.sin(phase))
    if offset < model.cp_duration:
        return rotated, False
    lost = (offset - model.cp_duration) / model.useful_symbol_duration
    attenuation = max(0.0, 1.0 - lost)
    return rotated * attenuation, True


def equalize_phase(symbol: complex, known_phase: float) -> complex:
    """Rotate a symbol by -known_phase (undoes a known phase shift)."""
    return complex(symbol) * complex(math.cos(known_phase), -math.sin(known_phase))


def _check_indices(device_index: int, subcarrier_index: int, model: OfdmTimingModel) -> None:
    if not 0 <= device_index < model.num_devices:
        raise InvalidArgumentError(
            f"device_index {device_index} out of range for {model.num_devices} devices"
        )
    if subcarrier_index < 0:
        raise InvalidArgumentError("subcarrier_index must be >= 0")
