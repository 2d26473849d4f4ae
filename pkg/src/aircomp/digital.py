"""Digital AirComp: one-bit majority-vote aggregation, QAM-style
quantization, the orthogonal-access (OFDMA) baseline, and latency
accounting.

One-bit aggregation transmits each entry's sign as a BPSK symbol under
truncated channel inversion; the superposed received signal's sign is a
majority vote over the participating devices.  The OFDMA baseline
quantizes values to a fixed bit depth, sends them on dedicated
sub-channels at the largest square-QAM order that holds the target
bit-error rate, and averages the decoded values at the server.

Latency is counted in symbol-slots: the broadband channel carries
`num_subchannels` parallel symbols per slot.  A slot duration can be
supplied to convert to seconds; none is assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .core import mac_aggregate, truncated_inversion_policy
from .errors import InsufficientSubchannelsError, InvalidArgumentError
from .rng import as_generator


@dataclass(frozen=True)
class OneBitAggregate:
    """Decoded majority votes next to the noise-free ground truth.

    decoded_signs: the server's per-dimension decision in {-1, +1}.
    true_majority: sign of the per-dimension sum of device signs, 0 on ties.
    flip_count: positions where the decision contradicts a nonzero majority.
    tie_positions: dimensions whose true vote was an exact tie (excluded
    from flip_count).
    """

    decoded_signs: np.ndarray
    true_majority: np.ndarray
    flip_count: int
    tie_positions: tuple[int, ...] = ()

    def __post_init__(self):
        decoded = np.asarray(self.decoded_signs, dtype=np.int64)
        majority = np.asarray(self.true_majority, dtype=np.int64)
        if decoded.shape != majority.shape:
            raise InvalidArgumentError("decoded and true majority must have equal length")
        flips = int(np.count_nonzero((decoded != majority) & (majority != 0)))
        if flips != self.flip_count:
            raise InvalidArgumentError("flip_count inconsistent with decoded/true vectors")
        decoded.flags.writeable = False
        majority.flags.writeable = False
        object.__setattr__(self, "decoded_signs", decoded)
        object.__setattr__(self, "true_majority", majority)


@dataclass(frozen=True)
class LatencyModel:
    """Broadband channel geometry and modulation assumptions.

    num_subchannels: orthogonal sub-channels available per symbol-slot.
    bits_per_parameter: quantization depth of the orthogonal baseline.
    target_ber: bit-error rate the adaptive modulation must hold.
    mean_rx_snr: receive SNR (linear) used to pick the modulation order.
    symbol_duration: optional seconds per slot, for conversion to time.
    ber_coefficient / ber_snr_scale: constants of the square-QAM BER
    approximation ber(M) = coeff * exp(-scale * snr / (M - 1)).
    """

    num_subchannels: int
    bits_per_parameter: int
    target_ber: float
    mean_rx_snr: float
    symbol_duration: float | None = None
    ber_coefficient: float = 0.2
    ber_snr_scale: float = 1.5
    max_modulation_order: int = 4096

    def __post_init__(self):
        if self.num_subchannels < 1:
            raise InvalidArgumentError("num_subchannels must be >= 1")
        if self.bits_per_parameter < 1:
            raise InvalidArgumentError("bits_per_parameter must be >= 1")
        if not 0.0 < self.target_ber < 1.0:
            raise InvalidArgumentError("target_ber must be in (0, 1)")
        if self.mean_rx_snr <= 0:
            raise InvalidArgumentError("mean_rx_snr must be > 0")

    def slots_to_seconds(self, slots: int) -> float:
        if self.symbol_duration is None:
            raise InvalidArgumentError("no symbol_duration configured")
        return slots * self.symbol_duration


def square_qam_ber(modulation_order: int, snr: float, coefficient: float = 0.2, snr_scale: float = 1.5) -> float:
    """Approximate square-QAM bit-error rate, monotone in order and SNR."""
    return coefficient * math.exp(-snr_scale * snr / (modulation_order - 1))


def select_modulation_order(model: LatencyModel) -> int:
    """Largest square-QAM order whose approximate BER meets the target."""
    best = 0
    order = 4
    while order <= model.max_modulation_order:
        if square_qam_ber(order, model.mean_rx_snr, model.ber_coefficient, model.ber_snr_scale) <= model.target_ber:
            best = order
        order *= 4
    if best == 0:
        raise InvalidArgumentError(
            f"no square-QAM order meets target_ber={model.target_ber} at snr={model.mean_rx_snr}"
        )
    return best


def aircomp_round_latency(num_parameters: int, model: LatencyModel) -> int:
    """Slots to aggregate D parameters: ceil(D / S), independent of the device count."""
    if num_parameters < 1:
        raise InvalidArgumentError("num_parameters must be >= 1")
    return -(-num_parameters // model.num_subchannels)


def ofdma_round_latency(num_parameters: int, num_devices: int, model: LatencyModel) -> int:
    """Slots for every device to upload D quantized parameters orthogonally.

    Each device gets floor(S / K) dedicated sub-channels carrying
    log2(M*) bits per symbol, so the total grows linearly in the device
    count once the spectrum is saturated.
    """
    if num_parameters < 1 or num_devices < 1:
        raise InvalidArgumentError("num_parameters and num_devices must be >= 1")
    if model.num_subchannels < num_devices:
        raise InsufficientSubchannelsError(
            f"{num_devices} devices need at least as many sub-channels, have {model.num_subchannels}"
        )
    per_device = model.num_subchannels // num_devices
    bits_per_symbol = int(math.log2(select_modulation_order(model)))
    total_bits = num_parameters * model.bits_per_parameter
    return -(-total_bits // (per_device * bits_per_symbol))


def one_bit_aircomp(
    sign_vectors,
    channel: ChannelRealization,
    power_budget: float,
    rng: np.random.Generator | int | None = None,
    truncation_threshold: float = 0.0,
) -> OneBitAggregate:
    """Aggregate K x D sign matrices by superposed BPSK and sign detection.

    Devices transmit their sign entries under truncated channel inversion
    (threshold 0 means plain inversion); the server decodes the sign of the
    real received aggregate per dimension, which with aligned magnitudes is
    exactly a majority vote of the participating devices.  An exactly zero
    aggregate decodes to +1.
    """
    signs = np.asarray(sign_vectors, dtype=np.float64)
    if signs.ndim == 1:
        signs = signs[None, :] if channel.num_devices == 1 else signs[:, None]
    if signs.ndim != 2 or signs.shape[0] != channel.num_devices:
        raise InvalidArgumentError("sign_vectors must be a (K, D) matrix")
    if not np.all(np.abs(signs) == 1.0):
        raise InvalidArgumentError("sign_vectors entries must be exactly -1 or +1")

    alloc = truncated_inversion_policy(channel, power_budget, truncation_threshold)
    noise_scale = math.sqrt(channel.noise_variance / alloc.alignment_factor)
    received = mac_aggregate(signs, alloc.alignment_gains, noise_scale, rng)
    decoded = np.where(received >= 0.0, 1, -1).astype(np.int64)

    vote = signs.sum(axis=0)
    majority = np.sign(vote).astype(np.int64)
    ties = tuple(int(i) for i in np.flatnonzero(majority == 0))
    flips = int(np.count_nonzero((decoded != majority) & (majority != 0)))
    return OneBitAggregate(decoded, majority, flips, ties)


def _midrise_levels(clip_range: float, num_levels: int) -> np.ndarray:
    step = 2.0 * clip_range / num_levels
    return -clip_range + (np.arange(num_levels) + 0.5) * step


def _midrise_indices(values: np.ndarray, clip_range: float, num_levels: int) -> np.ndarray:
    step = 2.0 * clip_range / num_levels
    idx = np.floor((values + clip_range) / step).astype(np.int64)
    return np.clip(idx, 0, num_levels - 1)


def qam_quantize(value: float, modulation_order: int, clip_range: float, value_q: float | None = None) -> complex:
    """Snap a value (or an I/Q pair) to the nearest square-QAM amplitude.

    The in-phase axis carries `value`, the quadrature axis carries
    `value_q` when provided; both are clipped to +-clip_range and mapped to
    the nearest of the sqrt(M) uniformly spaced amplitudes per axis, so
    the in-range quantization error never exceeds half a grid step.
    """
    if clip_range <= 0:
        raise InvalidArgumentError("clip_range must be > 0")
    levels_per_axis = math.isqrt(modulation_order)
    if modulation_order < 4 or levels_per_axis * levels_per_axis != modulation_order:
        raise InvalidArgumentError("modulation_order must be a perfect square >= 4")
    levels = _midrise_levels(clip_range, levels_per_axis)

    def snap(x: float) -> float:
        clipped = min(max(x, -clip_range), clip_range)
        idx = _midrise_indices(np.asarray([clipped]), clip_range, levels_per_axis)[0]
        return float(levels[idx])

    return complex(snap(value), 0.0 if value_q is None else snap(value_q))


def ofdma_transmit(
    values,
    bits_per_parameter: int,
    rng: np.random.Generator | int | None = None,
    ber: float = 0.0,
    clip_range: float | None = None,
) -> np.ndarray:
    """Quantize, send through independent bit flips, and dequantize.

    Each value is uniformly quantized to 2^bits levels over [-c, c]; the
    index bits are flipped independently with probability `ber` and the
    flipped index is mapped back to its level.  When no clip range is
    given it defaults to four running standard deviations of the value
    stream, recomputed per call, so drifting value scales do not saturate
    the grid.
    """
    if not 1 <= bits_per_parameter <= 32:
        raise InvalidArgumentError("bits_per_parameter must be in [1, 32]")
    if not 0.0 <= ber < 1.0:
        raise InvalidArgumentError("ber must be in [0, 1)")
    v = np.asarray(values, dtype=np.float64)
    if clip_range is None:
        spread = float(np.std(v))
        clip_range = 4.0 * spread if spread > 0 else max(float(np.max(np.abs(v), initial=0.0)), 1.0)
    if clip_range <= 0:
        raise InvalidArgumentError("clip_range must be > 0")

    num_levels = 1 << bits_per_parameter
    clipped = np.clip(v, -clip_range, clip_range)
    idx = _midrise_indices(clipped, clip_range, num_levels)
    if ber > 0.0:
        gen = as_generator(rng)
        flips = gen.random((v.size, bits_per_parameter)) < ber
        masks = (flips.astype(np.int64) << np.arange(bits_per_parameter)).sum(axis=1)
        idx = idx ^ masks
    return _midrise_levels(clip_range, num_levels)[idx]
