"""Scalar AirComp transceiver chain.

The chain: every device pre-processes its datum, scales it with a transmit
coefficient chosen by a power-control policy, and all devices transmit at
once over the same fading multiple-access channel.  The superposed signal,
after scaling by the alignment (denoising) factor, estimates the *sum* of
the pre-processed values; server-side post-processing turns that sum into
the target function value.

Power-control policies implemented here:

* uniform channel inversion -- every device inverts its channel so all
  signals arrive with the common amplitude sqrt(alignment_factor); the
  weakest device sets that level by transmitting at the full budget.
* truncated channel inversion -- devices whose gain power falls below a
  threshold are excluded, which lifts the alignment factor for the rest at
  the price of an exclusion bias.
* threshold-optimal -- per-device power min(budget, eta/|h|^2) with the
  alignment factor eta tuned to minimize the closed-form error; the result
  is binary: weak devices transmit at full power (misaligned), strong ones
  invert exactly.

Numerical contract: allocations carry the normalized effective gains
c_k = h_k * b_k / sqrt(eta) in algebraically simplified form, so exact
inversion means c_k == 1.0 *exactly* and a noiseless aligned round
collapses bit-for-bit to ideal averaging.  The simulation runs in this
equalized domain: estimate = Re(sum_k c_k s_k + noise / sqrt(eta)), which
is the received signal after the server's denoising scale, term for term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import ChannelRealization
from .errors import (
    DegenerateChannelError,
    DomainError,
    EmptyAggregationError,
    FunctionNotFoundError,
    InvalidArgumentError,
)
from .rng import as_generator

_POWER_SLACK = 1e-9  # relative slack on |b|^2 <= budget checks
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# Nomographic functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """Closed/open interval of valid per-device data values."""

    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False

    def contains(self, values: np.ndarray) -> bool:
        v = np.asarray(values, dtype=np.float64)
        lo_ok = (v > self.lo) if self.lo_open else (v >= self.lo)
        hi_ok = (v < self.hi) if self.hi_open else (v <= self.hi)
        return bool(np.all(lo_ok & hi_ok))

    def __str__(self) -> str:
        return f"{'(' if self.lo_open else '['}{self.lo}, {self.hi}{')' if self.hi_open else ']'}"


@dataclass(frozen=True)
class NomographicFunction:
    """A target function expressed as post(sum of pre-processed data).

    pre maps the per-device data vector elementwise (it may differ per
    device, e.g. weighted sums); post maps (sum, num_devices) to the
    function value.  ``direct`` evaluates the target without going through
    the pre/post decomposition and serves as the ground-truth oracle.
    """

    name: str
    pre: Callable[[np.ndarray], np.ndarray]
    post: Callable[[float, int], float]
    direct: Callable[[np.ndarray], float]
    domain: Interval = Interval(-math.inf, math.inf)

    def check_domain(self, data: np.ndarray) -> None:
        if not self.domain.contains(data):
            raise DomainError(f"data outside domain {self.domain} of '{self.name}'")

    def evaluate_via_sum(self, data) -> float:
        """post(sum(pre(data))) -- the decomposed path, channel-free."""
        data = np.asarray(data, dtype=np.float64)
        self.check_domain(data)
        return float(self.post(float(np.sum(self.pre(data))), data.size))


def make_function(
    name: str,
    *,
    weights=None,
    coefficients=(0.0, 1.0, 1.0),
    sharpness: float = 10.0,
    domain: tuple[float, float] | None = None,
) -> NomographicFunction:
    """Build one of the registered pre/post pairs.

    weights      -- per-device weights for 'weighted_sum' (default: all ones).
    coefficients -- low-to-high polynomial coefficients for 'polynomial';
                    the target is sum_k poly(d_k).
    sharpness    -- smooth-max sharpness for 'soft_max'; the approximation
                    error against the true maximum is at most ln(K)/sharpness.
    domain       -- optional (lo, hi) override of the registered domain.
                    Required to be finite on the high side for 'soft_max'.
    """
    if name == "arithmetic_mean":
        func = NomographicFunction(
            name,
            pre=lambda d: d,
            post=lambda s, k: s / k,
            direct=lambda d: float(np.mean(d)),
        )
    elif name == "weighted_sum":
        w = np.ones(0) if weights is None else np.asarray(weights, dtype=np.float64)

        def _pre(d, w=w):
            if w.size and w.size != np.asarray(d).size:
                raise InvalidArgumentError("weights length must match the data length")
            return d * w if w.size else np.asarray(d, dtype=np.float64)

        def _direct(d, w=w):
            d = np.asarray(d, dtype=np.float64)
            return float(np.dot(w, d)) if w.size else float(np.sum(d))

        func = NomographicFunction(name, pre=_pre, post=lambda s, k: s, direct=_direct)
    elif name == "geometric_mean":
        func = NomographicFunction(
            name,
            pre=np.log,
            post=lambda s, k: math.exp(s / k),
            direct=lambda d: float(np.prod(np.asarray(d, dtype=np.float64)) ** (1.0 / np.asarray(d).size)),
            domain=Interval(0.0, math.inf, lo_open=True),
        )
    elif name == "euclidean_norm":
        func = NomographicFunction(
            name,
            pre=np.square,
            post=lambda s, k: math.sqrt(s),
            direct=lambda d: float(np.linalg.norm(np.asarray(d, dtype=np.float64))),
        )
    elif name == "polynomial":
        coeffs = np.asarray(coefficients, dtype=np.float64)

        def _poly(d, c=coeffs):
            return np.polynomial.polynomial.polyval(np.asarray(d, dtype=np.float64), c)

        func = NomographicFunction(
            name,
            pre=_poly,
            post=lambda s, k: s,
            direct=lambda d: float(np.sum(_poly(d))),
        )
    elif name == "soft_max":
        if sharpness <= 0:
            raise InvalidArgumentError("sharpness must be > 0")
        hi = domain[1] if domain is not None else 100.0
        if not math.isfinite(hi):
            raise InvalidArgumentError("soft_max needs a finite domain upper bound")
        beta = float(sharpness)
        # Recentred log-sum-exp: algebraically identical to pre=exp(beta*x),
        # post=ln(s)/beta, but exp() stays representable for in-domain data.
        # The target equals the true maximum to within ln(K)/beta.
        func = NomographicFunction(
            name,
            pre=lambda d, b=beta, c=hi: np.exp(b * (np.asarray(d, dtype=np.float64) - c)),
            post=lambda s, k, b=beta, c=hi: c + math.log(s) / b,
            direct=lambda d, b=beta, c=hi: c
            + math.log(float(np.sum(np.exp(b * (np.asarray(d, dtype=np.float64) - c))))) / b,
            domain=Interval(0.0, hi),
        )
    else:
        raise FunctionNotFoundError(f"unknown nomographic function '{name}'")

    if domain is not None:
        func = NomographicFunction(
            func.name, func.pre, func.post, func.direct, Interval(domain[0], domain[1], func.domain.lo_open)
        )
    return func


REGISTERED_FUNCTIONS = (
    "arithmetic_mean",
    "weighted_sum",
    "geometric_mean",
    "euclidean_norm",
    "polynomial",
    "soft_max",
)


# ---------------------------------------------------------------------------
# Power allocations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerAllocation:
    """Per-device transmit coefficients plus the global alignment factor.

    tx_scalars       -- complex transmit coefficients b_k; |b_k|^2 is the
                        per-device transmit power and may not exceed the budget.
    alignment_factor -- the common received power level eta the aligned
                        signals hit; also the server's denoising scale.
    power_budget     -- per-device transmit power cap.
    alignment_gains  -- normalized effective gains c_k = h_k b_k / sqrt(eta),
                        stored in simplified form (exactly 1.0 for devices that
                        invert, exactly 0.0 for excluded ones).
    excluded         -- indices the policy dropped from the aggregation.
    policy           -- name of the policy that produced the allocation.
    """

    tx_scalars: np.ndarray
    alignment_factor: float
    power_budget: float
    alignment_gains: np.ndarray
    excluded: tuple[int, ...] = ()
    policy: str = "fixed"

    def __post_init__(self):
        tx = np.array(self.tx_scalars, dtype=np.complex128)
        gains = np.array(self.alignment_gains, dtype=np.complex128)
        if tx.ndim != 1 or tx.size < 1:
            raise InvalidArgumentError("tx_scalars must be a non-empty 1-D array")
        if gains.shape != tx.shape:
            raise InvalidArgumentError("alignment_gains must match tx_scalars in shape")
        if self.alignment_factor <= 0:
            raise InvalidArgumentError("alignment_factor must be > 0")
        if self.power_budget <= 0:
            raise InvalidArgumentError("power_budget must be > 0")
        powers = (tx * tx.conj()).real
        cap = self.power_budget * (1.0 + _POWER_SLACK)
        if np.any(powers > cap):
            raise InvalidArgumentError(
                f"transmit power {powers.max():.6g} exceeds budget {self.power_budget:.6g}"
            )
        tx.flags.writeable = False
        gains.flags.writeable = False
        object.__setattr__(self, "tx_scalars", tx)
        object.__setattr__(self, "alignment_gains", gains)
        object.__setattr__(self, "excluded", tuple(int(i) for i in self.excluded))

    @property
    def num_devices(self) -> int:
        return self.tx_scalars.size

    @property
    def num_included(self) -> int:
        return self.num_devices - len(self.excluded)

    @classmethod
    def from_tx_scalars(
        cls,
        channel: ChannelRealization,
        tx_scalars,
        alignment_factor: float,
        power_budget: float,
        policy: str = "fixed",
    ) -> "PowerAllocation":
        """Build an allocation from raw coefficients, deriving alignment gains."""
        tx = np.asarray(tx_scalars, dtype=np.complex128)
        if tx.shape != channel.gains.shape:
            raise InvalidArgumentError("tx_scalars must match the channel size")
        gains = channel.gains * tx / math.sqrt(alignment_factor)
        excluded = tuple(int(i) for i in np.flatnonzero(tx == 0))
        return cls(tx, alignment_factor, power_budget, gains, excluded, policy)


def _check_nonzero_gains(gain_powers: np.ndarray) -> None:
    if np.any(gain_powers == 0.0):
        raise DegenerateChannelError("channel has a zero gain; inversion impossible")


def uniform_inversion_policy(channel: ChannelRealization, power_budget: float) -> PowerAllocation:
    """Full channel inversion: the weakest device transmits at the budget.

    b_k = sqrt(eta) * conj(h_k) / |h_k|^2 with eta = budget * min_k |h_k|^2,
    so every signal arrives with the identical amplitude sqrt(eta).
    """
    if power_budget <= 0:
        raise InvalidArgumentError("power_budget must be > 0")
    g2 = channel.gain_powers()
    _check_nonzero_gains(g2)
    eta = power_budget * float(g2.min())
    tx = math.sqrt(eta) * channel.gains.conj() / g2
    ones = np.ones(channel.num_devices, dtype=np.complex128)
    return PowerAllocation(tx, eta, power_budget, ones, (), "uniform_inversion")


def truncated_inversion_policy(
    channel: ChannelRealization, power_budget: float, truncation_threshold: float
) -> PowerAllocation:
    """Channel inversion over devices whose gain power clears the threshold.

    Devices with |h_k|^2 < truncation_threshold stay silent (b_k = 0) and are
    recorded in ``excluded``; the survivors invert against the weakest
    surviving gain.  threshold 0 reduces to uniform inversion.
    """
    if power_budget <= 0:
        raise InvalidArgumentError("power_budget must be > 0")
    if truncation_threshold < 0:
        raise InvalidArgumentError("truncation_threshold must be >= 0")
    g2 = channel.gain_powers()
    included = g2 >= truncation_threshold
    if not included.any():
        raise EmptyAggregationError("truncation threshold excluded every device")
    _check_nonzero_gains(g2[included])
    eta = power_budget * float(g2[included].min())
    tx = np.zeros(channel.num_devices, dtype=np.complex128)
    tx[included] = math.sqrt(eta) * channel.gains[included].conj() / g2[included]
    gains = np.where(included, 1.0 + 0.0j, 0.0j)
    excluded = tuple(int(i) for i in np.flatnonzero(~included))
    return PowerAllocation(tx, eta, power_budget, gains, excluded, "truncated_inversion")


def _capped_inversion_mse_terms(eta: float, g2: np.ndarray, power_budget: float, noise_variance: float) -> float:
    """K^2 * MSE for per-device powers min(budget, eta/|h|^2) at a given eta."""
    scaled = power_budget * g2
    full = scaled < eta
    misalignment = np.sqrt(scaled[full] / eta) - 1.0
    return float(np.dot(misalignment, misalignment)) + noise_variance / eta


def _golden_section(fn, lo: float, hi: float, rel_tol: float = 1e-10) -> tuple[float, float]:
    """Minimize a unimodal fn over [lo, hi]; returns (argmin, min)."""
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while (b - a) > rel_tol * max(abs(a), abs(b), 1e-300):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fn(x2)
    x = 0.5 * (a + b)
    return x, fn(x)


def threshold_optimal_policy(channel: ChannelRealization, power_budget: float) -> PowerAllocation:
    """Error-optimal power control: full power below a gain threshold, inversion above.

    Per-device power is min(budget, eta / |h_k|^2); eta is chosen by a
    derivative-free bracketing search to minimize the closed-form error of
    :func:`analytic_mse`.  The search runs golden-section inside every
    segment between consecutive breakpoints budget*|h_k|^2 (the objective
    is convex in 1/sqrt(eta) within a segment but can be multimodal across
    segments) and keeps uniform inversion's eta as a candidate, so the
    result never does worse than uniform inversion.

    The induced structure is binary: devices with |h_k|^2 < eta/budget
    transmit at full power (and arrive misaligned), the rest invert
    exactly.  Devices sitting exactly on the threshold count as inverting;
    both branches coincide there.
    """
    if power_budget <= 0:
        raise InvalidArgumentError("power_budget must be > 0")
    g2 = channel.gain_powers()
    _check_nonzero_gains(g2)
    sigma2 = channel.noise_variance

    def objective(eta: float) -> float:
        return _capped_inversion_mse_terms(eta, g2, power_budget, sigma2)

    eta_uniform = power_budget * float(g2.min())
    lo = 1e-6 * eta_uniform
    hi = power_budget * float(g2.max())

    breakpoints = np.unique(np.clip(power_budget * g2, lo, hi))
    edges = np.unique(np.concatenate(([lo], breakpoints, [hi])))
    best_eta, best_val = eta_uniform, objective(eta_uniform)
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        x, v = _golden_section(objective, a, b)
        for cand_eta, cand_val in ((x, v), (a, objective(a)), (b, objective(b))):
            if cand_val < best_val:
                best_eta, best_val = cand_eta, cand_val

    eta = best_eta
    full = g2 < eta / power_budget
    tx = np.empty(channel.num_devices, dtype=np.complex128)
    aligned_phase = channel.gains.conj() / np.abs(channel.gains)
    tx[full] = math.sqrt(power_budget) * aligned_phase[full]
    tx[~full] = math.sqrt(eta) * channel.gains[~full].conj() / g2[~full]
    gains = np.ones(channel.num_devices, dtype=np.complex128)
    gains[full] = np.sqrt(power_budget * g2[full] / eta)
    return PowerAllocation(tx, eta, power_budget, gains, (), "threshold_optimal")


def analytic_mse(channel: ChannelRealization, alloc: PowerAllocation) -> float:
    """Closed-form per-round MSE of the average-estimate.

    For zero-mean unit-variance independent pre-processed sources and a
    phase-compensated allocation (all built-in policies), the error of the
    sum-estimate scaled to the average decomposes into misalignment plus
    noise:

        MSE = (1/K^2) * [ sum_k (|h_k b_k|/sqrt(eta) - 1)^2 + sigma^2/eta ]

    Excluded devices contribute their full unit of misalignment (the
    exclusion bias).  This expression is validated against brute-force
    Monte-Carlo simulation in the test suite before anything optimizes it.
    """
    if alloc.num_devices != channel.num_devices:
        raise InvalidArgumentError("allocation and channel disagree on the number of devices")
    misalignment = np.abs(alloc.alignment_gains) - 1.0
    terms = float(np.dot(misalignment, misalignment))
    k = channel.num_devices
    return (terms + channel.noise_variance / alloc.alignment_factor) / (k * k)


# ---------------------------------------------------------------------------
# Round simulation
# ---------------------------------------------------------------------------

def mac_aggregate(
    symbols: np.ndarray,
    alignment_gains: np.ndarray,
    noise_scale: float,
    rng: np.random.Generator | int | None = None,
) -> np.ndarray:
    """Superpose real symbol rows over the MAC, in the equalized domain.

    symbols: (K,) or (K, D) real per-device transmit values (already
    pre-processed).  Returns the denoised real aggregate per column:
    Re(sum_k c_k s_kd) + noise, with noise drawn N(0, noise_scale^2).
    Only the in-phase noise is drawn since detection discards the
    quadrature component.
    """
    s = np.asarray(symbols, dtype=np.float64)
    squeeze = s.ndim == 1
    s = np.atleast_2d(s.T).T if squeeze else s
    c = np.asarray(alignment_gains)
    if c.shape[0] != s.shape[0]:
        raise InvalidArgumentError("alignment_gains must have one entry per device")
    # contiguous copy: keeps the BLAS reduction path identical whether the
    # gains arrive as a real array or as the real view of a complex one
    aggregate = np.ascontiguousarray(np.real(c), dtype=np.float64) @ s
    if noise_scale > 0.0:
        aggregate = aggregate + noise_scale * as_generator(rng).standard_normal(s.shape[1])
    return aggregate[0] if squeeze and aggregate.ndim else aggregate


@dataclass(frozen=True)
class AirCompRoundResult:
    """Outcome of one aggregation round."""

    estimate: float
    ground_truth: float
    squared_error: float
    policy_name: str

    def __post_init__(self):
        expected = (self.estimate - self.ground_truth) ** 2
        tol = 1e-12 * max(expected, 1.0)
        if abs(self.squared_error - expected) > tol:
            raise InvalidArgumentError("squared_error inconsistent with estimate/ground_truth")


def run_round(
    data,
    func: NomographicFunction,
    channel: ChannelRealization,
    alloc: PowerAllocation,
    rng: np.random.Generator | int | None = None,
    *,
    source_stats: tuple[float, float] | None = None,
    count_mode: str = "survivors",
) -> AirCompRoundResult:
    """Simulate one AirComp round and score it against the noiseless truth.

    Each device transmits its pre-processed datum scaled by the policy's
    coefficient; the received superposition, denoised by sqrt(eta),
    estimates the pre-processed sum, and post-processing produces the
    function estimate.  The ground truth is the direct evaluation of the
    target on the actual data.

    source_stats: optional known (mean, std) of the pre-processed source
    distribution.  When given, sources are standardized before transmission
    and the affine map is undone on the received sum -- the convention under
    which :func:`analytic_mse` is exact.  The map must be data-independent,
    so the statistics are supplied, never estimated from the round's data.

    count_mode: how many devices the post-processing divides by when the
    policy excluded some -- "survivors" (default; unbiased conditional
    average) or "all".
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 1 or data.size != channel.num_devices:
        raise InvalidArgumentError("data must be 1-D with one value per device")
    if alloc.num_devices != channel.num_devices:
        raise InvalidArgumentError("allocation and channel disagree on the number of devices")
    if count_mode not in ("survivors", "all"):
        raise InvalidArgumentError("count_mode must be 'survivors' or 'all'")
    func.check_domain(data)

    sources = np.asarray(func.pre(data), dtype=np.float64)
    if source_stats is None:
        mean, scale = 0.0, 1.0
    else:
        mean, scale = float(source_stats[0]), float(source_stats[1])
        if scale <= 0:
            raise InvalidArgumentError("source std must be > 0")
    transmitted = (sources - mean) / scale

    noise_scale = math.sqrt(channel.noise_variance / alloc.alignment_factor)
    received = mac_aggregate(transmitted, alloc.alignment_gains, noise_scale, rng)

    count = alloc.num_included if count_mode == "survivors" else channel.num_devices
    if count == 0:
        raise EmptyAggregationError("no devices left in the aggregation")
    sum_estimate = scale * float(received) + count * mean
    estimate = float(func.post(sum_estimate, count))
    ground_truth = float(func.direct(data))
    return AirCompRoundResult(estimate, ground_truth, (estimate - ground_truth) ** 2, alloc.policy)
