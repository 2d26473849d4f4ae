"""Application harnesses: distributed sensing, federated learning with
over-the-air gradient aggregation, and iterative average consensus.

These are desk-scale driver loops around the transceiver primitives.  The
federated harness trains a logistic model on a synthetic two-class
Gaussian-mixture task (any object satisfying the same small
gradient-oracle interface plugs in); the consensus harness iterates
simultaneous-broadcast averaging on a complete graph of full-duplex
agents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelRealization, draw_rayleigh
from .core import (
    NomographicFunction,
    mac_aggregate,
    run_round,
    threshold_optimal_policy,
    truncated_inversion_policy,
    uniform_inversion_policy,
)
from .digital import LatencyModel, aircomp_round_latency, ofdma_round_latency, ofdma_transmit, one_bit_aircomp
from .errors import DivergenceError, InvalidArgumentError
from .rng import as_generator, derive_seed

AGGREGATION_MODES = ("ideal", "analog_aircomp", "one_bit_aircomp", "ofdma")

_POLICIES = {
    "uniform_inversion": lambda chan, budget, thr: uniform_inversion_policy(chan, budget),
    "truncated_inversion": truncated_inversion_policy,
    "threshold_optimal": lambda chan, budget, thr: threshold_optimal_policy(chan, budget),
}


def make_policy(name: str, channel: ChannelRealization, power_budget: float, truncation_threshold: float = 0.0):
    """Build a power allocation by policy name."""
    if name not in _POLICIES:
        raise InvalidArgumentError(f"unknown policy '{name}' (choose from {sorted(_POLICIES)})")
    return _POLICIES[name](channel, power_budget, truncation_threshold)


# ---------------------------------------------------------------------------
# Distributed sensing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SensingScenario:
    """A field of sensors measuring one scalar ground-truth value."""

    num_sensors: int
    field_value: float
    measurement_noise_std: float
    target: NomographicFunction

    def __post_init__(self):
        if self.num_sensors < 1:
            raise InvalidArgumentError("num_sensors must be >= 1")
        if self.measurement_noise_std < 0:
            raise InvalidArgumentError("measurement_noise_std must be >= 0")


def run_sensing(
    scenario: SensingScenario,
    channel: ChannelRealization,
    policy: str,
    rng: np.random.Generator | int | None = None,
    *,
    power_budget: float = 1.0,
    truncation_threshold: float = 0.0,
    readings: np.ndarray | None = None,
):
    """One fused measurement: draw readings, aggregate, score.

    Readings are field_value plus Gaussian measurement noise (or the
    explicit `readings` override); the fusion target is the scenario's
    function of the *actual* readings, so the reported error isolates the
    channel, not the sensors.
    """
    if channel.num_devices != scenario.num_sensors:
        raise InvalidArgumentError("channel size must match num_sensors")
    gen = as_generator(rng) if rng is not None else None
    if readings is None:
        if gen is None and scenario.measurement_noise_std > 0:
            raise InvalidArgumentError("rng required to draw noisy readings")
        noise = scenario.measurement_noise_std * gen.standard_normal(scenario.num_sensors) if gen else 0.0
        readings = scenario.field_value + noise * np.ones(scenario.num_sensors)
    readings = np.asarray(readings, dtype=np.float64)
    alloc = make_policy(policy, channel, power_budget, truncation_threshold)
    return run_round(readings, scenario.target, channel, alloc, gen)


# ---------------------------------------------------------------------------
# Federated learning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FederatedRun:
    """Configuration and (after training) traces of one federated run.

    aggregation_mode: 'ideal' (exact mean), 'analog_aircomp',
    'one_bit_aircomp' (majority-vote sign updates), or 'ofdma'
    (quantize-and-forward baseline).
    """

    num_devices: int
    model_dim: int
    rounds: int
    aggregation_mode: str
    learning_rate: float
    accuracy_trace: tuple[float, ...] = ()
    latency_trace: tuple[int, ...] = ()
    power_budget: float = 1.0
    noise_variance: float = 0.0
    policy: str = "uniform_inversion"
    truncation_threshold: float = 0.0
    count_mode: str = "survivors"
    sign_learning_rate: float | None = None
    latency_model: LatencyModel | None = None

    def __post_init__(self):
        if self.aggregation_mode not in AGGREGATION_MODES:
            raise InvalidArgumentError(f"aggregation_mode must be one of {AGGREGATION_MODES}")
        if self.rounds < 1 or self.num_devices < 1 or self.model_dim < 1:
            raise InvalidArgumentError("rounds, num_devices and model_dim must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidArgumentError("learning_rate must be > 0")
        for trace in (self.accuracy_trace, self.latency_trace):
            if trace and len(trace) != self.rounds:
                raise InvalidArgumentError("traces must have one entry per round")


class GaussianMixtureTask:
    """Two-class Gaussian-mixture classification with a logistic model.

    The gradient-oracle interface the federated harness needs:
    ``num_devices``, ``model_dim``, ``initial_weights()``,
    ``local_gradient(weights, device)``, ``global_loss(weights)`` and
    ``test_accuracy(weights)``.  Anything providing those plugs into
    :func:`train_federated`.
    """

    def __init__(
        self,
        num_devices: int,
        samples_per_device: int = 25,
        feature_dim: int = 5,
        separation: float = 2.0,
        test_samples: int = 400,
        seed: int = 0,
    ):
        if num_devices < 1 or samples_per_device < 1 or feature_dim < 1:
            raise InvalidArgumentError("task dimensions must be >= 1")
        rng = np.random.default_rng(seed)
        self.num_devices = num_devices
        self.model_dim = feature_dim + 1  # weights plus bias
        offset = separation / math.sqrt(feature_dim) * np.ones(feature_dim)

        def draw(n: int) -> tuple[np.ndarray, np.ndarray]:
            labels = np.where(rng.random(n) < 0.5, 1.0, -1.0)
            feats = rng.standard_normal((n, feature_dim)) + labels[:, None] * offset
            return np.hstack([feats, np.ones((n, 1))]), labels

        self._shards = [draw(samples_per_device) for _ in range(num_devices)]
        self._test_x, self._test_y = draw(test_samples)

    def initial_weights(self) -> np.ndarray:
        return np.zeros(self.model_dim)

    def local_gradient(self, weights: np.ndarray, device: int) -> np.ndarray:
        x, y = self._shards[device]
        margin = y * (x @ weights)
        # sigmoid(-margin) in overflow-safe form
        residual = -y * 0.5 * (1.0 - np.tanh(0.5 * margin))
        return (residual @ x) / x.shape[0]

    def global_loss(self, weights: np.ndarray) -> float:
        total, count = 0.0, 0
        for x, y in self._shards:
            margin = y * (x @ weights)
            total += float(np.sum(np.logaddexp(0.0, -margin)))
            count += x.shape[0]
        return total / count

    def test_accuracy(self, weights: np.ndarray) -> float:
        predicted = np.where(self._test_x @ weights >= 0, 1.0, -1.0)
        return float(np.mean(predicted == self._test_y))


def train_federated(
    run: FederatedRun,
    dataset_spec,
    channel_seed: int,
    rng: np.random.Generator | int | None = 0,
) -> FederatedRun:
    """Run the synchronous federated loop and return the run with traces.

    Per round: every device computes its local full-batch gradient, the
    gradients are aggregated according to the run's mode over a fresh
    block-fading channel, and the server applies the aggregate as a
    gradient step.  Accuracy and the round's multiple-access latency are
    recorded after each update.  A run whose loss exceeds 1000x the
    initial loss aborts with a diagnostic.
    """
    if dataset_spec.num_devices != run.num_devices or dataset_spec.model_dim != run.model_dim:
        raise InvalidArgumentError("dataset_spec and run disagree on dimensions")
    gen = as_generator(rng)
    latency_model = run.latency_model or LatencyModel(1000, 16, 1e-3, 100.0)
    sign_rate = run.sign_learning_rate if run.sign_learning_rate is not None else run.learning_rate

    weights = dataset_spec.initial_weights()
    initial_loss = max(dataset_spec.global_loss(weights), 1e-12)
    accuracy: list[float] = []
    latency: list[int] = []

    for round_index in range(run.rounds):
        gradients = np.stack(
            [dataset_spec.local_gradient(weights, k) for k in range(run.num_devices)]
        )
        channel = draw_rayleigh(
            run.num_devices, derive_seed(channel_seed, round_index), run.noise_variance
        )
        if run.aggregation_mode == "ideal":
            update = mac_aggregate(gradients, np.ones(run.num_devices), 0.0) / run.num_devices
            step = run.learning_rate
            slots = 0
        elif run.aggregation_mode == "analog_aircomp":
            alloc = make_policy(run.policy, channel, run.power_budget, run.truncation_threshold)
            noise_scale = math.sqrt(run.noise_variance / alloc.alignment_factor)
            received = mac_aggregate(gradients, alloc.alignment_gains, noise_scale, gen)
            count = alloc.num_included if run.count_mode == "survivors" else run.num_devices
            update = received / count
            step = run.learning_rate
            slots = aircomp_round_latency(run.model_dim, latency_model)
        elif run.aggregation_mode == "one_bit_aircomp":
            signs = np.where(gradients >= 0.0, 1.0, -1.0)
            aggregate = one_bit_aircomp(
                signs, channel, run.power_budget, gen, run.truncation_threshold
            )
            update = aggregate.decoded_signs.astype(np.float64)
            step = sign_rate
            slots = aircomp_round_latency(run.model_dim, latency_model)
        else:  # ofdma
            received = np.stack(
                [
                    ofdma_transmit(g, latency_model.bits_per_parameter, gen, latency_model.target_ber)
                    for g in gradients
                ]
            )
            update = received.mean(axis=0)
            step = run.learning_rate
            slots = ofdma_round_latency(run.model_dim, run.num_devices, latency_model)

        weights = weights - step * update
        accuracy.append(dataset_spec.test_accuracy(weights))
        latency.append(slots)

        loss = dataset_spec.global_loss(weights)
        if loss > 1e3 * initial_loss:
            raise DivergenceError(
                f"loss {loss:.3g} exceeded 1000x initial {initial_loss:.3g} "
                f"at round {round_index} (mode={run.aggregation_mode})"
            )

    return replace(run, accuracy_trace=tuple(accuracy), latency_trace=tuple(latency))


# ---------------------------------------------------------------------------
# Average consensus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConsensusState:
    """Information states of the agents at one protocol round."""

    num_agents: int
    states: np.ndarray
    round_index: int = 0
    step_size: float = 0.5

    def __post_init__(self):
        states = np.array(self.states, dtype=np.float64)
        if states.ndim != 1 or states.size != self.num_agents:
            raise InvalidArgumentError("states must hold one value per agent")
        if self.num_agents < 1:
            raise InvalidArgumentError("num_agents must be >= 1")
        if not 0.0 < self.step_size <= 1.0:
            raise InvalidArgumentError("step_size must be in (0, 1]")
        if self.round_index < 0:
            raise InvalidArgumentError("round_index must be >= 0")
        states.flags.writeable = False
        object.__setattr__(self, "states", states)

    def dispersion(self) -> float:
        return float(self.states.max() - self.states.min())

    def mean(self) -> float:
        return float(np.mean(self.states))


def consensus_round(
    state: ConsensusState,
    channel_draws: list[ChannelRealization] | None = None,
    noise_std: float = 0.0,
    rng: np.random.Generator | int | None = None,
    power_budget: float = 1.0,
) -> ConsensusState:
    """One simultaneous-broadcast averaging step on the complete graph.

    Every full-duplex agent receives the superposition of all peers'
    analog-modulated states and updates

        x_i <- (1 - alpha) * x_i + alpha * (noisy peer average),

    with alpha the state's step size.  `channel_draws`, when given, holds
    one realization per receiving agent (K-1 peer gains each) and the
    peers invert their channels toward that receiver; otherwise the peers
    are received with unit gains and `noise_std` is the standard deviation
    of the noise on each received peer-sum.  Noiseless rounds preserve the
    global state mean exactly (up to rounding): the update matrix is
    doubly stochastic on the complete graph.
    """
    if state.num_agents < 2:
        raise InvalidArgumentError("consensus needs at least 2 agents")
    k = state.num_agents
    if channel_draws is not None and len(channel_draws) != k:
        raise InvalidArgumentError("need one channel realization per receiving agent")
    gen = as_generator(rng) if rng is not None else None

    peer_average = np.empty(k)
    for i in range(k):
        peers = np.delete(state.states, i)
        if channel_draws is None:
            received = mac_aggregate(peers, np.ones(k - 1), noise_std, gen)
        else:
            chan = channel_draws[i]
            if chan.num_devices != k - 1:
                raise InvalidArgumentError("each agent's channel must cover its K-1 peers")
            alloc = uniform_inversion_policy(chan, power_budget)
            scale = math.sqrt(chan.noise_variance / alloc.alignment_factor)
            received = mac_aggregate(peers, alloc.alignment_gains, scale, gen)
        peer_average[i] = received / (k - 1)

    alpha = state.step_size
    updated = (1.0 - alpha) * state.states + alpha * peer_average
    return ConsensusState(k, updated, state.round_index + 1, alpha)


def run_consensus(
    initial: ConsensusState,
    rounds: int,
    noise_std: float = 0.0,
    rng: np.random.Generator | int | None = None,
) -> list[float]:
    """Iterate consensus rounds; returns the dispersion trace.

    The trace starts with the initial dispersion, so it has rounds+1
    entries (rounds=0 returns just the initial dispersion).
    """
    if rounds < 0:
        raise InvalidArgumentError("rounds must be >= 0")
    gen = as_generator(rng) if rng is not None else None
    state = initial
    trace = [state.dispersion()]
    for _ in range(rounds):
        state = consensus_round(state, None, noise_std, gen)
        trace.append(state.dispersion())
    return trace
