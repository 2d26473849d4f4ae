"""Over-the-air computation (AirComp) simulation toolkit.

Models wireless data aggregation over fading multiple-access channels:
the linear-analog transceiver chain with channel pre-compensation and
magnitude alignment, power-control policies, aggregation beamforming for
a multi-antenna server, one-bit digital aggregation with majority-vote
decoding, and the application loops (sensing, federated learning,
average consensus) plus a deterministic experiment harness.
"""

__version__ = "0.1.0"

from .apps import (
    AGGREGATION_MODES,
    ConsensusState,
    FederatedRun,
    GaussianMixtureTask,
    SensingScenario,
    consensus_round,
    make_policy,
    run_consensus,
    run_sensing,
    train_federated,
)
from .channel import (
    ChannelRealization,
    MimoChannelRealization,
    OfdmTimingModel,
    apply_timing_offset,
    draw_mimo_rayleigh,
    draw_rayleigh,
    equalize_phase,
    timing_offset_phase,
)
from .core import (
    REGISTERED_FUNCTIONS,
    AirCompRoundResult,
    Interval,
    NomographicFunction,
    PowerAllocation,
    analytic_mse,
    mac_aggregate,
    make_function,
    run_round,
    threshold_optimal_policy,
    truncated_inversion_policy,
    uniform_inversion_policy,
)
from .digital import (
    LatencyModel,
    OneBitAggregate,
    aircomp_round_latency,
    ofdma_round_latency,
    ofdma_transmit,
    one_bit_aircomp,
    qam_quantize,
    select_modulation_order,
    square_qam_ber,
)
from .errors import (
    AirCompError,
    ConfigError,
    DegenerateChannelError,
    DivergenceError,
    DomainError,
    EmptyAggregationError,
    EmptyResultError,
    FunctionNotFoundError,
    InsufficientSubchannelsError,
    InvalidArgumentError,
)
from .harness import (
    ExperimentConfig,
    RunRecord,
    export_results,
    load_config,
    load_config_text,
    load_results,
    run_experiment,
    serialize_config,
)
from .mimo import (
    AggregationBeamformer,
    effective_gains,
    local_search_beamformer,
    mimo_mse,
    min_gain_power,
    projected_ascent,
    subspace_heuristic_beamformer,
)
from .rng import as_generator, derive_seed, spawn_generators
