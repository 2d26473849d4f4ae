"""Experiment harness: declarative configs, deterministic sweeps, and
plot-ready result files.

Configs are flat ``key = value`` text files validated against a strict
per-experiment schema: unknown keys, type mismatches and missing required
keys are rejected with the offending key and line before any computation
starts.  Every config key can be overridden by an environment variable
named ``AIRCOMP_SIM_<KEY>`` (uppercase).

Determinism contract: a config's content hash (kind, seed and parameters;
neither the trial count nor the output path participate) seeds every
trial as hash(config_hash, trial_index), so records never depend on
execution order, worker count, or how many trials ran before.  Completed
trials are journaled to ``<output>.partial`` so an interrupted run resumes
by trial index and still produces a byte-identical final file.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .apps import (
    AGGREGATION_MODES,
    ConsensusState,
    FederatedRun,
    GaussianMixtureTask,
    SensingScenario,
    make_policy,
    run_consensus,
    run_sensing,
    train_federated,
)
from .channel import draw_mimo_rayleigh, draw_rayleigh
from .core import analytic_mse, mac_aggregate, make_function
from .digital import LatencyModel, aircomp_round_latency, ofdma_round_latency
from .errors import ConfigError, EmptyResultError, InvalidArgumentError
from .mimo import local_search_beamformer, min_gain_power, mimo_mse, subspace_heuristic_beamformer
from .rng import derive_seed

ENV_PREFIX = "AIRCOMP_SIM_"


# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------

def _parse_int(text: str) -> int:
    return int(text)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_str(text: str) -> str:
    return text


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part.strip()) for part in text.split(",") if part.strip())


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part.strip()) for part in text.split(",") if part.strip())


_REQUIRED = object()


@dataclass(frozen=True)
class FieldSpec:
    parse: callable
    default: object = _REQUIRED
    help: str = ""

    @property
    def required(self) -> bool:
        return self.default is _REQUIRED


_CHANNEL_KEYS = {
    "num_devices": FieldSpec(_parse_int, help="number of devices K"),
    "power_budget": FieldSpec(_parse_float, 1.0, "per-device transmit power cap"),
}

SCHEMAS: dict[str, dict[str, FieldSpec]] = {
    "mse_vs_snr": {
        **_CHANNEL_KEYS,
        "noise_variances": FieldSpec(_parse_float_list, help="receiver noise powers to sweep"),
        "policy": FieldSpec(_parse_str, "uniform_inversion", "power-control policy"),
        "truncation_threshold": FieldSpec(_parse_float, 0.0, "gain-power cutoff for truncation"),
        "mc_rounds": FieldSpec(_parse_int, 0, "Monte-Carlo rounds per point (0 = analytic only)"),
    },
    "policy_comparison": {
        **_CHANNEL_KEYS,
        "noise_variances": FieldSpec(_parse_float_list, help="receiver noise powers to sweep"),
        "truncation_threshold": FieldSpec(_parse_float, 0.1, "cutoff used by the truncated policy"),
    },
    "mimo_beamformer": {
        **_CHANNEL_KEYS,
        "num_antennas": FieldSpec(_parse_int, help="server antennas N"),
        "restarts": FieldSpec(_parse_int, 8, "local-search restarts"),
        "noise_variance": FieldSpec(_parse_float, 1.0, "receiver noise power"),
    },
    "latency_vs_devices": {
        "num_parameters": FieldSpec(_parse_int, help="parameters per aggregation round"),
        "device_counts": FieldSpec(_parse_int_list, help="device counts K to sweep"),
        "num_subchannels": FieldSpec(_parse_int, 1000, "orthogonal sub-channels"),
        "bits_per_parameter": FieldSpec(_parse_int, 16, "quantization depth of the baseline"),
        "target_ber": FieldSpec(_parse_float, 1e-3, "bit-error-rate target"),
        "mean_rx_snr": FieldSpec(_parse_float, 100.0, "receive SNR (linear) for order selection"),
    },
    "federated": {
        **_CHANNEL_KEYS,
        "rounds": FieldSpec(_parse_int, help="training rounds"),
        "aggregation_mode": FieldSpec(_parse_str, help=f"one of {AGGREGATION_MODES}"),
        "learning_rate": FieldSpec(_parse_float, 0.5, "server step size"),
        "sign_learning_rate": FieldSpec(_parse_float, 0.02, "step size for sign updates"),
        "noise_variance": FieldSpec(_parse_float, 0.0, "receiver noise power"),
        "policy": FieldSpec(_parse_str, "uniform_inversion", "analog power-control policy"),
        "truncation_threshold": FieldSpec(_parse_float, 0.0, "gain-power cutoff"),
        "feature_dim": FieldSpec(_parse_int, 5, "task feature dimension"),
        "samples_per_device": FieldSpec(_parse_int, 25, "training samples per device"),
        "separation": FieldSpec(_parse_float, 2.0, "class separation of the mixture"),
        "test_samples": FieldSpec(_parse_int, 400, "held-out evaluation samples"),
        "num_subchannels": FieldSpec(_parse_int, 1000, "orthogonal sub-channels"),
        "bits_per_parameter": FieldSpec(_parse_int, 16, "baseline quantization depth"),
        "target_ber": FieldSpec(_parse_float, 1e-3, "baseline bit-error-rate target"),
        "mean_rx_snr": FieldSpec(_parse_float, 100.0, "baseline receive SNR (linear)"),
    },
    "consensus": {
        "num_agents": FieldSpec(_parse_int, help="number of agents"),
        "rounds": FieldSpec(_parse_int, help="protocol rounds"),
        "step_size": FieldSpec(_parse_float, 0.5, "weight on the peer average"),
        "noise_std": FieldSpec(_parse_float, 0.0, "noise std on each received peer-sum"),
        "initial_spread": FieldSpec(_parse_float, 1.0, "std of the random initial states"),
    },
    "sensing": {
        "num_sensors": FieldSpec(_parse_int, help="number of sensors"),
        "field_value": FieldSpec(_parse_float, help="ground-truth field value"),
        "measurement_noise_std": FieldSpec(_parse_float, 0.0, "sensor reading noise"),
        "function": FieldSpec(_parse_str, "arithmetic_mean", "fusion target function"),
        "sharpness": FieldSpec(_parse_float, 10.0, "soft_max sharpness"),
        "policy": FieldSpec(_parse_str, "uniform_inversion", "power-control policy"),
        "truncation_threshold": FieldSpec(_parse_float, 0.0, "gain-power cutoff"),
        "noise_variance": FieldSpec(_parse_float, 1.0, "receiver noise power"),
        "power_budget": FieldSpec(_parse_float, 1.0, "per-device transmit power cap"),
    },
}

_COMMON_KEYS = {
    "experiment": FieldSpec(_parse_str, help="experiment kind"),
    "seed": FieldSpec(_parse_int, 0, "master seed"),
    "num_trials": FieldSpec(_parse_int, 1, "independent trials"),
    "output": FieldSpec(_parse_str, "", "output file path"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated, fully-defaulted experiment description."""

    experiment_kind: str
    parameters: dict
    seed: int = 0
    num_trials: int = 1
    output_path: str | None = None

    def __post_init__(self):
        if self.experiment_kind not in SCHEMAS:
            raise ConfigError(f"unknown experiment kind '{self.experiment_kind}'")
        if self.num_trials < 1:
            raise ConfigError("num_trials must be >= 1")
        schema = SCHEMAS[self.experiment_kind]
        params = dict(self.parameters)
        for key in params:
            if key not in schema:
                raise ConfigError(f"unknown key '{key}' for experiment '{self.experiment_kind}'")
        for key, spec in schema.items():
            if key not in params:
                if spec.required:
                    raise ConfigError(f"missing required key '{key}' for '{self.experiment_kind}'")
                params[key] = spec.default
        object.__setattr__(self, "parameters", params)

    def content_hash(self) -> str:
        """64-bit content hash of kind, seed and parameters (hex).

        num_trials and the output path stay out on purpose: per-trial seeds
        derive from this hash, and extending a sweep or redirecting its
        output must not change already-computed trials.
        """
        payload = {
            "experiment": self.experiment_kind,
            "seed": self.seed,
            "parameters": {k: self.parameters[k] for k in sorted(self.parameters)},
        }
        digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).digest()
        return digest[:8].hex()

    def trial_seed(self, trial_index: int) -> int:
        return derive_seed(self.content_hash(), trial_index)


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical text form; load_config(serialize_config(c)) round-trips."""
    lines = [
        f"experiment = {config.experiment_kind}",
        f"seed = {config.seed}",
        f"num_trials = {config.num_trials}",
    ]
    if config.output_path:
        lines.append(f"output = {config.output_path}")
    for key in sorted(config.parameters):
        value = config.parameters[key]
        if isinstance(value, tuple):
            rendered = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{key} = {rendered}")
    return "\n".join(lines) + "\n"


def _parse_lines(lines, origin: str) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{origin}:{lineno}: empty key")
        if key in entries:
            raise ConfigError(f"{origin}:{lineno}: duplicate key '{key}'")
        entries[key] = (value, lineno)
    return entries


def load_config(path) -> ExperimentConfig:
    """Parse and validate a config file (strict: unknown keys rejected)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    entries = _parse_lines(path.read_text().splitlines(), str(path))
    return _config_from_entries(entries, str(path))


def load_config_text(text: str, origin: str = "<config>") -> ExperimentConfig:
    """Parse a config from a string (used by round-trip tooling and tests)."""
    return _config_from_entries(_parse_lines(text.splitlines(), origin), origin)


def _config_from_entries(entries: dict[str, tuple[str, int]], origin: str) -> ExperimentConfig:
    if "experiment" not in entries:
        raise ConfigError(f"{origin}: missing required key 'experiment'")
    kind = entries["experiment"][0]
    if kind not in SCHEMAS:
        raise ConfigError(
            f"{origin}:{entries['experiment'][1]}: unknown experiment kind '{kind}'"
        )
    schema = SCHEMAS[kind]

    # environment overrides, applied before validation
    merged: dict[str, tuple[str, int | None]] = {k: v for k, v in entries.items()}
    for key in list(_COMMON_KEYS) + list(schema):
        env_value = os.environ.get(ENV_PREFIX + key.upper())
        if env_value is not None and key != "experiment":
            merged[key] = (env_value, None)

    common: dict[str, object] = {}
    params: dict[str, object] = {}
    for key, (text, lineno) in merged.items():
        where = f"{origin}:{lineno}" if lineno is not None else f"{origin} (env {ENV_PREFIX}{key.upper()})"
        if key in _COMMON_KEYS:
            spec = _COMMON_KEYS[key]
            target = common
        elif key in schema:
            spec = schema[key]
            target = params
        else:
            raise ConfigError(f"{where}: unknown key '{key}' for experiment '{kind}'")
        try:
            target[key] = spec.parse(text)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for '{key}': {exc}") from exc

    for key, spec in schema.items():
        if spec.required and key not in params:
            raise ConfigError(f"{origin}: missing required key '{key}' for '{kind}'")

    return ExperimentConfig(
        experiment_kind=kind,
        parameters=params,
        seed=int(common.get("seed", 0)),
        num_trials=int(common.get("num_trials", 1)),
        output_path=str(common["output"]) if common.get("output") else None,
    )


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunRecord:
    """One sweep point of one trial, with its metrics."""

    config_hash: str
    sweep_point: dict
    metrics: dict
    trial_index: int
    toolkit_version: str = __version__

    def to_json(self) -> str:
        payload = {
            "config_hash": self.config_hash,
            "trial_index": self.trial_index,
            "toolkit_version": self.toolkit_version,
            "sweep_point": self.sweep_point,
            "metrics": self.metrics,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "RunRecord":
        payload = json.loads(line)
        return cls(
            config_hash=payload["config_hash"],
            sweep_point=payload["sweep_point"],
            metrics=payload["metrics"],
            trial_index=payload["trial_index"],
            toolkit_version=payload["toolkit_version"],
        )


# ---------------------------------------------------------------------------
# Experiment bodies: one function per kind, one trial at a time
# ---------------------------------------------------------------------------

def _rows_mse_vs_snr(p: dict, rng: np.random.Generator):
    channel_seed = int(rng.integers(2**62))
    rows = []
    for sigma2 in p["noise_variances"]:
        channel = draw_rayleigh(p["num_devices"], channel_seed, sigma2)
        alloc = make_policy(p["policy"], channel, p["power_budget"], p["truncation_threshold"])
        metrics = {"mse": analytic_mse(channel, alloc), "alignment_factor": alloc.alignment_factor}
        if p["mc_rounds"] > 0:
            sources = rng.standard_normal((channel.num_devices, p["mc_rounds"]))
            scale = np.sqrt(sigma2 / alloc.alignment_factor)
            received = mac_aggregate(sources, alloc.alignment_gains, float(scale), rng)
            count = channel.num_devices
            errors = (received - sources.sum(axis=0)) / count
            metrics["empirical_mse"] = float(np.mean(errors**2))
        rows.append(({"noise_variance": sigma2}, metrics))
    return rows


def _rows_policy_comparison(p: dict, rng: np.random.Generator):
    channel_seed = int(rng.integers(2**62))
    rows = []
    for sigma2 in p["noise_variances"]:
        channel = draw_rayleigh(p["num_devices"], channel_seed, sigma2)
        metrics = {}
        for policy in ("uniform_inversion", "truncated_inversion", "threshold_optimal"):
            alloc = make_policy(policy, channel, p["power_budget"], p["truncation_threshold"])
            metrics[f"mse_{policy}"] = analytic_mse(channel, alloc)
        rows.append(({"noise_variance": sigma2}, metrics))
    return rows


def _rows_mimo_beamformer(p: dict, rng: np.random.Generator):
    channel_seed = int(rng.integers(2**62))
    channel = draw_mimo_rayleigh(p["num_devices"], p["num_antennas"], channel_seed, p["noise_variance"])
    heuristic = subspace_heuristic_beamformer(channel)
    search = local_search_beamformer(channel, p["restarts"], rng)
    obj_h = min_gain_power(channel, heuristic.vector)
    obj_s = min_gain_power(channel, search.vector)
    metrics = {
        "objective_heuristic": obj_h,
        "objective_search": obj_s,
        "objective_gap": (obj_s - obj_h) / obj_s if obj_s > 0 else 0.0,
        "mse_heuristic": mimo_mse(channel, heuristic, p["power_budget"]),
        "mse_search": mimo_mse(channel, search, p["power_budget"]),
    }
    return [({"num_devices": p["num_devices"], "num_antennas": p["num_antennas"]}, metrics)]


def _latency_model(p: dict) -> LatencyModel:
    return LatencyModel(p["num_subchannels"], p["bits_per_parameter"], p["target_ber"], p["mean_rx_snr"])


def _rows_latency_vs_devices(p: dict, rng: np.random.Generator):
    model = _latency_model(p)
    rows = []
    for count in p["device_counts"]:
        aircomp = aircomp_round_latency(p["num_parameters"], model)
        ofdma = ofdma_round_latency(p["num_parameters"], count, model)
        rows.append(
            (
                {"num_devices": count},
                {
                    "aircomp_latency_slots": float(aircomp),
                    "ofdma_latency_slots": float(ofdma),
                    "latency_ratio": ofdma / aircomp,
                },
            )
        )
    return rows


def _rows_federated(p: dict, rng: np.random.Generator):
    task = GaussianMixtureTask(
        p["num_devices"],
        p["samples_per_device"],
        p["feature_dim"],
        p["separation"],
        p["test_samples"],
        seed=int(rng.integers(2**62)),
    )
    run = FederatedRun(
        num_devices=p["num_devices"],
        model_dim=task.model_dim,
        rounds=p["rounds"],
        aggregation_mode=p["aggregation_mode"],
        learning_rate=p["learning_rate"],
        power_budget=p["power_budget"],
        noise_variance=p["noise_variance"],
        policy=p["policy"],
        truncation_threshold=p["truncation_threshold"],
        sign_learning_rate=p["sign_learning_rate"],
        latency_model=_latency_model(p),
    )
    trained = train_federated(run, task, channel_seed=int(rng.integers(2**62)), rng=rng)
    rows = []
    cumulative = 0
    for index, (acc, slots) in enumerate(zip(trained.accuracy_trace, trained.latency_trace)):
        cumulative += slots
        rows.append(
            (
                {"round": index},
                {
                    "accuracy": acc,
                    "latency_slots": float(slots),
                    "cumulative_latency_slots": float(cumulative),
                },
            )
        )
    return rows


def _rows_consensus(p: dict, rng: np.random.Generator):
    states = p["initial_spread"] * rng.standard_normal(p["num_agents"])
    state = ConsensusState(p["num_agents"], states, 0, p["step_size"])
    initial_mean = state.mean()
    rows = [({"round": 0}, {"dispersion": state.dispersion(), "mean_drift": 0.0})]
    for index in range(1, p["rounds"] + 1):
        state = consensus_round(state, None, p["noise_std"], rng)
        rows.append(
            (
                {"round": index},
                {"dispersion": state.dispersion(), "mean_drift": abs(state.mean() - initial_mean)},
            )
        )
    return rows


def _rows_sensing(p: dict, rng: np.random.Generator):
    kwargs = {"sharpness": p["sharpness"]} if p["function"] == "soft_max" else {}
    target = make_function(p["function"], **kwargs)
    scenario = SensingScenario(p["num_sensors"], p["field_value"], p["measurement_noise_std"], target)
    channel = draw_rayleigh(p["num_sensors"], int(rng.integers(2**62)), p["noise_variance"])
    result = run_sensing(
        scenario,
        channel,
        p["policy"],
        rng,
        power_budget=p["power_budget"],
        truncation_threshold=p["truncation_threshold"],
    )
    metrics = {
        "estimate": result.estimate,
        "ground_truth": result.ground_truth,
        "squared_error": result.squared_error,
    }
    return [({"function": p["function"], "policy": p["policy"]}, metrics)]


_RUNNERS = {
    "mse_vs_snr": _rows_mse_vs_snr,
    "policy_comparison": _rows_policy_comparison,
    "mimo_beamformer": _rows_mimo_beamformer,
    "latency_vs_devices": _rows_latency_vs_devices,
    "federated": _rows_federated,
    "consensus": _rows_consensus,
    "sensing": _rows_sensing,
}


def expected_records_per_trial(config: ExperimentConfig) -> int:
    p = config.parameters
    kind = config.experiment_kind
    if kind in ("mse_vs_snr", "policy_comparison"):
        return len(p["noise_variances"])
    if kind == "latency_vs_devices":
        return len(p["device_counts"])
    if kind == "federated":
        return p["rounds"]
    if kind == "consensus":
        return p["rounds"] + 1
    return 1


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def _run_trial(config: ExperimentConfig, trial_index: int) -> list[RunRecord]:
    rng = np.random.default_rng(config.trial_seed(trial_index))
    rows = _RUNNERS[config.experiment_kind](config.parameters, rng)
    config_hash = config.content_hash()
    return [
        RunRecord(config_hash, dict(sweep), {k: float(v) for k, v in metrics.items()}, trial_index)
        for sweep, metrics in rows
    ]


def run_experiment(
    config: ExperimentConfig,
    workers: int = 1,
    resume: bool = True,
) -> list[RunRecord]:
    """Execute every trial of a config; deterministic in (config, seed).

    Records are journaled per completed trial when the config names an
    output path, so re-running a partially completed sweep recomputes only
    the missing trial indices.  The returned list is sorted by trial, then
    sweep order, independent of the worker count.
    """
    if workers < 1:
        raise InvalidArgumentError("workers must be >= 1")
    expected = expected_records_per_trial(config)
    config_hash = config.content_hash()

    done: dict[int, list[RunRecord]] = {}
    partial_path = Path(str(config.output_path) + ".partial") if config.output_path else None
    if resume and partial_path and partial_path.exists():
        journaled: dict[int, list[RunRecord]] = {}
        for line in partial_path.read_text().splitlines():
            if not line.strip():
                continue
            record = RunRecord.from_json(line)
            if record.config_hash == config_hash:
                journaled.setdefault(record.trial_index, []).append(record)
        done = {
            trial: records
            for trial, records in journaled.items()
            if len(records) == expected and trial < config.num_trials
        }

    pending = [t for t in range(config.num_trials) if t not in done]
    if pending:
        if workers == 1:
            computed = [_run_trial(config, t) for t in pending]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                computed = list(pool.map(lambda t: _run_trial(config, t), pending))
        for trial, records in zip(pending, computed):
            done[trial] = records
            if partial_path:
                partial_path.parent.mkdir(parents=True, exist_ok=True)
                with partial_path.open("a") as fh:
                    for record in records:
                        fh.write(record.to_json() + "\n")

    return [record for trial in sorted(done) for record in done[trial]]


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_results(records: list[RunRecord], format: str = "csv", path=None) -> str:
    """Render records to CSV or JSON-lines; byte-stable for equal records.

    CSV columns: config_hash, trial_index, toolkit_version, the sweep keys
    (sorted, prefixed ``sweep:``), then the metric keys (sorted, prefixed
    ``metric:``).  Returns the rendered text; writes it to `path` when
    given.
    """
    if not records:
        raise EmptyResultError("no records to export")
    if format not in ("csv", "jsonl"):
        raise InvalidArgumentError("format must be 'csv' or 'jsonl'")

    if format == "jsonl":
        text = "".join(record.to_json() + "\n" for record in records)
    else:
        sweep_keys = sorted({k for r in records for k in r.sweep_point})
        metric_keys = sorted({k for r in records for k in r.metrics})
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(
            ["config_hash", "trial_index", "toolkit_version"]
            + [f"sweep:{k}" for k in sweep_keys]
            + [f"metric:{k}" for k in metric_keys]
        )
        for r in records:
            writer.writerow(
                [r.config_hash, r.trial_index, r.toolkit_version]
                + [_format_value(r.sweep_point.get(k, "")) for k in sweep_keys]
                + [_format_value(r.metrics.get(k, "")) for k in metric_keys]
            )
        text = buffer.getvalue()

    if path is not None:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    return text


def _parse_cell(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_results(path, format: str | None = None) -> list[RunRecord]:
    """Read back an exported result file (format inferred from the suffix)."""
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix in (".jsonl", ".ndjson") else "csv"
    text = path.read_text()
    if format == "jsonl":
        return [RunRecord.from_json(line) for line in text.splitlines() if line.strip()]
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    records = []
    for row in body:
        cells = dict(zip(header, row))
        sweep = {
            k.split(":", 1)[1]: _parse_cell(v)
            for k, v in cells.items()
            if k.startswith("sweep:") and v != ""
        }
        metrics = {
            k.split(":", 1)[1]: float(v)
            for k, v in cells.items()
            if k.startswith("metric:") and v != ""
        }
        records.append(
            RunRecord(
                cells["config_hash"], sweep, metrics, int(cells["trial_index"]), cells["toolkit_version"]
            )
        )
    return records


def finalize_run(config: ExperimentConfig, records: list[RunRecord], format: str = "csv") -> str | None:
    """Export to the config's output path and drop the trial journal."""
    if not config.output_path:
        return None
    export_results(records, format, config.output_path)
    partial = Path(config.output_path + ".partial")
    if partial.exists():
        partial.unlink()
    return config.output_path
