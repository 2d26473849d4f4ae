"""Aggregation beamforming for a multi-antenna server.

With single-antenna devices and an N-antenna server applying a unit-norm
receive beamformer f, each device sees the scalar effective channel
g_k = f^H h_k and the problem reduces to the scalar chain of
:mod:`aircomp.core`: zero-forcing precoding inverts g_k, the alignment
factor becomes eta = P * min_k |f^H h_k|^2, and with perfect alignment the
error is pure noise,

    MSE = sigma^2 / (K^2 * eta) = sigma^2 / (K^2 * P * min_k |f^H h_k|^2).

Maximizing min_k |f^H h_k|^2 over the unit sphere therefore minimizes the
error; every beamformer design here targets that max-min objective.

Two constructions are provided: a closed-form heuristic that takes the
principal direction of the inverse-power weighted sum of channel subspaces
(leaning toward the weaker channels, which dominate the minimum), and a
multi-start projected-ascent search used as the reference optimizer.  The
heuristic's gap to the search is reported as data by the experiment
harness, never assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, MimoChannelRealization
from .core import analytic_mse, uniform_inversion_policy
from .errors import DegenerateChannelError, InvalidArgumentError
from .rng import as_generator

_UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True)
class AggregationBeamformer:
    """Unit-norm receive beamforming vector plus how it was built."""

    vector: np.ndarray
    construction: str = "fixed"

    def __post_init__(self):
        v = np.array(self.vector, dtype=np.complex128)
        if v.ndim != 1 or v.size < 1:
            raise InvalidArgumentError("beamformer vector must be a non-empty 1-D array")
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > _UNIT_NORM_TOL:
            raise InvalidArgumentError(f"beamformer must be unit norm, got {norm!r}")
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)

    @property
    def num_antennas(self) -> int:
        return self.vector.size


def effective_gains(channel: MimoChannelRealization, f: AggregationBeamformer) -> ChannelRealization:
    """Project each channel vector onto the beamformer: g_k = f^H h_k.

    A unit-norm beamformer leaves the noise power unchanged, so the scalar
    realization keeps the channel's noise variance.
    """
    if f.num_antennas != channel.num_antennas:
        raise InvalidArgumentError("beamformer and channel disagree on antenna count")
    gains = channel.matrices @ f.vector.conj()
    return ChannelRealization(gains, channel.noise_variance, channel.seed_tag)


def min_gain_power(channel: MimoChannelRealization, vector: np.ndarray) -> float:
    """The max-min objective: min_k |f^H h_k|^2 for a bare vector."""
    proj = channel.matrices @ np.asarray(vector).conj()
    return float(np.min((proj * proj.conj()).real))


def _canonical_phase(vector: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rotate a unit vector so its projection onto `reference` is real >= 0.

    The max-min objective is invariant to a global phase; this picks a
    deterministic representative (and makes the K=1 optimum literally the
    matched filter h/||h||).
    """
    z = np.vdot(vector, reference)
    mag = abs(z)
    if mag == 0.0:
        return vector
    return vector * (z / mag)


def subspace_heuristic_beamformer(channel: MimoChannelRealization) -> AggregationBeamformer:
    """Principal direction of the inverse-power weighted channel subspaces.

    Accumulates sum_k w_k * (h_k h_k^H / ||h_k||^2) with w_k = 1/||h_k||^2
    and returns its leading eigenvector.  The inverse-power weights pull
    the beamformer toward the weaker channels, equalizing effective gains.
    """
    h = channel.matrices
    norms2 = np.sum((h * h.conj()).real, axis=1)
    if np.any(norms2 == 0.0):
        raise DegenerateChannelError("a channel vector is identically zero")
    # M_ij = sum_k h_ki conj(h_kj) / ||h_k||^4; f^H M f = sum_k |f^H h_k|^2 / ||h_k||^4
    accum = h.T @ (h.conj() / (norms2 * norms2)[:, None])
    accum = 0.5 * (accum + accum.T.conj())
    _, vecs = np.linalg.eigh(accum)
    principal = vecs[:, -1]
    principal = principal / np.linalg.norm(principal)
    principal = _canonical_phase(principal, h[0])
    return AggregationBeamformer(principal, "subspace_heuristic")


def projected_ascent(
    channel: MimoChannelRealization,
    start: np.ndarray,
    max_iters: int = 400,
    step: float = 0.5,
) -> tuple[np.ndarray, list[float]]:
    """Monotone projected ascent of min_k |f^H h_k|^2 on the unit sphere.

    The ascent direction is the gradient of the tied-worst projection
    terms (falling back to the single worst term); backtracking accepts a
    step only if the objective strictly improves, so the returned history
    is non-decreasing by construction.
    """
    h = channel.matrices
    f = np.asarray(start, dtype=np.complex128)
    f = f / np.linalg.norm(f)
    history = [min_gain_power(channel, f)]
    for _ in range(max_iters):
        proj = h @ f.conj()  # proj_k = f^H h_k
        powers = (proj * proj.conj()).real
        current = float(powers.min())
        worst = int(np.argmin(powers))
        active = powers <= current * (1.0 + 1e-6) + 1e-300
        # ascent direction of |f^H h_k|^2 in f is h_k * conj(f^H h_k)
        directions = [
            (h[active] * proj[active, None].conj()).mean(axis=0),
            h[worst] * np.conj(proj[worst]),
        ]
        improved = False
        for d in directions:
            norm_d = np.linalg.norm(d)
            if norm_d == 0.0:
                continue
            trial = step
            while trial > 1e-12:
                cand = f + trial * (d / norm_d)
                cand = cand / np.linalg.norm(cand)
                value = min_gain_power(channel, cand)
                if value > current * (1.0 + 1e-14):
                    f, current = cand, value
                    improved = True
                    step = min(trial * 2.0, 4.0)
                    break
                trial *= 0.5
            if improved:
                break
        history.append(current)
        if not improved:
            break
    return f, history


def local_search_beamformer(
    channel: MimoChannelRealization,
    restarts: int = 8,
    rng: np.random.Generator | int | None = 0,
) -> AggregationBeamformer:
    """Best-of-restarts projected ascent on the max-min objective.

    The first restart starts from the subspace heuristic (so the search
    never returns anything worse than it), the next ones from each
    device's matched filter while the restart budget allows, and the rest
    from uniformly random points on the sphere.
    """
    if restarts < 1:
        raise InvalidArgumentError("restarts must be >= 1")
    gen = as_generator(rng)
    h = channel.matrices
    n = channel.num_antennas

    norms = np.linalg.norm(h, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateChannelError("a channel vector is identically zero")
    starts = [subspace_heuristic_beamformer(channel).vector]
    # matched filters are decent seeds but must not crowd out random ones
    matched = min(channel.num_devices, max(0, (restarts - 1) // 2))
    starts.extend(h[k] / norms[k] for k in range(matched))
    while len(starts) < restarts:
        raw = gen.standard_normal(n) + 1j * gen.standard_normal(n)
        starts.append(raw / np.linalg.norm(raw))

    best_f, best_val = starts[0], -math.inf
    for start in starts:
        f, history = projected_ascent(channel, start)
        if history[-1] > best_val:
            best_f, best_val = f, history[-1]
    best_f = _canonical_phase(best_f, h[0])
    return AggregationBeamformer(best_f, "local_search")


def mimo_mse(channel: MimoChannelRealization, f: AggregationBeamformer, power_budget: float) -> float:
    """Error of the beamformed chain under zero-forcing against f.

    Equals sigma^2 / (K^2 * P * min_k |f^H h_k|^2); computed by composing
    the effective scalar channel with uniform inversion so the scalar and
    MIMO error models can never drift apart.
    """
    scalar = effective_gains(channel, f)
    alloc = uniform_inversion_policy(scalar, power_budget)
    return analytic_mse(scalar, alloc)
