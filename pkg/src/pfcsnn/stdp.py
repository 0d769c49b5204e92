"""Trace-based spike-timing-dependent plasticity over dense projections.

A projection keeps one potentiation trace per pre-neuron (a_plus >= 0) and one
depression trace per post-neuron (a_minus <= 0). Both decay exponentially.
On a pre-synaptic spike every active synapse in that row collects the
(negative) post trace, then the pre trace is bumped by A_plus; on a
post-synaptic spike every active synapse in that column collects the pre
trace, then the post trace is bumped by A_minus. Weights are clamped to
[0, w_max] after every event.

For an isolated spike pair separated by dt this reproduces the classic
exponential pair kernel, exposed directly as `pair_delta_w` and used as the
oracle in the tests:

    dw = A_plus  * exp(-dt/tau_plus)   for dt > 0 (pre before post)
    dw = A_minus * exp(+dt/tau_minus)  for dt < 0 (post before pre)

Synapses flagged inactive in `active` never transmit and never change weight;
their entries are preserved bit-exactly through any amount of training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StdpParams:
    a_plus: float = 0.01        # potentiation trace increment (weight units, > 0)
    a_minus: float = -0.012     # depression trace increment (weight units, < 0)
    tau_plus: float = 20.0      # pre-trace time constant, ms
    tau_minus: float = 20.0     # post-trace time constant, ms
    w_max: float = 1.0          # weight ceiling, nS
    w_init_low: float = 0.0     # uniform init range, nS
    w_init_high: float = 0.3

    def validate(self) -> None:
        if not self.a_plus > 0:
            raise ValueError(f"a_plus must be > 0, got {self.a_plus}")
        if not self.a_minus < 0:
            raise ValueError(f"a_minus must be < 0, got {self.a_minus}")
        if self.tau_plus <= 0 or self.tau_minus <= 0:
            raise ValueError("tau_plus and tau_minus must be > 0")
        if not (0 <= self.w_init_low <= self.w_init_high <= self.w_max):
            raise ValueError(
                "init range must satisfy 0 <= w_init_low <= w_init_high <= w_max, got "
                f"[{self.w_init_low}, {self.w_init_high}] with w_max={self.w_max}"
            )


@dataclass
class SynapseProjection:
    """Dense pre x post weight matrix with STDP traces and a lesion mask."""

    weights: np.ndarray       # (n_pre, n_post), nS
    active: np.ndarray        # (n_pre, n_post), bool; False = lesioned
    a_plus: np.ndarray        # (n_pre,) potentiation traces
    a_minus: np.ndarray       # (n_post,) depression traces
    params: StdpParams
    plastic: bool = True
    sign: str = "excitatory"

    @property
    def n_pre(self) -> int:
        return self.weights.shape[0]

    @property
    def n_post(self) -> int:
        return self.weights.shape[1]

    def effective_weights(self) -> np.ndarray:
        """Weights with lesioned synapses zeroed; what actually transmits."""
        return np.where(self.active, self.weights, 0.0)

    def copy(self) -> "SynapseProjection":
        return SynapseProjection(
            self.weights.copy(), self.active.copy(),
            self.a_plus.copy(), self.a_minus.copy(),
            self.params, self.plastic, self.sign,
        )


def init_projection(
    n_pre: int,
    n_post: int,
    params: StdpParams,
    plastic: bool = True,
    sign: str = "excitatory",
    seed: int = 0,
) -> SynapseProjection:
    """Uniform random weights in [w_init_low, w_init_high], all synapses active."""
    if n_pre <= 0 or n_post <= 0:
        raise ValueError("projection dimensions must be positive")
    params.validate()
    if sign not in ("excitatory", "inhibitory"):
        raise ValueError(f"unknown projection sign {sign!r}")
    rng = np.random.default_rng(seed)
    w = rng.uniform(params.w_init_low, params.w_init_high, size=(n_pre, n_post))
    return SynapseProjection(
        weights=w,
        active=np.ones((n_pre, n_post), dtype=bool),
        a_plus=np.zeros(n_pre, dtype=np.float64),
        a_minus=np.zeros(n_post, dtype=np.float64),
        params=params,
        plastic=plastic,
        sign=sign,
    )


def fixed_projection(weights: np.ndarray, sign: str) -> SynapseProjection:
    """Non-plastic projection with hand-set weights (lateral wiring etc.)."""
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("fixed weights must be non-negative")
    n_pre, n_post = w.shape
    return SynapseProjection(
        weights=w.copy(),
        active=np.ones((n_pre, n_post), dtype=bool),
        a_plus=np.zeros(n_pre, dtype=np.float64),
        a_minus=np.zeros(n_post, dtype=np.float64),
        params=StdpParams(w_max=max(float(w.max()), 1.0) if w.size else 1.0),
        plastic=False,
        sign=sign,
    )


def decay_traces(proj: SynapseProjection, dt: float) -> None:
    """Exponential trace decay by one step of dt ms."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    proj.a_plus *= math.exp(-dt / proj.params.tau_plus)
    proj.a_minus *= math.exp(-dt / proj.params.tau_minus)


def on_pre_spike(proj: SynapseProjection, pre_index: int) -> None:
    """Pre-synaptic spike: row collects the post traces (depression), then
    the pre trace is incremented."""
    if not proj.plastic:
        return
    row = proj.weights[pre_index]
    act = proj.active[pre_index]
    row[act] = np.clip(row[act] + proj.a_minus[act], 0.0, proj.params.w_max)
    proj.a_plus[pre_index] += proj.params.a_plus


def on_post_spike(proj: SynapseProjection, post_index: int) -> None:
    """Post-synaptic spike: column collects the pre traces (potentiation),
    then the post trace is incremented."""
    if not proj.plastic:
        return
    col = proj.weights[:, post_index]
    act = proj.active[:, post_index]
    col[act] = np.clip(col[act] + proj.a_plus[act], 0.0, proj.params.w_max)
    proj.a_minus[post_index] += proj.params.a_minus


def pair_delta_w(delta_t: float, params: StdpParams) -> float:
    """Closed-form pair kernel: weight change for one isolated pre/post pair
    separated by delta_t = t_post - t_pre (ms). Undefined at delta_t = 0."""
    if delta_t == 0:
        raise ValueError("pair kernel is undefined at delta_t = 0")
    if delta_t > 0:
        return params.a_plus * math.exp(-delta_t / params.tau_plus)
    return params.a_minus * math.exp(delta_t / params.tau_minus)
