"""Conductance-based leaky integrate-and-fire populations.

Membrane dynamics per neuron:

    C_m dV/dt = g_leak*(E_leak - V) + g_exc*(E_exc - V) + g_inh*(E_inh - V) + xi

V is advanced by forward Euler; the synaptic conductances decay by the exact
exponential factor exp(-dt/tau) each step. A spike is emitted when the updated
V strictly exceeds v_thresh, after which V is reset and the neuron is held at
v_reset for tau_ref milliseconds (conductances keep accumulating and decaying
during refractoriness, only V is frozen).

xi is additive Gaussian current noise with per-step standard deviation
noise_sigma * sqrt(1 ms / dt), so the noise power injected per unit time does
not depend on the integration step.

All state arrays are float64 and hold a whole population; a single neuron is a
population of one.

Units: mV, nS, pF, pA, ms. Note g[nS] * V[mV] = I[pA] and
I[pA] * ms / C[pF] = V[mV], so no conversion constants appear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class NeuronParams:
    """Biophysical constants shared by one population."""

    c_m: float = 200.0          # membrane capacitance, pF
    g_leak: float = 10.0        # leak conductance, nS (tau_m = c_m/g_leak = 20 ms)
    e_leak: float = -65.0       # leak reversal, mV
    e_exc: float = 0.0          # excitatory reversal, mV
    e_inh: float = -75.0        # inhibitory reversal, mV
    v_thresh: float = -55.0     # spike threshold, mV
    v_reset: float = -70.0      # post-spike reset, mV
    v_rest: float = -70.0       # initial potential, mV
    tau_exc: float = 5.0        # excitatory conductance time constant, ms
    tau_inh: float = 10.0       # inhibitory conductance time constant, ms
    tau_ref: float = 5.0        # absolute refractory period, ms
    noise_sigma: float = 0.0    # noise current scale, pA

    def validate(self) -> None:
        if not (self.v_reset <= self.v_rest < self.v_thresh < self.e_exc):
            raise ValueError(
                "neuron params violate v_reset <= v_rest < v_thresh < e_exc: "
                f"v_reset={self.v_reset}, v_rest={self.v_rest}, "
                f"v_thresh={self.v_thresh}, e_exc={self.e_exc}"
            )
        if not (self.e_inh <= self.e_leak):
            raise ValueError(
                f"neuron params violate e_inh <= e_leak: e_inh={self.e_inh}, e_leak={self.e_leak}"
            )
        for name in ("c_m", "tau_exc", "tau_inh", "tau_ref"):
            if getattr(self, name) <= 0:
                raise ValueError(f"neuron param {name} must be strictly positive, got {getattr(self, name)}")


@dataclass
class NeuronState:
    """Dynamic variables of a population of n neurons."""

    v_m: np.ndarray               # membrane potential, mV
    g_exc: np.ndarray             # excitatory conductance, nS
    g_inh: np.ndarray             # inhibitory conductance, nS
    refractory_left: np.ndarray   # remaining refractory time, ms
    last_spike: np.ndarray        # time of most recent spike, ms (nan = never)

    @property
    def n(self) -> int:
        return self.v_m.shape[0]

    def copy(self) -> "NeuronState":
        return NeuronState(
            self.v_m.copy(), self.g_exc.copy(), self.g_inh.copy(),
            self.refractory_left.copy(), self.last_spike.copy(),
        )


def init_state(params: NeuronParams, n: int = 1) -> NeuronState:
    """Fresh population state: V at rest, zero conductances, not refractory."""
    params.validate()
    if n < 1:
        raise ValueError(f"population size must be >= 1, got {n}")
    return NeuronState(
        v_m=np.full(n, params.v_rest, dtype=np.float64),
        g_exc=np.zeros(n, dtype=np.float64),
        g_inh=np.zeros(n, dtype=np.float64),
        refractory_left=np.zeros(n, dtype=np.float64),
        last_spike=np.full(n, np.nan, dtype=np.float64),
    )


def inject_spike(state: NeuronState, kind: str, weight, index=None) -> None:
    """Increment a conductance by the synaptic weight (nS).

    kind is 'excitatory' or 'inhibitory'. weight can be a scalar applied to
    `index` (or the whole population when index is None) or an array added
    elementwise. Weights must be non-negative: inhibition is carried by the
    sign of its reversal potential, not of the weight.
    """
    w = np.asarray(weight, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("synaptic weight must be non-negative")
    if kind == "excitatory":
        g = state.g_exc
    elif kind == "inhibitory":
        g = state.g_inh
    else:
        raise ValueError(f"unknown synapse kind {kind!r}")
    if index is None:
        g += w
    else:
        g[index] += w


def step_neurons(
    state: NeuronState,
    params: NeuronParams,
    dt: float,
    noise_sample=None,
    t_now: float = 0.0,
) -> np.ndarray:
    """Advance the population by one step of dt ms. Returns the spike mask.

    noise_sample: standard-normal draws, shape (n,); scaled internally by
    noise_sigma * sqrt(1/dt). Omit (None) for noiseless stepping.

    Execution order per step: Euler update of V with the current conductances,
    exact exponential conductance decay, refractory clamp, spike test (strict
    V > v_thresh) with reset. Neurons inside their refractory period skip the
    Euler update (V stays at v_reset) and cannot spike.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    v = state.v_m
    ge = state.g_exc
    gi = state.g_inh
    ref = state.refractory_left

    integrating = ref <= 0.0

    if params.noise_sigma > 0.0 and noise_sample is not None:
        xi = params.noise_sigma * math.sqrt(1.0 / dt) * noise_sample
        current = (
            params.g_leak * (params.e_leak - v)
            + ge * (params.e_exc - v)
            + gi * (params.e_inh - v)
            + xi
        )
    else:
        current = (
            params.g_leak * (params.e_leak - v)
            + ge * (params.e_exc - v)
            + gi * (params.e_inh - v)
        )
    v_next = v + current * dt / params.c_m
    # Reversal potentials bound the conductance dynamics; clamping removes
    # Euler/noise overshoot beyond them.
    np.clip(v_next, params.e_inh, params.e_exc, out=v_next)
    v[integrating] = v_next[integrating]

    ge *= math.exp(-dt / params.tau_exc)
    gi *= math.exp(-dt / params.tau_inh)

    refractory = ~integrating
    v[refractory] = params.v_reset
    ref[refractory] = np.maximum(ref[refractory] - dt, 0.0)

    spiked = integrating & (v > params.v_thresh)
    v[spiked] = params.v_reset
    ref[spiked] = params.tau_ref
    state.last_spike[spiked] = t_now
    return spiked
