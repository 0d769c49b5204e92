"""The three-layer circuit: input (784, stateless), memory (WTA + recurrent
self-excitation), response (2 neurons, mutual inhibition).

Six projections, exactly:

    input  -> memory    plastic excitatory, lesionable
    memory -> memory    fixed lateral inhibition, all-to-all minus diagonal
    memory -> memory    fixed recurrent self-excitation, diagonal only
    input  -> response  plastic excitatory
    memory -> response  plastic excitatory
    response -> response fixed mutual inhibition

Spikes emitted by memory/response neurons at tick t are delivered at t+1
(one-tick delay), which makes the update order within a tick immaterial to
the dynamics. Input spikes are delivered in the tick they occur.

The tick implementation here is the plain-numpy reference; `pfcsnn.engine`
holds a compiled equivalent used for long runs and is tested to reproduce
this one bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .lif import NeuronParams, NeuronState, init_state, step_neurons
from .stdp import (
    StdpParams,
    SynapseProjection,
    decay_traces,
    fixed_projection,
    init_projection,
    on_post_spike,
    on_pre_spike,
)

N_INPUT = 784
N_RESP = 2


@dataclass(frozen=True)
class NetworkConfig:
    n_mem: int = 100
    dt: float = 0.1                    # ms
    w_inh_lateral: float = 3.0         # nS, memory WTA inhibition per spike
    w_exc_recurrent: float = 0.8       # nS, memory self-excitation per spike
    w_resp_mutual_inh: float = 2.0     # nS, response rivalry
    mem_params: NeuronParams = field(default_factory=NeuronParams)
    resp_params: NeuronParams = field(default_factory=NeuronParams)
    stdp_input_mem: StdpParams = field(default_factory=StdpParams)
    stdp_input_resp: StdpParams = field(default_factory=StdpParams)
    stdp_mem_resp: StdpParams = field(default_factory=StdpParams)
    plastic_input_mem: bool = True
    plastic_input_resp: bool = True
    plastic_mem_resp: bool = True

    @property
    def n_input(self) -> int:
        return N_INPUT

    @property
    def n_resp(self) -> int:
        return N_RESP

    def validate(self) -> None:
        if self.n_mem <= 0:
            raise ValueError(f"n_mem must be positive, got {self.n_mem}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        for name in ("w_inh_lateral", "w_exc_recurrent", "w_resp_mutual_inh"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        self.mem_params.validate()
        self.resp_params.validate()
        self.stdp_input_mem.validate()
        self.stdp_input_resp.validate()
        self.stdp_mem_resp.validate()


@dataclass(frozen=True)
class LesionMask:
    mask: np.ndarray      # bool (n_input, n_mem); False = deactivated
    p_connect: float
    seed: int

    @property
    def active_fraction(self) -> float:
        return float(self.mask.mean())


class Network:
    """Mutable simulation state; stepped by exactly one caller at a time."""

    def __init__(self, cfg: NetworkConfig, seed: int = 0):
        cfg.validate()
        self.cfg = cfg
        self.seed = seed
        ss = np.random.SeedSequence(seed)
        s_im, s_ir, s_mr = ss.spawn(3)

        self.mem = init_state(cfg.mem_params, cfg.n_mem)
        self.resp = init_state(cfg.resp_params, N_RESP)

        self.input_mem = init_projection(
            N_INPUT, cfg.n_mem, cfg.stdp_input_mem, cfg.plastic_input_mem, "excitatory", s_im)
        self.input_resp = init_projection(
            N_INPUT, N_RESP, cfg.stdp_input_resp, cfg.plastic_input_resp, "excitatory", s_ir)
        self.mem_resp = init_projection(
            cfg.n_mem, N_RESP, cfg.stdp_mem_resp, cfg.plastic_mem_resp, "excitatory", s_mr)

        lateral = cfg.w_inh_lateral * (1.0 - np.eye(cfg.n_mem))
        self.mem_lateral = fixed_projection(lateral, "inhibitory")
        self.mem_recurrent = fixed_projection(
            cfg.w_exc_recurrent * np.eye(cfg.n_mem), "excitatory")
        self.resp_mutual = fixed_projection(
            cfg.w_resp_mutual_inh * (1.0 - np.eye(N_RESP)), "inhibitory")

        self.t = 0.0
        self.prev_mem_spikes = np.zeros(cfg.n_mem, dtype=bool)
        self.prev_resp_spikes = np.zeros(N_RESP, dtype=bool)
        self.plasticity_enabled = True
        self.lesion: LesionMask | None = None

    @property
    def plastic_projections(self):
        return (self.input_mem, self.input_resp, self.mem_resp)

    def tick(self, input_spike_indices, noise_mem=None, noise_resp=None):
        """One dt of simulation. Returns (memory spike mask, response spike mask).

        input_spike_indices: indices of input neurons firing this tick,
        ascending. Noise arrays are standard-normal draws per neuron, or None.
        """
        cfg = self.cfg
        dt = cfg.dt
        idx = np.asarray(input_spike_indices, dtype=np.intp)

        # 1. deliver this tick's input spikes at current weights
        for i in idx:
            self.mem.g_exc += np.where(self.input_mem.active[i], self.input_mem.weights[i], 0.0)
        for i in idx:
            self.resp.g_exc += np.where(self.input_resp.active[i], self.input_resp.weights[i], 0.0)

        # 2. deliver last tick's memory/response spikes
        prev_mem_idx = np.flatnonzero(self.prev_mem_spikes)
        for i in prev_mem_idx:
            self.mem.g_inh += self.mem_lateral.weights[i]
        for i in prev_mem_idx:
            self.mem.g_exc[i] += self.mem_recurrent.weights[i, i]
        for i in prev_mem_idx:
            self.resp.g_exc += np.where(self.mem_resp.active[i], self.mem_resp.weights[i], 0.0)
        for j in np.flatnonzero(self.prev_resp_spikes):
            self.resp.g_inh += self.resp_mutual.weights[j]

        # 3. step neurons
        mem_spiked = step_neurons(self.mem, cfg.mem_params, dt, noise_mem, self.t)
        resp_spiked = step_neurons(self.resp, cfg.resp_params, dt, noise_resp, self.t)

        # 4. STDP: pre events for spikes delivered this tick, then post events
        #    for neurons that fired this tick
        if self.plasticity_enabled:
            for i in idx:
                on_pre_spike(self.input_mem, i)
            for i in idx:
                on_pre_spike(self.input_resp, i)
            for i in prev_mem_idx:
                on_pre_spike(self.mem_resp, i)
            for j in np.flatnonzero(mem_spiked):
                on_post_spike(self.input_mem, j)
            for j in np.flatnonzero(resp_spiked):
                on_post_spike(self.input_resp, j)
            for j in np.flatnonzero(resp_spiked):
                on_post_spike(self.mem_resp, j)

            # 5. decay traces
            for proj in self.plastic_projections:
                if proj.plastic:
                    decay_traces(proj, dt)

        self.prev_mem_spikes = mem_spiked
        self.prev_resp_spikes = resp_spiked
        self.t += dt
        return mem_spiked, resp_spiked


def build_network(cfg: NetworkConfig, seed: int = 0) -> Network:
    """Construct the wired network; bit-identical for identical (cfg, seed)."""
    return Network(cfg, seed)


def apply_lesion(net: Network, p_connect: float, seed: int) -> LesionMask:
    """Deactivate input->memory synapses, each kept with probability p_connect.

    The mask is frozen for the rest of the run: masked synapses never
    transmit and never change weight.
    """
    if not 0.0 <= p_connect <= 1.0:
        raise ValueError(f"p_connect must lie in [0, 1], got {p_connect}")
    rng = np.random.default_rng(seed)
    mask = rng.random((N_INPUT, net.cfg.n_mem)) < p_connect
    net.input_mem.active = mask
    lesion = LesionMask(mask=mask, p_connect=p_connect, seed=seed)
    net.lesion = lesion
    return lesion
