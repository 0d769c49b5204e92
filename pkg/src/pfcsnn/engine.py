"""Compiled multi-tick simulation kernel.

`run_window` advances a Network over a whole window of precomputed input
spikes (and optional noise draws) in one call. The arithmetic replicates
`Network.tick` operation for operation, in the same order, with the same
float64 intermediates, so results are bit-identical to ticking the reference
implementation; tests/test_engine.py asserts that. The only reason this
module exists is speed: the experiment suite simulates hundreds of millions
of ticks, which is impractical through the per-tick numpy path.

All decay factors and noise scales are computed once in Python (math.exp)
and passed in, so both paths consume identical constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .network import Network


@dataclass
class WindowResult:
    """Spike record of one simulated window, at dt resolution."""

    mem_spikes: np.ndarray    # bool (n_ticks, n_mem)
    resp_spikes: np.ndarray   # bool (n_ticks, n_resp)
    t_start: float
    dt: float

    @property
    def n_ticks(self) -> int:
        return self.resp_spikes.shape[0]

    def mem_raster(self) -> np.ndarray:
        """(neuron_id, time_ms) rows sorted by time then neuron."""
        ticks, ids = np.nonzero(self.mem_spikes)
        return np.column_stack([ids.astype(np.float64), self.t_start + ticks * self.dt])

    def first_resp_spike_ticks(self) -> np.ndarray:
        """First spike tick per response neuron, -1 when silent."""
        out = np.full(self.resp_spikes.shape[1], -1, dtype=np.int64)
        for j in range(self.resp_spikes.shape[1]):
            nz = np.flatnonzero(self.resp_spikes[:, j])
            if nz.size:
                out[j] = nz[0]
        return out


@njit(cache=True)
def _window_kernel(
    n_ticks, dt, t0,
    spikes_in, has_in,
    noise_m, has_noise_m, noise_scale_m,
    noise_r, has_noise_r, noise_scale_r,
    # memory layer params
    cm_m, gl_m, el_m, ee_m, ei_m, vth_m, vre_m, tref_m, dge_m, dgi_m,
    # response layer params
    cm_r, gl_r, el_r, ee_r, ei_r, vth_r, vre_r, tref_r, dge_r, dgi_r,
    # neuron state
    v_m, ge_m, gi_m, ref_m, last_m,
    v_r, ge_r, gi_r, ref_r, last_r,
    prev_mem, prev_resp,
    # projections
    w_im, act_im, ap_im, am_im, p_im, Ap_im, Am_im, wmax_im, dap_im, dam_im,
    w_ir, act_ir, ap_ir, am_ir, p_ir, Ap_ir, Am_ir, wmax_ir, dap_ir, dam_ir,
    w_mr, act_mr, ap_mr, am_mr, p_mr, Ap_mr, Am_mr, wmax_mr, dap_mr, dam_mr,
    w_lat, w_rec, w_mut,
    # outputs
    mem_out, resp_out,
):
    n_in = w_im.shape[0]
    n_mem = w_im.shape[1]
    n_resp = w_ir.shape[1]
    t_cur = t0
    for t in range(n_ticks):
        # 1. input spikes -> memory, then -> response, at current weights
        if has_in:
            for i in range(n_in):
                if spikes_in[t, i]:
                    for j in range(n_mem):
                        if act_im[i, j]:
                            ge_m[j] += w_im[i, j]
            for i in range(n_in):
                if spikes_in[t, i]:
                    for j in range(n_resp):
                        if act_ir[i, j]:
                            ge_r[j] += w_ir[i, j]

        # 2. last tick's memory spikes: lateral inhibition, self-excitation,
        #    memory->response; last tick's response spikes: mutual inhibition
        for i in range(n_mem):
            if prev_mem[i]:
                for j in range(n_mem):
                    gi_m[j] += w_lat[i, j]
        for i in range(n_mem):
            if prev_mem[i]:
                ge_m[i] += w_rec[i, i]
        for i in range(n_mem):
            if prev_mem[i]:
                for j in range(n_resp):
                    if act_mr[i, j]:
                        ge_r[j] += w_mr[i, j]
        for i in range(n_resp):
            if prev_resp[i]:
                for j in range(n_resp):
                    gi_r[j] += w_mut[i, j]

        # 3. step neurons (memory first, then response)
        for j in range(n_mem):
            integ = ref_m[j] <= 0.0
            if integ:
                if has_noise_m:
                    cur = (gl_m * (el_m - v_m[j]) + ge_m[j] * (ee_m - v_m[j])
                           + gi_m[j] * (ei_m - v_m[j]) + noise_scale_m * noise_m[t, j])
                else:
                    cur = (gl_m * (el_m - v_m[j]) + ge_m[j] * (ee_m - v_m[j])
                           + gi_m[j] * (ei_m - v_m[j]))
                vn = v_m[j] + cur * dt / cm_m
                if vn < ei_m:
                    vn = ei_m
                if vn > ee_m:
                    vn = ee_m
                v_m[j] = vn
            ge_m[j] *= dge_m
            gi_m[j] *= dgi_m
            if not integ:
                v_m[j] = vre_m
                r = ref_m[j] - dt
                ref_m[j] = r if r > 0.0 else 0.0
            sp = integ and v_m[j] > vth_m
            if sp:
                v_m[j] = vre_m
                ref_m[j] = tref_m
                last_m[j] = t_cur
            mem_out[t, j] = sp
        for j in range(n_resp):
            integ = ref_r[j] <= 0.0
            if integ:
                if has_noise_r:
                    cur = (gl_r * (el_r - v_r[j]) + ge_r[j] * (ee_r - v_r[j])
                           + gi_r[j] * (ei_r - v_r[j]) + noise_scale_r * noise_r[t, j])
                else:
                    cur = (gl_r * (el_r - v_r[j]) + ge_r[j] * (ee_r - v_r[j])
                           + gi_r[j] * (ei_r - v_r[j]))
                vn = v_r[j] + cur * dt / cm_r
                if vn < ei_r:
                    vn = ei_r
                if vn > ee_r:
                    vn = ee_r
                v_r[j] = vn
            ge_r[j] *= dge_r
            gi_r[j] *= dgi_r
            if not integ:
                v_r[j] = vre_r
                r = ref_r[j] - dt
                ref_r[j] = r if r > 0.0 else 0.0
            sp = integ and v_r[j] > vth_r
            if sp:
                v_r[j] = vre_r
                ref_r[j] = tref_r
                last_r[j] = t_cur
            resp_out[t, j] = sp

        # 4. STDP: pre events (spikes delivered this tick), then post events
        if has_in and p_im:
            for i in range(n_in):
                if spikes_in[t, i]:
                    for j in range(n_mem):
                        if act_im[i, j]:
                            w = w_im[i, j] + am_im[j]
                            if w < 0.0:
                                w = 0.0
                            if w > wmax_im:
                                w = wmax_im
                            w_im[i, j] = w
                    ap_im[i] += Ap_im
        if has_in and p_ir:
            for i in range(n_in):
                if spikes_in[t, i]:
                    for j in range(n_resp):
                        if act_ir[i, j]:
                            w = w_ir[i, j] + am_ir[j]
                            if w < 0.0:
                                w = 0.0
                            if w > wmax_ir:
                                w = wmax_ir
                            w_ir[i, j] = w
                    ap_ir[i] += Ap_ir
        if p_mr:
            for i in range(n_mem):
                if prev_mem[i]:
                    for j in range(n_resp):
                        if act_mr[i, j]:
                            w = w_mr[i, j] + am_mr[j]
                            if w < 0.0:
                                w = 0.0
                            if w > wmax_mr:
                                w = wmax_mr
                            w_mr[i, j] = w
                    ap_mr[i] += Ap_mr
        if p_im:
            for j in range(n_mem):
                if mem_out[t, j]:
                    for i in range(n_in):
                        if act_im[i, j]:
                            w = w_im[i, j] + ap_im[i]
                            if w < 0.0:
                                w = 0.0
                            if w > wmax_im:
                                w = wmax_im
                            w_im[i, j] = w
                    am_im[j] += Am_im
        if p_ir:
            for j in range(n_resp):
                if resp_out[t, j]:
                    for i in range(n_in):
                        if act_ir[i, j]:
                            w = w_ir[i, j] + ap_ir[i]
                            if w < 0.0:
                                w = 0.0
                            if w > wmax_ir:
                                w = wmax_ir
                            w_ir[i, j] = w
                    am_ir[j] += Am_ir
        if p_mr:
            for j in range(n_resp):
                if resp_out[t, j]:
                    for i in range(n_mem):
                        if act_mr[i, j]:
                            w = w_mr[i, j] + ap_mr[i]
                            if w < 0.0:
                                w = 0.0
                            if w > wmax_mr:
                                w = wmax_mr
                            w_mr[i, j] = w
                    am_mr[j] += Am_mr

        # 5. trace decay
        if p_im:
            for i in range(n_in):
                ap_im[i] *= dap_im
            for j in range(n_mem):
                am_im[j] *= dam_im
        if p_ir:
            for i in range(n_in):
                ap_ir[i] *= dap_ir
            for j in range(n_resp):
                am_ir[j] *= dam_ir
        if p_mr:
            for i in range(n_mem):
                ap_mr[i] *= dap_mr
            for j in range(n_resp):
                am_mr[j] *= dam_mr

        for j in range(n_mem):
            prev_mem[j] = mem_out[t, j]
        for j in range(n_resp):
            prev_resp[j] = resp_out[t, j]
        t_cur += dt
    return t_cur


def _layer_consts(params, dt):
    return (
        params.c_m, params.g_leak, params.e_leak, params.e_exc, params.e_inh,
        params.v_thresh, params.v_reset, params.tau_ref,
        math.exp(-dt / params.tau_exc), math.exp(-dt / params.tau_inh),
    )


def _stdp_consts(proj, dt, plasticity_enabled):
    p = proj.params
    return (
        bool(plasticity_enabled and proj.plastic),
        p.a_plus, p.a_minus, p.w_max,
        math.exp(-dt / p.tau_plus), math.exp(-dt / p.tau_minus),
    )


_EMPTY_SPIKES = np.zeros((1, 1), dtype=bool)
_EMPTY_NOISE = np.zeros((1, 1), dtype=np.float64)


def run_window(
    net: Network,
    n_ticks: int,
    input_spikes: np.ndarray | None = None,
    noise_mem: np.ndarray | None = None,
    noise_resp: np.ndarray | None = None,
    use_kernel: bool = True,
) -> WindowResult:
    """Advance `net` by n_ticks, mutating it in place.

    input_spikes: bool (n_ticks, 784) or None for a silent window.
    noise_mem / noise_resp: standard-normal draws (n_ticks, n) or None;
    required shape-checked only when the layer's noise_sigma > 0.
    """
    cfg = net.cfg
    dt = cfg.dt
    if input_spikes is not None and input_spikes.shape != (n_ticks, cfg.n_input):
        raise ValueError(
            f"input_spikes must be ({n_ticks}, {cfg.n_input}), got {input_spikes.shape}")

    t_start = net.t
    mem_out = np.zeros((n_ticks, cfg.n_mem), dtype=bool)
    resp_out = np.zeros((n_ticks, cfg.n_resp), dtype=bool)

    if not use_kernel:
        for t in range(n_ticks):
            idx = np.flatnonzero(input_spikes[t]) if input_spikes is not None else ()
            nm = noise_mem[t] if noise_mem is not None else None
            nr = noise_resp[t] if noise_resp is not None else None
            mem_sp, resp_sp = net.tick(idx, nm, nr)
            mem_out[t] = mem_sp
            resp_out[t] = resp_sp
        return WindowResult(mem_out, resp_out, t_start, dt)

    has_in = input_spikes is not None
    mp, rp = cfg.mem_params, cfg.resp_params
    has_nm = mp.noise_sigma > 0.0 and noise_mem is not None
    has_nr = rp.noise_sigma > 0.0 and noise_resp is not None
    ns_m = mp.noise_sigma * math.sqrt(1.0 / dt)
    ns_r = rp.noise_sigma * math.sqrt(1.0 / dt)

    net.t = _window_kernel(
        n_ticks, dt, net.t,
        input_spikes if has_in else _EMPTY_SPIKES, has_in,
        noise_mem if has_nm else _EMPTY_NOISE, has_nm, ns_m,
        noise_resp if has_nr else _EMPTY_NOISE, has_nr, ns_r,
        *_layer_consts(mp, dt),
        *_layer_consts(rp, dt),
        net.mem.v_m, net.mem.g_exc, net.mem.g_inh, net.mem.refractory_left, net.mem.last_spike,
        net.resp.v_m, net.resp.g_exc, net.resp.g_inh, net.resp.refractory_left, net.resp.last_spike,
        net.prev_mem_spikes, net.prev_resp_spikes,
        net.input_mem.weights, net.input_mem.active, net.input_mem.a_plus, net.input_mem.a_minus,
        *_stdp_consts(net.input_mem, dt, net.plasticity_enabled),
        net.input_resp.weights, net.input_resp.active, net.input_resp.a_plus, net.input_resp.a_minus,
        *_stdp_consts(net.input_resp, dt, net.plasticity_enabled),
        net.mem_resp.weights, net.mem_resp.active, net.mem_resp.a_plus, net.mem_resp.a_minus,
        *_stdp_consts(net.mem_resp, dt, net.plasticity_enabled),
        net.mem_lateral.weights, net.mem_recurrent.weights, net.resp_mutual.weights,
        mem_out, resp_out,
    )
    return WindowResult(mem_out, resp_out, t_start, dt)
