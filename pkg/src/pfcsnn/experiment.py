"""Task-switching protocol: calibration, schedules, trials, probes, accuracy.

A run is continuous: the network carries membrane state, conductances, traces
and weights from trial to trial with no resets. The learning block mixes
Target and Non-Target presentations (default 70:30) with plasticity on;
context categories are evaluated afterwards in dedicated probe blocks with
plasticity frozen. Each probe trial replays its anchor stimulus briefly and
then presents the context stimulus, so retrieval runs off whatever sustained
activity survives the schedule's inter-stimulus gap.

The long schedule inserts a silent gap (default 350 ms) after every
presentation, including between a probe's anchor and its context stimulus;
the short schedule has no gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .dataset import LabeledImages, StimulusSet, load_idx, select_stimuli
from .encoding import generate_poisson_train, image_to_rates
from .engine import WindowResult, run_window
from .network import Network, apply_lesion, build_network
from .synthdata import make_synthetic_dataset

TARGET = "target"
NON_TARGET = "non_target"
CONTEXT_TARGET = "context_target"
CONTEXT_NON_TARGET = "context_non_target"
CATEGORIES = (TARGET, NON_TARGET, CONTEXT_TARGET, CONTEXT_NON_TARGET)
_TARGET_FAMILY = frozenset({TARGET, CONTEXT_TARGET})

_SEED_MAX = 2**63


@dataclass(frozen=True)
class Schedule:
    kind: str                 # short | long
    presentation_ms: float
    gap_ms: float
    learning: tuple           # ((category, trial_seed), ...)
    probes: tuple             # ((category, trial_seed), ...)

    def n_per_category(self) -> dict:
        counts = {}
        for cat, _ in self.learning + self.probes:
            counts[cat] = counts.get(cat, 0) + 1
        return counts


@dataclass(frozen=True)
class TrialOutcome:
    category: str
    winner: str                       # target-neuron | non-target-neuron | none
    first_spike_latency: float | None  # ms from stimulus onset
    correct: bool


@dataclass(frozen=True)
class ResponseAssignment:
    """Which response neuron is the target neuron, fixed after calibration."""

    n_t: int
    n_nt: int
    target_counts: tuple  # spikes of each response neuron during calibration targets


@dataclass
class ResultsSummary:
    schedule: str
    lesion_p: float
    connectivity: str               # "full" or "lesioned(p)"
    accuracy: dict                  # category -> fraction
    counts: dict                    # category -> (n_correct, n_total)
    n_trials: int
    assignment: ResponseAssignment
    seed: int
    artifacts: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    summary: ResultsSummary
    net: Network
    outcomes: list
    schedule: Schedule
    stimuli: StimulusSet
    assignment: ResponseAssignment


def condition_label(lesion_p: float) -> str:
    return "full" if lesion_p >= 1.0 else f"lesioned({lesion_p:g})"


def build_schedule(
    kind: str,
    n_trials_per_category: int,
    mix: float = 0.7,
    seed: int = 0,
    presentation_ms: float | None = None,
    gap_ms: float | None = None,
) -> Schedule:
    """Learning block of N trials split Target/Non-Target by `mix`, shuffled,
    followed by context probe blocks mirroring the learning prevalence."""
    if kind not in ("short", "long"):
        raise ValueError(f"schedule kind must be 'short' or 'long', got {kind!r}")
    if n_trials_per_category <= 0:
        raise ValueError("n_trials_per_category must be positive")
    if not 0.0 < mix <= 1.0:
        raise ValueError(f"mix must lie in (0, 1], got {mix}")
    if presentation_ms is None:
        presentation_ms = 350.0 if kind == "short" else 550.0
    if gap_ms is None:
        gap_ms = 0.0 if kind == "short" else 350.0

    n = n_trials_per_category
    n_t = int(round(n * mix))
    n_nt = n - n_t
    rng = np.random.default_rng(seed)
    cats = np.array([TARGET] * n_t + [NON_TARGET] * n_nt)
    rng.shuffle(cats)
    learn_seeds = rng.integers(_SEED_MAX, size=n)
    learning = tuple((str(c), int(s)) for c, s in zip(cats, learn_seeds))

    probe_cats = [CONTEXT_TARGET] * n_t + [CONTEXT_NON_TARGET] * n_nt
    probe_seeds = rng.integers(_SEED_MAX, size=len(probe_cats))
    probes = tuple((c, int(s)) for c, s in zip(probe_cats, probe_seeds))
    return Schedule(kind, float(presentation_ms), float(gap_ms), learning, probes)


def _ms_to_ticks(ms: float, dt: float) -> int:
    return int(round(ms / dt))


def _spawn_rngs(seed: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _noise_for(params, n_ticks: int, n: int, rng):
    if params.noise_sigma > 0.0:
        return rng.standard_normal((n_ticks, n))
    return None


def _present(net: Network, stimulus, duration_ms: float, r_max: float, rng_in, rng_nm, rng_nr) -> WindowResult:
    """Drive the network with one Poisson-encoded stimulus presentation."""
    n_ticks = _ms_to_ticks(duration_ms, net.cfg.dt)
    trains = generate_poisson_train(image_to_rates(stimulus, r_max), duration_ms, net.cfg.dt, rng_in)
    return run_window(
        net, n_ticks, trains.spikes,
        _noise_for(net.cfg.mem_params, n_ticks, net.cfg.n_mem, rng_nm),
        _noise_for(net.cfg.resp_params, n_ticks, net.cfg.n_resp, rng_nr),
    )


def _silence(net: Network, duration_ms: float, rng_nm, rng_nr) -> WindowResult | None:
    if duration_ms <= 0:
        return None
    n_ticks = _ms_to_ticks(duration_ms, net.cfg.dt)
    return run_window(
        net, n_ticks, None,
        _noise_for(net.cfg.mem_params, n_ticks, net.cfg.n_mem, rng_nm),
        _noise_for(net.cfg.resp_params, n_ticks, net.cfg.n_resp, rng_nr),
    )


def _judge(win: WindowResult, assignment: ResponseAssignment, category: str, dt: float) -> TrialOutcome:
    first = win.first_resp_spike_ticks()
    t_t = first[assignment.n_t]
    t_nt = first[assignment.n_nt]
    if (t_t == -1 and t_nt == -1) or t_t == t_nt:
        return TrialOutcome(category, "none", None, False)
    if t_nt == -1 or (t_t != -1 and t_t < t_nt):
        winner, tick = "target-neuron", t_t
    else:
        winner, tick = "non-target-neuron", t_nt
    correct = (winner == "target-neuron") == (category in _TARGET_FAMILY)
    return TrialOutcome(category, winner, float(tick) * dt, correct)


def run_trial(
    net: Network,
    stimulus,
    presentation_ms: float,
    seed: int,
    assignment: ResponseAssignment,
    category: str = TARGET,
    plasticity_on: bool = True,
    r_max: float = 63.75,
    gap_ms: float = 0.0,
):
    """One learning/evaluation trial: presentation, then the schedule gap.

    The winner is the response neuron whose first spike inside the
    presentation window comes earliest; a same-tick double first spike or a
    silent window count as no winner (incorrect). State and weights carry
    over; nothing is reset.
    """
    rng_in, rng_nm, rng_nr = _spawn_rngs(seed, 3)
    net.plasticity_enabled = plasticity_on
    win = _present(net, stimulus, presentation_ms, r_max, rng_in, rng_nm, rng_nr)
    outcome = _judge(win, assignment, category, net.cfg.dt)
    _silence(net, gap_ms, rng_nm, rng_nr)
    return outcome, win


def run_probe_trial(
    net: Network,
    anchor_stimulus,
    context_stimulus,
    presentation_ms: float,
    seed: int,
    assignment: ResponseAssignment,
    category: str,
    anchor_ms: float = 100.0,
    gap_ms: float = 0.0,
    r_max: float = 63.75,
):
    """Context probe: brief anchor replay, gap, context stimulus, gap.

    Plasticity is frozen for the whole probe. The outcome is judged within
    the context window only.
    """
    rng_in, rng_nm, rng_nr = _spawn_rngs(seed, 3)
    was_plastic = net.plasticity_enabled
    net.plasticity_enabled = False
    _present(net, anchor_stimulus, anchor_ms, r_max, rng_in, rng_nm, rng_nr)
    _silence(net, gap_ms, rng_nm, rng_nr)
    win = _present(net, context_stimulus, presentation_ms, r_max, rng_in, rng_nm, rng_nr)
    outcome = _judge(win, assignment, category, net.cfg.dt)
    _silence(net, gap_ms, rng_nm, rng_nr)
    net.plasticity_enabled = was_plastic
    return outcome, win


def calibrate_response_labels(
    net: Network,
    stimuli: StimulusSet,
    k_trials: int,
    seed: int,
    presentation_ms: float = 350.0,
    gap_ms: float = 0.0,
    r_max: float = 63.75,
) -> ResponseAssignment:
    """Alternate Target / Non-Target presentations with plasticity on; the
    response neuron with more spikes under Target becomes the target neuron.
    Ties break toward the lower index."""
    if k_trials < 2:
        raise ValueError("calibration needs at least 2 trials")
    rng_in, rng_nm, rng_nr = _spawn_rngs(seed, 3)
    net.plasticity_enabled = True
    target_counts = np.zeros(net.cfg.n_resp, dtype=np.int64)
    for k in range(k_trials):
        is_target = k % 2 == 0
        stim = stimuli.target if is_target else stimuli.non_target
        win = _present(net, stim, presentation_ms, r_max, rng_in, rng_nm, rng_nr)
        if is_target:
            target_counts += win.resp_spikes.sum(axis=0)
        _silence(net, gap_ms, rng_nm, rng_nr)
    n_t = int(np.argmax(target_counts))  # argmax takes the first maximum: tie -> 0
    n_nt = 1 - n_t
    return ResponseAssignment(n_t=n_t, n_nt=n_nt, target_counts=tuple(int(c) for c in target_counts))


@dataclass
class SustainedActivityResult:
    mem_spikes: np.ndarray     # bool (n_ticks, n_mem), stimulus onset at tick 0
    dt: float
    on_ms: float
    observe_ms: float
    bin_ms: float
    bin_rates: np.ndarray      # population rate per bin, spikes/s summed over the layer

    def rate_in(self, start_ms: float, end_ms: float) -> float:
        """Mean population rate (spikes/s) within [start_ms, end_ms)."""
        a = int(round(start_ms / self.dt))
        b = int(round(end_ms / self.dt))
        n = self.mem_spikes[a:b].sum()
        return float(n) / ((end_ms - start_ms) / 1000.0)

    def raster(self) -> np.ndarray:
        ticks, ids = np.nonzero(self.mem_spikes)
        return np.column_stack([ids.astype(np.float64), ticks * self.dt])


def sustained_activity_probe(
    net: Network,
    stimulus,
    on_ms: float = 500.0,
    observe_ms: float = 800.0,
    seed: int = 0,
    r_max: float = 63.75,
    bin_ms: float = 10.0,
) -> SustainedActivityResult:
    """Present the stimulus for on_ms, then record through observe_ms with no
    input. Plasticity is frozen for the measurement."""
    if observe_ms < on_ms:
        raise ValueError("observe_ms must be >= on_ms")
    rng_in, rng_nm, rng_nr = _spawn_rngs(seed, 3)
    was_plastic = net.plasticity_enabled
    net.plasticity_enabled = False
    win_on = _present(net, stimulus, on_ms, r_max, rng_in, rng_nm, rng_nr)
    win_off = _silence(net, observe_ms - on_ms, rng_nm, rng_nr)
    net.plasticity_enabled = was_plastic
    spikes = win_on.mem_spikes if win_off is None else np.vstack([win_on.mem_spikes, win_off.mem_spikes])

    ticks_per_bin = _ms_to_ticks(bin_ms, net.cfg.dt)
    n_bins = spikes.shape[0] // ticks_per_bin
    per_bin = spikes[: n_bins * ticks_per_bin].reshape(n_bins, ticks_per_bin, -1).sum(axis=(1, 2))
    rates = per_bin / (bin_ms / 1000.0)
    return SustainedActivityResult(spikes, net.cfg.dt, on_ms, observe_ms, bin_ms, rates)


def compute_accuracy(outcomes) -> dict:
    """Per-category fraction of correct trials; categories not present are absent."""
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("cannot compute accuracy of zero trials")
    totals: dict = {}
    corrects: dict = {}
    for o in outcomes:
        totals[o.category] = totals.get(o.category, 0) + 1
        corrects[o.category] = corrects.get(o.category, 0) + int(o.correct)
    return {cat: corrects[cat] / totals[cat] for cat in totals}


def _count_pairs(outcomes) -> dict:
    counts: dict = {}
    for o in outcomes:
        c, t = counts.get(o.category, (0, 0))
        counts[o.category] = (c + int(o.correct), t + 1)
    return counts


def load_experiment_data(cfg: ExperimentConfig) -> LabeledImages:
    """Dataset per config: IDX files under data_dir, or the synthetic set."""
    if cfg.data_dir == "synthetic":
        return make_synthetic_dataset(n_per_class=30, seed=0)
    from pathlib import Path

    root = Path(cfg.data_dir)
    images = root / "train-images-idx3-ubyte"
    labels = root / "train-labels-idx1-ubyte"
    for p in (images, labels):
        candidates = [p, p.with_suffix(".gz"), Path(str(p) + ".gz")]
        if not any(c.exists() for c in candidates):
            raise FileNotFoundError(f"dataset file missing: {p}[.gz]")
    if not images.exists():
        images = Path(str(images) + ".gz")
    if not labels.exists():
        labels = Path(str(labels) + ".gz")
    return load_idx(images, labels)


def run_experiment(
    cfg: ExperimentConfig,
    data: LabeledImages | None = None,
    stimuli: StimulusSet | None = None,
) -> ExperimentResult:
    """Full protocol for one (connectivity, schedule) condition:
    build, lesion, calibrate, learning block, context probe blocks, accuracy."""
    if stimuli is None:
        if data is None:
            data = load_experiment_data(cfg)
        stimuli = select_stimuli(
            data, cfg.target_class, cfg.non_target_class, cfg.anchor_policy, cfg.seed)

    master = np.random.default_rng(cfg.seed)
    net_seed, lesion_seed, calib_seed, sched_seed = (
        int(s) for s in master.integers(_SEED_MAX, size=4))

    net = build_network(cfg.network, net_seed)
    apply_lesion(net, cfg.lesion_p, lesion_seed)

    assignment = calibrate_response_labels(
        net, stimuli, cfg.calibration_trials, calib_seed,
        presentation_ms=cfg.presentation_ms, gap_ms=cfg.gap_ms, r_max=cfg.r_max)

    schedule = build_schedule(
        cfg.schedule, cfg.n_trials, cfg.mix, sched_seed,
        presentation_ms=cfg.presentation_ms, gap_ms=cfg.gap_ms)

    stim_by_cat = {
        TARGET: stimuli.target,
        NON_TARGET: stimuli.non_target,
        CONTEXT_TARGET: stimuli.context_target,
        CONTEXT_NON_TARGET: stimuli.context_non_target,
    }
    anchor_by_cat = {
        CONTEXT_TARGET: stimuli.target,
        CONTEXT_NON_TARGET: stimuli.non_target,
    }

    outcomes = []
    for category, trial_seed in schedule.learning:
        outcome, _ = run_trial(
            net, stim_by_cat[category], schedule.presentation_ms, trial_seed,
            assignment, category=category, plasticity_on=True,
            r_max=cfg.r_max, gap_ms=schedule.gap_ms)
        outcomes.append(outcome)
    for category, trial_seed in schedule.probes:
        outcome, _ = run_probe_trial(
            net, anchor_by_cat[category], stim_by_cat[category],
            schedule.presentation_ms, trial_seed, assignment, category,
            anchor_ms=cfg.probe_anchor_ms, gap_ms=schedule.gap_ms, r_max=cfg.r_max)
        outcomes.append(outcome)

    summary = ResultsSummary(
        schedule=cfg.schedule,
        lesion_p=cfg.lesion_p,
        connectivity=condition_label(cfg.lesion_p),
        accuracy=compute_accuracy(outcomes),
        counts=_count_pairs(outcomes),
        n_trials=cfg.n_trials,
        assignment=assignment,
        seed=cfg.seed,
    )
    return ExperimentResult(summary, net, outcomes, schedule, stimuli, assignment)


def target_rf_correlation(net: Network, target_stimulus, seed: int = 0, r_max: float = 63.75,
                          probe_ms: float = 350.0) -> tuple[float, int]:
    """Pearson correlation between the most target-driven memory neuron's
    input weight image and the target stimulus. Returns (correlation, neuron)."""
    rng_in, rng_nm, rng_nr = _spawn_rngs(seed, 3)
    was_plastic = net.plasticity_enabled
    net.plasticity_enabled = False
    win = _present(net, target_stimulus, probe_ms, r_max, rng_in, rng_nm, rng_nr)
    net.plasticity_enabled = was_plastic
    neuron = int(np.argmax(win.mem_spikes.sum(axis=0)))
    rf = net.input_mem.weights[:, neuron]
    pixels = np.asarray(target_stimulus, dtype=np.float64).reshape(-1)
    if rf.std() == 0.0 or pixels.std() == 0.0:
        return 0.0, neuron
    corr = float(np.corrcoef(rf, pixels)[0, 1])
    return corr, neuron
