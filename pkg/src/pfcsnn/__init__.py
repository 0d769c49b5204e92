"""Spiking working-memory circuit: conductance LIF neurons, trace STDP,
winner-take-all memory with recurrent self-excitation, and the task-switching
/ synaptic-lesion experiment harness built on them."""

__version__ = "0.1.0"

from .config import DEFAULTS, ExperimentConfig, load_config_file, parse_config_text, resolve_config
from .dataset import (
    LabeledImages,
    StimulusSet,
    cosine_similarity,
    load_idx,
    select_stimuli,
    write_idx,
)
from .encoding import PoissonTrains, RateImage, generate_poisson_train, image_to_rates
from .engine import WindowResult, run_window
from .experiment import (
    ExperimentResult,
    ResponseAssignment,
    ResultsSummary,
    Schedule,
    SustainedActivityResult,
    TrialOutcome,
    build_schedule,
    calibrate_response_labels,
    compute_accuracy,
    run_experiment,
    run_probe_trial,
    run_trial,
    sustained_activity_probe,
    target_rf_correlation,
)
from .lif import NeuronParams, NeuronState, init_state, inject_spike, step_neurons
from .network import LesionMask, Network, NetworkConfig, apply_lesion, build_network
from .stdp import (
    StdpParams,
    SynapseProjection,
    decay_traces,
    init_projection,
    on_post_spike,
    on_pre_spike,
    pair_delta_w,
)
from .synthdata import make_synthetic_dataset, write_synthetic_idx
