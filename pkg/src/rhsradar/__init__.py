"""Amplitude beamforming for distributed MIMO radar built from holographic surfaces."""

from .baseline import CostModel, PhasedSubarray, equivalent_config, grid_shape, phased_mimo_beamform
from .draoa import DraoaConfig, DraoaError, DraoaResult, gaussian_rounding, run_draoa
from .rhs import RhsPanel, element_positions, waveguide_response
from .scenario import Scatterer, Scene, draw_reflections, make_waveforms, steering_vector, trial_rng
from .sdp import LiftedSdp, SolverError, assemble_rx_sdp, assemble_tx_sdp, solve_sdp
from .signal_chain import BeamformerSet, LinkModel, SinrReport, link_model, sinr_per_pair

__all__ = [
    "BeamformerSet", "CostModel", "DraoaConfig", "DraoaError", "DraoaResult", "LiftedSdp", "LinkModel",
    "PhasedSubarray", "RhsPanel", "Scatterer", "Scene", "SinrReport", "SolverError", "assemble_rx_sdp",
    "assemble_tx_sdp", "draw_reflections", "element_positions", "equivalent_config", "gaussian_rounding",
    "grid_shape", "link_model", "make_waveforms", "phased_mimo_beamform", "run_draoa", "sinr_per_pair",
    "solve_sdp", "steering_vector", "trial_rng", "waveguide_response",
]
