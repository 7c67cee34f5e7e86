"""Distributed phased-MIMO baseline and the equal power / equal cost bookkeeping."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .rhs import RhsPanel
from .scenario import Scene, make_waveforms
from .signal_chain import LinkModel, SinrReport, scene_geometry, sinr_table, worst_case


@dataclass(frozen=True)
class CostModel:
    eta_rhs: float = 0.25
    eta_phased: float = 0.04
    delta: float = 10.0  # phased element cost / RHS element cost
    phased_unit_cost: float = 10.0

    def __post_init__(self):
        for name in ("eta_rhs", "eta_phased"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must be in (0, 1]")
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if not self.phased_unit_cost > 0:
            raise ValueError("phased_unit_cost must be > 0")

    @property
    def rhs_unit_cost(self) -> float:
        return self.phased_unit_cost / self.delta


@dataclass(frozen=True)
class EquivalentConfig:
    n_rhs_per_panel: int
    n_phased_per_panel: int
    rhs_radiated: float  # total over the P transmit subarrays
    phased_radiated: float
    rhs_cost: float
    phased_cost: float
    consumed_power: float

    def per_panel_power(self, n_tx: int) -> tuple:
        return self.rhs_radiated / n_tx, self.phased_radiated / n_tx


def equivalent_config(cost_budget: float, power_budget: float, cost_model: CostModel, n_tx: int,
                      n_rx: int) -> EquivalentConfig:
    """Size RHS and phased systems that cost and consume the same.

    ``cost_budget`` is per subarray.  The phased side gets
    ``cost_budget / phased_unit_cost`` elements per subarray and the RHS
    ``delta`` times as many.  ``power_budget`` is the total consumed power C;
    each technology radiates its efficiency times C, split evenly over the
    transmit subarrays.
    """
    if not (cost_budget > 0 and power_budget > 0):
        raise ValueError("budgets must be > 0")
    if n_tx < 1 or n_rx < 1:
        raise ValueError("need at least one subarray per side")
    n_phased = cost_budget / cost_model.phased_unit_cost
    n_rhs = cost_budget / cost_model.rhs_unit_cost
    if n_phased < 1 - 1e-12:
        raise ValueError("cost budget too small for one phased element")
    n_phased_i, n_rhs_i = int(round(n_phased)), int(round(n_rhs))
    if abs(n_phased - n_phased_i) > 1e-9 or abs(n_rhs - n_rhs_i) > 1e-9:
        raise ValueError("cost budget does not buy a whole number of elements")
    panels = n_tx + n_rx
    return EquivalentConfig(
        n_rhs_i, n_phased_i,
        rhs_radiated=cost_model.eta_rhs * power_budget,
        phased_radiated=cost_model.eta_phased * power_budget,
        rhs_cost=panels * n_rhs_i * cost_model.rhs_unit_cost,
        phased_cost=panels * n_phased_i * cost_model.phased_unit_cost,
        consumed_power=power_budget,
    )


def grid_shape(n: int) -> tuple:
    """Most nearly square (n_x, n_y) with n_x * n_y = n and n_x <= n_y."""
    if n < 1:
        raise ValueError("need at least one element")
    n_x = max(d for d in range(1, math.isqrt(n) + 1) if n % d == 0)
    return n_x, n // n_x


@dataclass(frozen=True, eq=False)
class PhasedSubarray:
    """Phase-only subarray; ``gain`` is the common amplitude set by the power budget."""

    panel: RhsPanel
    weights: np.ndarray
    gain: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex).ravel()
        if w.shape[0] != self.panel.n_elements:
            raise ValueError("one weight per element required")
        if not np.allclose(np.abs(w), 1.0, atol=1e-12):
            raise ValueError("phased weights must have unit modulus")
        object.__setattr__(self, "weights", w)
        if not self.gain >= 0:
            raise ValueError("gain must be >= 0")

    @property
    def effective(self) -> np.ndarray:
        return self.gain * self.weights


def phased_panels(scene: Scene, n_elements: int, spacing: float | None = None):
    """Phased subarrays at the same centers and orientations as the scene's panels."""
    spacing = scene.wavelength / 2 if spacing is None else spacing
    n_x, n_y = grid_shape(n_elements)

    def make(panel):
        return RhsPanel(n_x, n_y, spacing, n_feeds=1, center=panel.center, orientation=panel.orientation,
                        feed_positions=np.zeros((1, 2)))

    return [make(p) for p in scene.tx_panels], [make(q) for q in scene.rx_panels]


def phased_link(scene: Scene, tx_panels, rx_panels) -> LinkModel:
    """Link model of ideal phased subarrays: one lossless feed per element."""
    n_t, n_r = tx_panels[0].n_elements, rx_panels[0].n_elements
    wf = make_waveforms(scene.n_tx, scene.snapshots_tx)
    return LinkModel(
        [np.ones((n_t, 1))] * len(tx_panels), [np.ones((n_r, 1))] * len(rx_panels),
        [wf.rows[p][None, :] for p in range(scene.n_tx)],
        *scene_geometry(scene, tx_panels, rx_panels),
        variances=scene.variances(), noise_power=scene.noise_power, n_targets=scene.n_targets,
    )


@dataclass(frozen=True, eq=False)
class PhasedResult:
    tx: list
    rx: list
    report: SinrReport
    tx_assignment: tuple
    rx_assignment: tuple


def _unit(z):
    mag = np.abs(z)
    return np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), 1.0)


def _mvdr_phases(link: LinkModel, q: int, target: int, tx_w: np.ndarray) -> np.ndarray:
    """Phase of R^-1 a for one receive subarray, R = clutter/other-target echoes plus noise."""
    t = link.tx_gains(tx_w)  # P Q L
    load = (link.variances[:, q, :] * t[:, q, :]).mean(axis=0)
    R = link.noise_power * np.eye(link.n_r, dtype=complex)
    for l in range(link.n_scatterers):
        if l != target:
            a = link.rx_steer[q, l]
            R += load[l] * np.outer(a, a.conj())
    return _unit(np.linalg.solve(R, link.rx_steer[q, target].conj()))


def phased_mimo_beamform(scene: Scene, n_elements: int, radiated_per_panel: float, *, adaptive: bool = False,
                         spacing: float | None = None, max_combinations: int = 4096) -> PhasedResult:
    """Conjugate-steering phased-MIMO baseline.

    Transmit subarray ``p`` steers at target ``p mod L_t``.  Each receive
    subarray steers at one target; the assignment with the best worst-case
    average SINR over all ``L_t^Q`` choices is kept.  ``adaptive`` swaps the
    receive steering for phase-projected MVDR weights against the other
    echoes.
    """
    tx_panels, rx_panels = phased_panels(scene, n_elements, spacing)
    link = phased_link(scene, tx_panels, rx_panels)
    P, Q, L_t = scene.n_tx, scene.n_rx, scene.n_targets
    tx_assign = tuple(p % L_t for p in range(P))
    phases_t = np.stack([_unit(link.tx_steer[p, tx_assign[p]].conj()) for p in range(P)])
    # every element radiates |s_p|^2 = 1 per unit weight
    gain = math.sqrt(radiated_per_panel / n_elements)
    w_t = (gain * phases_t).ravel()

    if adaptive:
        options = [[_mvdr_phases(link, q, l, w_t) for l in range(L_t)] for q in range(Q)]
    else:
        options = [[_unit(link.rx_steer[q, l].conj()) for l in range(L_t)] for q in range(Q)]
    if L_t ** Q > max_combinations:
        raise ValueError("too many receive assignments to enumerate")
    t = link.tx_gains(w_t)
    best, best_score = None, -np.inf
    for combo in itertools.product(range(L_t), repeat=Q):
        w_r = np.concatenate([options[q][combo[q]] for q in range(Q)])
        score = float(worst_case(sinr_table(link.variances, t, link.rx_gains(w_r), link.rx_noise(w_r), L_t)))
        if score > best_score:
            best, best_score = combo, score
    w_r = np.concatenate([options[q][best[q]] for q in range(Q)])
    table = sinr_table(link.variances, t, link.rx_gains(w_r), link.rx_noise(w_r), L_t)
    tx = [PhasedSubarray(tx_panels[p], phases_t[p], gain) for p in range(P)]
    rx = [PhasedSubarray(rx_panels[q], options[q][best[q]]) for q in range(Q)]
    return PhasedResult(tx, rx, SinrReport.from_table(table), tx_assign, tuple(best))
