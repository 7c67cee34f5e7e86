"""World model: subarray placement, scatterers, steering vectors, waveforms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rhs import RhsPanel, element_positions

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True, eq=False)
class Scatterer:
    position: np.ndarray
    kind: str = "target"
    reflect_var: float = 1.0
    per_pair_var: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        if self.kind not in ("target", "clutter"):
            raise ValueError(f"unknown scatterer kind {self.kind!r}")
        if not self.reflect_var > 0:
            raise ValueError("reflect_var must be > 0")
        if self.per_pair_var is not None:
            table = np.asarray(self.per_pair_var, dtype=float)
            if table.ndim != 2 or np.any(table <= 0):
                raise ValueError("per_pair_var must be a positive P x Q table")
            object.__setattr__(self, "per_pair_var", table)


@dataclass(frozen=True, eq=False)
class Scene:
    tx_panels: Sequence[RhsPanel]
    rx_panels: Sequence[RhsPanel]
    scatterers: Sequence[Scatterer]
    wavelength: float = 0.01
    noise_power: float = 4e-6
    p_max: float = 4e-3
    snapshots_tx: int = 16
    snapshots_rx: int = 16
    refractive_index: float = float(np.sqrt(3.0))
    attenuation: float = 5.0
    rng_seed: int = 0
    delays: np.ndarray | None = None  # P x Q x L integer sample delays
    carrier: float = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "tx_panels", tuple(self.tx_panels))
        object.__setattr__(self, "rx_panels", tuple(self.rx_panels))
        kinds = [s.kind for s in self.scatterers]
        # targets first, then clutter
        order = sorted(range(len(kinds)), key=lambda i: kinds[i] != "target")
        object.__setattr__(self, "scatterers", tuple(self.scatterers[i] for i in order))
        if self.carrier == 0.0:
            object.__setattr__(self, "carrier", SPEED_OF_LIGHT / self.wavelength)
        if not self.tx_panels or not self.rx_panels:
            raise ValueError("scene needs P >= 1 and Q >= 1 subarrays")
        if self.n_targets < 1:
            raise ValueError("scene needs at least one target")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be > 0")
        if not self.p_max > 0:
            raise ValueError("p_max must be > 0")
        if self.snapshots_tx < self.n_tx:
            raise ValueError("snapshots_tx must be >= P for orthogonal waveforms")
        if self.snapshots_rx < self.snapshots_tx:
            raise ValueError("snapshots_rx must be >= snapshots_tx")
        if self.delays is not None:
            d = np.asarray(self.delays, dtype=int)
            if d.shape != (self.n_tx, self.n_rx, self.n_scatterers):
                raise ValueError("delays must have shape P x Q x L")
            if np.any(d < 0) or np.any(d > self.snapshots_rx - self.snapshots_tx):
                raise ValueError("delay out of range")
            object.__setattr__(self, "delays", d)

    @property
    def n_tx(self) -> int:
        return len(self.tx_panels)

    @property
    def n_rx(self) -> int:
        return len(self.rx_panels)

    @property
    def n_scatterers(self) -> int:
        return len(self.scatterers)

    @property
    def n_targets(self) -> int:
        return sum(s.kind == "target" for s in self.scatterers)

    @property
    def n_sum(self) -> int:
        return sum(p.n_elements for p in self.tx_panels) + sum(p.n_elements for p in self.rx_panels)

    def variances(self) -> np.ndarray:
        """sigma_pq^l squared as a P x Q x L table."""
        out = np.empty((self.n_tx, self.n_rx, self.n_scatterers))
        for l, s in enumerate(self.scatterers):
            if s.per_pair_var is None:
                out[:, :, l] = s.reflect_var
            else:
                if s.per_pair_var.shape != (self.n_tx, self.n_rx):
                    raise ValueError("per_pair_var must be P x Q")
                out[:, :, l] = s.per_pair_var
        return out

    def delay(self, p: int, q: int, l: int) -> int:
        return 0 if self.delays is None else int(self.delays[p, q, l])


def steering_vector(panel: RhsPanel, scatterer_position, wavelength: float) -> np.ndarray:
    """Far-field steering vector ``exp(+j 2 pi / lambda * u . r_n)``.

    ``u`` is the unit direction from the panel center to the scatterer and
    ``r_n`` the offset of element ``n`` from the center.
    """
    rel = np.asarray(scatterer_position, dtype=float) - panel.center
    rng = np.linalg.norm(rel)
    if rng <= 1e-12 * max(1.0, np.linalg.norm(panel.center)):
        raise ValueError("degenerate geometry: scatterer at the panel center")
    u = rel / rng
    offsets = element_positions(panel) - panel.center
    return np.exp(2j * np.pi / wavelength * (offsets @ u))


@dataclass(frozen=True, eq=False)
class WaveformSet:
    rows: np.ndarray  # P x I_t, row p is s_p
    energy: float = 1.0

    def stacked(self, p: int, n_feeds: int) -> np.ndarray:
        """S_p: ``n_feeds`` copies of s_p, shape K x I_t."""
        return np.tile(self.rows[p], (n_feeds, 1))

    def gram(self) -> np.ndarray:
        return self.rows @ self.rows.conj().T


def make_waveforms(n_tx: int, snapshots: int) -> WaveformSet:
    if snapshots < n_tx:
        raise ValueError("insufficient snapshots for orthogonality")
    i = np.arange(snapshots)
    p = np.arange(n_tx)[:, None]
    rows = np.exp(-2j * np.pi * p * i / snapshots) / np.sqrt(snapshots)
    return WaveformSet(rows)


def shift_matrix(delay: int, snapshots_tx: int, snapshots_rx: int) -> np.ndarray:
    if not 0 <= delay <= snapshots_rx - snapshots_tx:
        raise ValueError(f"delay {delay} out of range for I_t={snapshots_tx}, I_r={snapshots_rx}")
    J = np.zeros((snapshots_tx, snapshots_rx))
    J[np.arange(snapshots_tx), np.arange(snapshots_tx) + delay] = 1.0
    return J


def trial_rng(seed: int, trial: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent generator for one (seed, trial, stream) triple."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial), int(stream)]))


def draw_reflections(scene: Scene, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian beta, shape P x Q x L."""
    var = scene.variances()
    z = rng.standard_normal(var.shape + (2,))
    return np.sqrt(var / 2) * (z[..., 0] + 1j * z[..., 1])


def random_centers(n: int, rng: np.random.Generator, box=((0.0, 2.0), (0.0, 2.0)), z: float = 0.0) -> np.ndarray:
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    xy = lo + (hi - lo) * rng.random((n, 2))
    return np.column_stack([xy, np.full(n, z)])
