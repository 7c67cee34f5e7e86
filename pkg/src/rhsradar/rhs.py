"""Geometry and waveguide response of a single RHS subarray.

An RHS panel is a rectangular grid of metamaterial elements fed by ``K``
feeds on one edge.  The reference wave travels inside the waveguide, so
every (element, feed) pair picks up a phase ``exp(-j 2 pi nu D / lambda)``
and an attenuation ``exp(-a D)`` where ``D`` is the in-plane distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_ORTHO_TOL = 1e-12


def _as_axes(orientation) -> np.ndarray:
    axes = np.asarray(orientation, dtype=float).reshape(2, 3)
    gram = axes @ axes.T
    if not np.allclose(gram, np.eye(2), atol=_ORTHO_TOL, rtol=0.0):
        raise ValueError("panel orientation axes must be orthonormal")
    return axes


def edge_feeds(n_x: int, n_y: int, spacing: float, n_feeds: int) -> np.ndarray:
    """Place ``n_feeds`` feeds evenly along the lower (-y) edge of the panel.

    Returns in-plane (x, y) coordinates relative to the panel center.  Each
    feed sits at the middle of one of ``n_feeds`` equal edge segments.
    """
    width = n_x * spacing
    xs = (np.arange(n_feeds) + 0.5) / n_feeds * width - width / 2
    ys = np.full(n_feeds, -n_y * spacing / 2)
    return np.column_stack([xs, ys])


@dataclass(frozen=True, eq=False)
class RhsPanel:
    """One RHS subarray.

    ``feed_positions`` are in-plane coordinates (meters) relative to the
    panel center; ``orientation`` holds the two in-plane unit axes as rows.
    If ``feed_positions`` is omitted, ``n_feeds`` feeds are spread along the
    lower edge.
    """

    n_x: int
    n_y: int
    element_spacing: float
    n_feeds: int = 5
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.eye(3)[:2])
    feed_positions: np.ndarray | None = None

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1 or self.n_feeds < 1:
            raise ValueError("panel needs at least one element and one feed")
        if not (np.isfinite(self.element_spacing) and self.element_spacing > 0):
            raise ValueError("element_spacing must be positive and finite")
        center = np.asarray(self.center, dtype=float).reshape(3)
        if not np.all(np.isfinite(center)):
            raise ValueError("panel center must be finite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "orientation", _as_axes(self.orientation))
        if self.feed_positions is None:
            feeds = edge_feeds(self.n_x, self.n_y, self.element_spacing, self.n_feeds)
        else:
            feeds = np.asarray(self.feed_positions, dtype=float).reshape(-1, 2)
            if len(feeds) != self.n_feeds:
                raise ValueError("feed_positions length must equal n_feeds")
        if not np.all(np.isfinite(feeds)):
            raise ValueError("feed positions must be finite")
        half = np.array([self.n_x, self.n_y]) * self.element_spacing / 2
        if np.any(np.abs(feeds) > half + 1e-12):
            raise ValueError("feed positions must lie within the panel rectangle")
        object.__setattr__(self, "feed_positions", feeds)

    @property
    def n_elements(self) -> int:
        return self.n_x * self.n_y

    @property
    def normal(self) -> np.ndarray:
        return np.cross(self.orientation[0], self.orientation[1])

    def local_positions(self) -> np.ndarray:
        """In-plane (x, y) offsets of every element, x-major ordering."""
        d = self.element_spacing
        xs = (np.arange(self.n_x) - (self.n_x - 1) / 2) * d
        ys = (np.arange(self.n_y) - (self.n_y - 1) / 2) * d
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    def translated(self, offset) -> "RhsPanel":
        return RhsPanel(
            self.n_x, self.n_y, self.element_spacing, self.n_feeds,
            center=self.center + np.asarray(offset, dtype=float),
            orientation=self.orientation, feed_positions=self.feed_positions,
        )


def element_positions(panel: RhsPanel) -> np.ndarray:
    """World coordinates of the elements, shape ``(N, 3)``.

    Index ``n = ix * n_y + iy``; every other module relies on this order.
    """
    local = panel.local_positions()
    return panel.center + local @ panel.orientation


@dataclass(frozen=True, eq=False)
class WaveguideResponse:
    q_matrix: np.ndarray
    gamma_matrix: np.ndarray
    distances: np.ndarray
    refractive_index: float
    attenuation_factor: float
    wavelength: float

    @property
    def chain(self) -> np.ndarray:
        """``Q o Gamma``, the N x K element-by-feed transfer matrix."""
        return self.q_matrix * self.gamma_matrix


def feed_distances(panel: RhsPanel) -> np.ndarray:
    elems = panel.local_positions()
    diff = elems[:, None, :] - panel.feed_positions[None, :, :]
    return np.linalg.norm(diff, axis=-1)


def waveguide_response(panel: RhsPanel, wavelength: float, nu: float, a: float) -> WaveguideResponse:
    if not (np.isfinite(wavelength) and wavelength > 0):
        raise ValueError("wavelength must be positive and finite")
    if not (np.isfinite(a) and a >= 0):
        raise ValueError("attenuation factor must be >= 0")
    if not np.isfinite(nu):
        raise ValueError("refractive index must be finite")
    dist = feed_distances(panel)
    if not np.all(np.isfinite(dist)):
        raise ValueError("non-finite panel geometry")
    q = np.exp(-2j * np.pi * nu * dist / wavelength)
    gamma = np.exp(-a * dist)
    return WaveguideResponse(q, gamma, dist, float(nu), float(a), float(wavelength))
