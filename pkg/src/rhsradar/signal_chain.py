"""Signal algebra: radiated signals, matched-filter outputs, SINR, quadratic forms.

The echo of scatterer ``l`` on pair ``(p, q)`` after the receive chain is the
rank-one matrix ``u v^T`` with

    u = B_q^T diag(a_q) psi_q          (K_r,   receive side)
    v = (psi_p^T diag(a_p) B_p S_p J)^T (I_r,   transmit side)

so its energy factors into ``|u|^2 |v|^2``.  All optimizer forms are built
on that factorization; :func:`matched_filter_output` forms the matrices
literally and is used to cross-check it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rhs import waveguide_response
from .scenario import Scene, WaveformSet, make_waveforms, shift_matrix, steering_vector


def _uniform(sizes, what):
    if len(set(sizes)) != 1:
        raise ValueError(f"all {what} must have the same size")
    return sizes[0]


@dataclass(frozen=True, eq=False)
class BeamformerSet:
    """Stacked real amplitudes: ``psi_t`` has length P*N_t, ``psi_r`` Q*N_r."""

    psi_t: np.ndarray
    psi_r: np.ndarray

    def __post_init__(self):
        for name in ("psi_t", "psi_r"):
            v = np.asarray(getattr(self, name), dtype=float).ravel()
            if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} entries must lie in [0, 1]")
            object.__setattr__(self, name, v)

    def tx_block(self, p: int, n_t: int) -> np.ndarray:
        return self.psi_t[p * n_t:(p + 1) * n_t]

    def rx_block(self, q: int, n_r: int) -> np.ndarray:
        return self.psi_r[q * n_r:(q + 1) * n_r]


@dataclass(frozen=True, eq=False)
class SinrReport:
    per_pair: np.ndarray  # P x Q x L_t, linear
    per_target: np.ndarray
    worst_case: float

    @classmethod
    def from_table(cls, per_pair: np.ndarray) -> "SinrReport":
        per_target = per_pair.mean(axis=(0, 1))
        return cls(per_pair, per_target, float(per_target.min()))

    @property
    def per_pair_db(self) -> np.ndarray:
        return to_db(self.per_pair)

    @property
    def per_target_db(self) -> np.ndarray:
        return to_db(self.per_target)

    @property
    def worst_case_db(self) -> float:
        return float(to_db(self.worst_case))


def to_db(x):
    with np.errstate(divide="ignore"):
        return 10 * np.log10(x)


@dataclass(frozen=True, eq=False)
class LinkModel:
    """Everything the SINR depends on, precomputed for one scene.

    ``tx_chains[p]`` / ``rx_chains[q]`` are the element-by-feed transfer
    matrices (``Q o Gamma`` for an RHS, a column of ones for an ideal phased
    subarray).
    """

    tx_chains: Sequence[np.ndarray]
    rx_chains: Sequence[np.ndarray]
    waveforms: Sequence[np.ndarray]  # S_p, K_t x I_t
    tx_steer: np.ndarray  # P x L x N_t
    rx_steer: np.ndarray  # Q x L x N_r
    shifts: np.ndarray  # P x Q x L x I_t x I_r
    variances: np.ndarray  # P x Q x L
    noise_power: float
    n_targets: int

    @property
    def n_tx(self) -> int:
        return len(self.tx_chains)

    @property
    def n_rx(self) -> int:
        return len(self.rx_chains)

    @property
    def n_scatterers(self) -> int:
        return self.variances.shape[2]

    @property
    def n_t(self) -> int:
        return self.tx_steer.shape[2]

    @property
    def n_r(self) -> int:
        return self.rx_steer.shape[2]

    @property
    def snapshots_rx(self) -> int:
        return self.shifts.shape[-1]

    def __post_init__(self):
        # F[p,q,l] = diag(a_p^l) B_p S_p J_pq^l, shape N_t x I_r
        P, Q, L = self.variances.shape
        radiated = [self.tx_chains[p] @ self.waveforms[p] for p in range(P)]
        F = np.empty((P, Q, L, self.n_t, self.snapshots_rx), dtype=complex)
        for p in range(P):
            for q in range(Q):
                for l in range(L):
                    F[p, q, l] = (self.tx_steer[p, l][:, None] * radiated[p]) @ self.shifts[p, q, l]
        # E[q,l] = B_q^T diag(a_q^l), shape K_r x N_r
        E = np.stack([
            np.stack([self.rx_chains[q].T * self.rx_steer[q, l][None, :] for l in range(L)])
            for q in range(Q)
        ])
        noise_diag = np.stack([np.sum(np.abs(B) ** 2, axis=1) for B in self.rx_chains])
        power_diag = np.stack([np.sum(np.abs(x) ** 2, axis=1) for x in radiated])
        object.__setattr__(self, "tx_factor", F)
        object.__setattr__(self, "rx_factor", E)
        object.__setattr__(self, "rx_noise_diag", noise_diag)
        object.__setattr__(self, "tx_power_diag", power_diag)
        object.__setattr__(self, "radiated_unit", radiated)

    # -- gains for explicit weight vectors (real amplitudes or complex phased weights)

    def tx_gains(self, w_t: np.ndarray) -> np.ndarray:
        """|w_p^T F_pql|^2 for stacked weights ``(..., P*N_t)`` -> ``(..., P, Q, L)``."""
        w = np.asarray(w_t).reshape(w_t.shape[:-1] + (self.n_tx, self.n_t))
        v = np.einsum("...pn,pqlni->...pqli", w, self.tx_factor)
        return np.sum(np.abs(v) ** 2, axis=-1)

    def rx_gains(self, w_r: np.ndarray) -> np.ndarray:
        """|E_ql w_q|^2 -> ``(..., Q, L)``."""
        w = np.asarray(w_r).reshape(w_r.shape[:-1] + (self.n_rx, self.n_r))
        u = np.einsum("qlkn,...qn->...qlk", self.rx_factor, w)
        return np.sum(np.abs(u) ** 2, axis=-1)

    def rx_noise(self, w_r: np.ndarray) -> np.ndarray:
        """Expected noise energy sigma_n^2 |B_q^T diag(w_q)|_F^2 -> ``(..., Q)``."""
        w = np.asarray(w_r).reshape(w_r.shape[:-1] + (self.n_rx, self.n_r))
        return self.noise_power * np.einsum("qn,...qn->...q", self.rx_noise_diag, np.abs(w) ** 2)

    def tx_power(self, w_t: np.ndarray) -> np.ndarray:
        """Radiated power of every Tx subarray, ``(..., P)``."""
        w = np.asarray(w_t).reshape(w_t.shape[:-1] + (self.n_tx, self.n_t))
        return np.einsum("pn,...pn->...p", self.tx_power_diag, np.abs(w) ** 2)

    # -- real quadratic-form blocks (valid for real amplitude vectors)

    def tx_blocks(self) -> np.ndarray:
        """Re(F F^H), shape P x Q x L x N_t x N_t."""
        F = self.tx_factor
        return np.einsum("pqlni,pqlmi->pqlnm", F, F.conj()).real

    def rx_blocks(self) -> np.ndarray:
        """Re(E^H E), shape Q x L x N_r x N_r."""
        E = self.rx_factor
        return np.einsum("qlkn,qlkm->qlnm", E.conj(), E).real

    def noise_blocks(self) -> np.ndarray:
        """sigma_n^2 diag(sum_k |B_q|^2), shape Q x N_r x N_r."""
        return np.stack([np.diag(self.noise_power * d) for d in self.rx_noise_diag])


def link_model(scene: Scene) -> LinkModel:
    _uniform([p.n_elements for p in scene.tx_panels], "Tx panels")
    _uniform([p.n_elements for p in scene.rx_panels], "Rx panels")
    _uniform([p.n_feeds for p in scene.rx_panels], "Rx panels (feeds)")
    lam, nu, a = scene.wavelength, scene.refractive_index, scene.attenuation
    tx_chains = [waveguide_response(p, lam, nu, a).chain for p in scene.tx_panels]
    rx_chains = [waveguide_response(p, lam, nu, a).chain for p in scene.rx_panels]
    wf = make_waveforms(scene.n_tx, scene.snapshots_tx)
    waveforms = [wf.stacked(p, panel.n_feeds) for p, panel in enumerate(scene.tx_panels)]
    return LinkModel(
        tx_chains, rx_chains, waveforms,
        *scene_geometry(scene),
        variances=scene.variances(), noise_power=scene.noise_power,
        n_targets=scene.n_targets,
    )


def scene_geometry(scene: Scene, tx_panels=None, rx_panels=None):
    """Steering arrays and shift matrices for ``scene`` (optionally other panels)."""
    tx_panels = scene.tx_panels if tx_panels is None else tx_panels
    rx_panels = scene.rx_panels if rx_panels is None else rx_panels
    lam = scene.wavelength
    tx_steer = np.array([[steering_vector(p, s.position, lam) for s in scene.scatterers] for p in tx_panels])
    rx_steer = np.array([[steering_vector(q, s.position, lam) for s in scene.scatterers] for q in rx_panels])
    P, Q, L = len(tx_panels), len(rx_panels), scene.n_scatterers
    shifts = np.empty((P, Q, L, scene.snapshots_tx, scene.snapshots_rx))
    for p in range(P):
        for q in range(Q):
            for l in range(L):
                shifts[p, q, l] = shift_matrix(scene.delay(p, q, l), scene.snapshots_tx, scene.snapshots_rx)
    return tx_steer, rx_steer, shifts


def tx_radiated(chain: np.ndarray, psi_p: np.ndarray, waveform: np.ndarray) -> np.ndarray:
    """X_p = diag(psi_p) (Q o Gamma) S_p."""
    psi_p = np.asarray(psi_p)
    if chain.shape[0] != psi_p.shape[0] or chain.shape[1] != waveform.shape[0]:
        raise ValueError("dimension mismatch in tx_radiated")
    return psi_p[:, None] * (chain @ waveform)


def matched_filter_output(link: LinkModel, beamformers, reflections: np.ndarray, noise=None) -> np.ndarray:
    """Y_pq for every pair, shape P x Q x K_r x I_r.

    ``noise`` is ``None`` (omitted; its power is handled analytically), a
    ``np.random.Generator`` to draw N_pq, or an explicit P x Q x N_r x I_r
    array.  Drawn noise has per-entry variance sigma_n^2 / I_r, so each
    element carries sigma_n^2 over the window, the same normalization as
    the unit-energy waveforms.  ``beamformers`` may be a :class:`BeamformerSet` or a pair of
    stacked (possibly complex) weight vectors.
    """
    w_t, w_r = _weights(beamformers)
    P, Q, L = link.variances.shape
    n_t, n_r, I_r = link.n_t, link.n_r, link.snapshots_rx
    if w_t.shape[0] != P * n_t or w_r.shape[0] != Q * n_r:
        raise ValueError("beamformer length does not match the link")
    if reflections.shape != (P, Q, L):
        raise ValueError("reflections must be P x Q x L")
    if isinstance(noise, np.random.Generator):
        z = noise.standard_normal((P, Q, n_r, I_r, 2))
        noise = np.sqrt(link.noise_power / (2 * I_r)) * (z[..., 0] + 1j * z[..., 1])
    K = link.rx_chains[0].shape[1]
    Y = np.zeros((P, Q, K, I_r), dtype=complex)
    for p in range(P):
        X_p = tx_radiated(link.tx_chains[p], w_t[p * n_t:(p + 1) * n_t], link.waveforms[p])
        for q in range(Q):
            V = np.zeros((n_r, I_r), dtype=complex)
            for l in range(L):
                A = np.outer(link.rx_steer[q, l], link.tx_steer[p, l])
                V += reflections[p, q, l] * A @ X_p @ link.shifts[p, q, l]
            if noise is not None:
                V += noise[p, q]
            rx = w_r[q * n_r:(q + 1) * n_r][:, None] * link.rx_chains[q]
            Y[p, q] = rx.T @ V
    return Y


def _weights(beamformers):
    if isinstance(beamformers, BeamformerSet):
        return beamformers.psi_t, beamformers.psi_r
    w_t, w_r = beamformers
    return np.asarray(w_t), np.asarray(w_r)


def sinr_table(variances, t, r, noise, n_targets):
    """Per-pair SINR from separable gains.

    ``t`` is (..., P, Q, L), ``r`` (..., Q, L) and ``noise`` (..., Q); the
    leading dimensions broadcast.  Returns (..., P, Q, L_t).
    """
    terms = variances * t * r[..., None, :, :]
    total = terms.sum(axis=-1)
    noise = noise[..., None, :]
    num = terms[..., :n_targets]
    interference = np.stack(
        [total - terms[..., l] for l in range(n_targets)], axis=-1
    )
    # cancellation guard: interference is a sum of nonnegative terms
    interference = np.maximum(interference, 0.0)
    den = interference + noise[..., None]
    if np.any(den <= 0):
        raise ValueError("degenerate receive chain: zero interference-plus-noise")
    return num / den


def sinr_per_pair(link: LinkModel, beamformers) -> SinrReport:
    w_t, w_r = _weights(beamformers)
    table = sinr_table(link.variances, link.tx_gains(w_t), link.rx_gains(w_r),
                       link.rx_noise(w_r), link.n_targets)
    return SinrReport.from_table(table)


def worst_case(table: np.ndarray) -> np.ndarray:
    """min over targets of the pair average; works on batched tables."""
    return table.mean(axis=(-3, -2)).min(axis=-1)


# -- lifted (homogenized) quantities -------------------------------------------

def lift(psi: np.ndarray) -> np.ndarray:
    """Rank-one lift [psi; 1][psi; 1]^T."""
    x = np.append(np.asarray(psi, dtype=float), 1.0)
    return np.outer(x, x)


def _block_traces(blocks, Psi, n_sub, n_el):
    """Tr(block_i Psi[sub_i, sub_i]) with blocks indexed (..., sub, n, n)."""
    core = Psi[:n_sub * n_el, :n_sub * n_el].reshape(n_sub, n_el, n_sub, n_el)
    diag_blocks = np.stack([core[i, :, i, :] for i in range(n_sub)])
    return np.einsum("...inm,imn->...i", blocks, diag_blocks)


def lifted_tx_gains(link: LinkModel, Psi_t: np.ndarray) -> np.ndarray:
    T = link.tx_blocks()  # P Q L n n
    blocks = np.moveaxis(T, 0, 2)  # Q L P n n
    return np.moveaxis(_block_traces(blocks, Psi_t, link.n_tx, link.n_t), -1, 0)


def lifted_rx_gains(link: LinkModel, Psi_r: np.ndarray) -> np.ndarray:
    G = np.moveaxis(link.rx_blocks(), 0, 1)  # L Q n n
    return _block_traces(G, Psi_r, link.n_rx, link.n_r).T


def lifted_rx_noise(link: LinkModel, Psi_r: np.ndarray) -> np.ndarray:
    return _block_traces(link.noise_blocks(), Psi_r, link.n_rx, link.n_r)


def lifted_sinr(link: LinkModel, Psi_t: np.ndarray, Psi_r: np.ndarray) -> np.ndarray:
    """Trace-form SINR table for lifted matrices (equals the true SINR at rank one)."""
    return sinr_table(link.variances, lifted_tx_gains(link, Psi_t), lifted_rx_gains(link, Psi_r),
                      lifted_rx_noise(link, Psi_r), link.n_targets)


# -- quadratic forms handed to the SDP -------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadraticForms:
    """Forms on one side with the other side fixed.

    ``signal[p,q,l]`` and ``interference[p,q,l]`` are full (unpadded)
    symmetric matrices of size ``dim``; ``noise[p,q]`` is the scalar noise
    term that does not depend on the free side (zero on the receive side,
    where noise is part of ``interference``).  ``power`` holds C_p on the
    transmit side and is ``None`` on the receive side.
    """

    side: str
    n_sub: int
    n_el: int
    signal: np.ndarray
    interference: np.ndarray
    noise: np.ndarray
    power: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.n_sub * self.n_el


def _embed(block, index, n_sub, n_el):
    out = np.zeros((n_sub * n_el, n_sub * n_el))
    s = slice(index * n_el, (index + 1) * n_el)
    out[s, s] = block
    return out


def power_form(chain: np.ndarray, waveform: np.ndarray, p: int, n_tx: int) -> np.ndarray:
    """C_p: [((Q o Gamma) S_p)((Q o Gamma) S_p)^H] o I embedded at block p."""
    radiated = chain @ waveform
    block = np.real(np.diag(np.diag(radiated @ radiated.conj().T)))
    return _embed(block, p, n_tx, chain.shape[0])


def power_forms(link: LinkModel) -> np.ndarray:
    return np.stack([power_form(link.tx_chains[p], link.waveforms[p], p, link.n_tx)
                     for p in range(link.n_tx)])


def _as_lifted(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape[0] != dim:
            raise ValueError("beamformer length mismatch")
        return lift(x)
    return x


def transmit_forms(link: LinkModel, psi_r) -> QuadraticForms:
    """R^{l}_pq, R^I_pq and the noise term with the receive side fixed.

    ``psi_r`` may be an amplitude vector or a lifted matrix.
    """
    Psi_r = _as_lifted(psi_r, link.n_rx * link.n_r)
    r = lifted_rx_gains(link, Psi_r)  # Q L
    noise_q = lifted_rx_noise(link, Psi_r)  # Q
    T = link.tx_blocks()
    P, Q, L, Lt = link.n_tx, link.n_rx, link.n_scatterers, link.n_targets
    full = np.zeros((P, Q, L, P * link.n_t, P * link.n_t))
    for p in range(P):
        s = slice(p * link.n_t, (p + 1) * link.n_t)
        full[p, :, :, s, s] = (link.variances[p] * r)[:, :, None, None] * T[p]
    total = full.sum(axis=2)
    interference = np.stack([total - full[:, :, l] for l in range(Lt)], axis=2)
    noise = np.broadcast_to(noise_q, (P, Q)).copy()
    return QuadraticForms("tx", P, link.n_t, full[:, :, :Lt], interference, noise, power_forms(link))


def receive_forms(link: LinkModel, psi_t) -> QuadraticForms:
    """M^{l}_pq and M^{IN}_pq (interference plus noise) with the transmit side fixed."""
    Psi_t = _as_lifted(psi_t, link.n_tx * link.n_t)
    t = lifted_tx_gains(link, Psi_t)  # P Q L
    G = link.rx_blocks()  # Q L n n
    Nb = link.noise_blocks()
    P, Q, L, Lt = link.n_tx, link.n_rx, link.n_scatterers, link.n_targets
    full = np.zeros((P, Q, L, Q * link.n_r, Q * link.n_r))
    noise_full = np.zeros((Q, Q * link.n_r, Q * link.n_r))
    for q in range(Q):
        s = slice(q * link.n_r, (q + 1) * link.n_r)
        full[:, q, :, s, s] = (link.variances[:, q] * t[:, q])[:, :, None, None] * G[q][None]
        noise_full[q, s, s] = Nb[q]
    total = full.sum(axis=2)
    interference = np.stack([total - full[:, :, l] + noise_full[None] for l in range(Lt)], axis=2)
    return QuadraticForms("rx", Q, link.n_r, full[:, :, :Lt], interference, np.zeros((P, Q)))


def form_ratios(forms: QuadraticForms, Psi: np.ndarray) -> np.ndarray:
    """Tr(S' Psi) / (Tr(I' Psi) + noise) for every (p, q, l_t)."""
    n = forms.dim
    core = Psi[:n, :n]
    num = np.einsum("pqlij,ji->pql", forms.signal, core)
    den = np.einsum("pqlij,ji->pql", forms.interference, core) + forms.noise[:, :, None]
    if np.any(den <= 0):
        raise ValueError("degenerate pair: zero denominator")
    return np.maximum(num, 0.0) / den
