"""Reference instances and independent checks shared by the CLI and the tests."""

from __future__ import annotations

import numpy as np

from .draoa import DraoaConfig, gaussian_rounding, run_draoa
from .rhs import RhsPanel
from .scenario import Scatterer, Scene, trial_rng
from .signal_chain import BeamformerSet, LinkModel, lift, link_model, matched_filter_output, sinr_per_pair, \
    sinr_table, worst_case

SIGMA = 4e-6 * 10 ** 0.6  # 6 dB over the default noise power


def oracle_scene(with_clutter: bool = True, p_max: float | None = None) -> Scene:
    """P = Q = 1, two elements per side, one target (plus one clutter).

    When ``p_max`` is omitted the budget is half of what the all-ones
    transmit vector radiates, so the power bound is active.
    """
    spacing = 0.01 / 3
    tx = RhsPanel(2, 1, spacing, center=[0.2, 0.3, 0.0])
    rx = RhsPanel(2, 1, spacing, center=[1.6, 0.9, 0.0])
    scat = [Scatterer([0.5, 2.0, 1.0], "target", SIGMA)]
    if with_clutter:
        scat.append(Scatterer([1.0, 2.0, 2.0], "clutter", SIGMA))
    scene = Scene([tx], [rx], scat)
    if p_max is None:
        full = float(link_model(scene).tx_power(np.ones(2))[0])
        scene = Scene([tx], [rx], scat, p_max=0.5 * full)
    return scene


def grid_search(link: LinkModel, p_max: float, step: float) -> tuple:
    """Exhaustive search over amplitudes on a grid; returns (best value, psi_t, psi_r)."""
    levels = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    mesh_t = np.stack(np.meshgrid(*[levels] * (link.n_tx * link.n_t), indexing="ij"), -1).reshape(-1, link.n_tx
                                                                                                  * link.n_t)
    mesh_r = np.stack(np.meshgrid(*[levels] * (link.n_rx * link.n_r), indexing="ij"), -1).reshape(-1, link.n_rx
                                                                                                  * link.n_r)
    mesh_t = mesh_t[np.all(link.tx_power(mesh_t) <= p_max, axis=1)]
    mesh_r = mesh_r[mesh_r.max(axis=1) > 0]
    t = link.tx_gains(mesh_t)
    r, n = link.rx_gains(mesh_r), link.rx_noise(mesh_r)
    score = worst_case(sinr_table(link.variances, t[:, None], r[None], n[None], link.n_targets))
    g, h = np.unravel_index(int(np.argmax(score)), score.shape)
    return float(score[g, h]), mesh_t[g], mesh_r[h]


def tiny_random_scene(rng: np.random.Generator, max_sub: int = 2, max_el: int = 4, max_scat: int = 3) -> Scene:
    """Random small scene: P, Q <= max_sub, N <= max_el, L <= max_scat, random delays."""
    P, Q = rng.integers(1, max_sub + 1, size=2)
    n = int(rng.integers(1, max_el + 1))
    n_x = 2 if n % 2 == 0 and rng.random() < 0.5 else 1
    L = int(rng.integers(1, max_scat + 1))
    spacing = 0.01 / 3
    n_feeds = int(rng.integers(1, 4))
    panels = [RhsPanel(n_x, n // n_x, spacing, n_feeds=n_feeds,
                       center=[*rng.uniform(0, 2, size=2), 0.0]) for _ in range(P + Q)]
    scat = []
    for l in range(L):
        kind = "target" if l == 0 or rng.random() < 0.5 else "clutter"
        var = SIGMA * rng.uniform(0.5, 2.0)
        table = var * rng.uniform(0.5, 1.5, size=(P, Q)) if rng.random() < 0.5 else None
        scat.append(Scatterer([*rng.uniform(0, 2, size=2), rng.uniform(0.5, 2.5)], kind, var, table))
    I_t = int(max(P, 4))
    I_r = I_t + int(rng.integers(0, 3))
    delays = rng.integers(0, I_r - I_t + 1, size=(P, Q, L))
    return Scene(panels[:P], panels[P:], scat, snapshots_tx=I_t, snapshots_rx=I_r, delays=delays)


def brute_force_sinr(scene: Scene, psi_t: np.ndarray, psi_r: np.ndarray) -> np.ndarray:
    """Per-pair SINR from literal matched-filter outputs, one scatterer at a time.

    Echo energies come from ``Y_pq`` with a unit reflection on a single
    scatterer; the noise energy is the expectation over a basis expansion
    of ``N_pq`` with per-entry variance sigma_n^2 / I_r.
    """
    link = link_model(scene)
    P, Q, L = link.variances.shape
    energy = np.zeros((P, Q, L))
    for l in range(L):
        beta = np.zeros((P, Q, L), dtype=complex)
        beta[:, :, l] = 1.0
        Y = matched_filter_output(link, (psi_t, psi_r), beta)
        energy[:, :, l] = np.sum(np.abs(Y) ** 2, axis=(2, 3))
    n_r, I_r = link.n_r, link.snapshots_rx
    noise = np.zeros(Q)
    for q in range(Q):
        M = psi_r[q * n_r:(q + 1) * n_r, None] * link.rx_chains[q]
        for i in range(n_r):
            for j in range(I_r):
                E = np.zeros((n_r, I_r))
                E[i, j] = 1.0
                noise[q] += np.sum(np.abs(M.T @ E) ** 2) * scene.noise_power / I_r
    sig = link.variances * energy
    out = np.empty((P, Q, scene.n_targets))
    for lt in range(scene.n_targets):
        interference = sig.sum(axis=2) - sig[:, :, lt]
        out[:, :, lt] = sig[:, :, lt] / (interference + noise[None, :])
    return out


def random_feasible(link: LinkModel, p_max: float, rng: np.random.Generator) -> BeamformerSet:
    psi_t = rng.random(link.n_tx * link.n_t)
    power = link.tx_power(psi_t)
    scale = np.minimum(1.0, np.sqrt(p_max / power)) * (1 - 1e-9)
    psi_t = (psi_t.reshape(link.n_tx, link.n_t) * scale[:, None]).ravel()
    return BeamformerSet(psi_t, rng.uniform(0.05, 1.0, link.n_rx * link.n_r))


def feasibility_gap(link: LinkModel, p_max: float, bf: BeamformerSet) -> float:
    """Largest power excess (0 when within budget); box bounds are enforced by BeamformerSet."""
    return float(max(0.0, np.max(link.tx_power(bf.psi_t) - p_max)))


def validate_suite(n_consistency: int = 20, n_draoa: int = 3, seed: int = 0, echo=print) -> bool:
    """Quick invariant suite; prints one PASS/FAIL line per check."""
    ok_all = True

    def report(name, ok, detail):
        nonlocal ok_all
        ok_all &= bool(ok)
        echo(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    worst = 0.0
    for i in range(n_consistency):
        rng = trial_rng(seed, i, 5)
        scene = tiny_random_scene(rng)
        link = link_model(scene)
        bf = random_feasible(link, scene.p_max, rng)
        ref = brute_force_sinr(scene, bf.psi_t, bf.psi_r)
        got = sinr_per_pair(link, bf).per_pair
        worst = max(worst, float(np.max(np.abs(got - ref) / np.abs(ref))))
    report("trace-form SINR vs matched filter", worst < 1e-8, f"max rel err {worst:.2e}")

    mono, bound, feas = True, True, True
    for i in range(n_draoa):
        scene = tiny_random_scene(trial_rng(seed, i, 6))
        res = run_draoa(scene, DraoaConfig(rng_seed=i))
        chain = res.u_chain()
        mono &= all(b >= a - 1e-6 for a, b in zip(chain, chain[1:])) and res.outer_iterations <= 20
        bound &= res.worst_case_sinr <= res.relaxed_bound + 1e-6
        feas &= feasibility_gap(link_model(scene), scene.p_max, res.beamformers) <= 1e-10
    report("monotone U chain", mono, f"{n_draoa} instances")
    report("rounded <= relaxed bound", bound, f"{n_draoa} instances")
    report("feasible beamformers", feas, f"{n_draoa} instances")

    scene = tiny_random_scene(trial_rng(seed, 0, 7))
    link = link_model(scene)
    bf = random_feasible(link, scene.p_max, trial_rng(seed, 0, 8))
    got, _ = gaussian_rounding(lift(bf.psi_t), lift(bf.psi_r), link, scene.p_max, 20, 20, trial_rng(seed, 0, 9))
    a, b = sinr_per_pair(link, got).worst_case, sinr_per_pair(link, bf).worst_case
    report("rank-one rounding recovers psi", abs(a - b) <= 0.01 * b, f"{a:.6g} vs {b:.6g}")
    return ok_all
