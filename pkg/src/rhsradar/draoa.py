"""Alternating transmit/receive amplitude optimization with randomized rounding."""

from __future__ import annotations

import dataclasses
import json
import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .scenario import Scene, trial_rng
from .sdp import CompiledSdp, SolverError, assemble_rx_sdp, assemble_tx_sdp, svr_update_lambda, svr_update_u
from .signal_chain import (BeamformerSet, LinkModel, SinrReport, lift, lifted_rx_gains, lifted_rx_noise,
                           lifted_tx_gains, link_model, receive_forms, sinr_per_pair, sinr_table,
                           transmit_forms, worst_case)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DraoaConfig:
    eps_outer: float = 1e-3
    max_outer: int = 20
    n_tx_samples: int = 100  # G
    n_rx_samples: int = 100  # H
    max_inner: int = 30
    inner_tol: float = 1e-5
    eps_ipm: float = 1e-8
    rng_seed: int = 0
    margin_mode: str = "tradeoff"
    rlt: bool = True
    nonneg: bool = True
    dehomogenize: bool = True
    shortlist: int | None = None  # None evaluates every (g, h) pair
    recombine: bool = False

    def __post_init__(self):
        if not self.eps_outer > 0:
            raise ValueError("eps_outer must be > 0")
        if self.n_tx_samples < 1 or self.n_rx_samples < 1:
            raise ValueError("G and H must be >= 1")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration limits must be >= 1")
        if self.margin_mode not in ("average", "common", "tradeoff"):
            raise ValueError(f"unknown margin_mode {self.margin_mode!r}")
        if self.shortlist is not None and self.shortlist < 1:
            raise ValueError("shortlist must be >= 1")


@dataclass
class OuterRecord:
    iteration: int
    u_t: float
    u_r: float
    inner_t: int
    inner_r: int
    history_t: list
    history_r: list
    status_t: list
    status_r: list


@dataclass
class RoundingStats:
    tx_candidates: int
    rx_candidates: int
    discarded_power: int
    fallback: bool


@dataclass
class DraoaResult:
    beamformers: BeamformerSet
    report: SinrReport
    relaxed_bound: float
    trace: list
    rounding: RoundingStats
    psi_t: np.ndarray = field(repr=False, default=None)
    psi_r: np.ndarray = field(repr=False, default=None)

    @property
    def worst_case_sinr(self) -> float:
        return self.report.worst_case

    @property
    def worst_case_db(self) -> float:
        return self.report.worst_case_db

    @property
    def outer_iterations(self) -> int:
        return len(self.trace)

    @property
    def inner_iterations(self) -> int:
        return sum(r.inner_t + r.inner_r for r in self.trace)

    def u_chain(self) -> list:
        """U^t(1), U^r(1), U^t(2), ... in the order they were produced."""
        return [u for r in self.trace for u in (r.u_t, r.u_r)]


class DraoaError(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def _svr_loop(assemble, forms, lam0, reference, config, side):
    """Solve / update-lambda / update-U until U stalls.

    In ``tradeoff`` mode a step that lowers U is redone with the
    ``average`` problem, which keeps every ratio at or above its slack and
    so cannot lower U.
    """
    problem = assemble(forms, lam0, reference)
    compiled = CompiledSdp(problem, config.eps_ipm)
    safe = None
    lam = lam0
    u_prev = svr_update_u(lam0)
    history, statuses = [], []
    Psi = reference
    for k in range(1, config.max_inner + 1):
        try:
            sol = compiled.solve(lam)
            new_lam = svr_update_lambda(forms, sol.psi)
            status = sol.status
            if problem.mode == "tradeoff" and svr_update_u(new_lam) < u_prev - 1e-9 * max(1.0, abs(u_prev)):
                if safe is None:
                    safe = CompiledSdp(dataclasses.replace(problem, mode="average"), config.eps_ipm)
                sol = safe.solve(lam)
                new_lam = svr_update_lambda(forms, sol.psi)
                status = f"{sol.status}:safeguard"
        except SolverError as exc:
            # the incumbent meets every ratio with zero margin, so a reported
            # infeasibility is numerical; keep the incumbent when there is one
            if Psi is None or not np.isclose(Psi[-1, -1], 1.0):
                raise
            log.warning("%s inner %d: %s; keeping the incumbent", side, k, exc)
            statuses.append(f"kept_incumbent:{exc.status}")
            u = svr_update_u(lam)
            history.append(u)
            break
        Psi, lam = sol.psi, new_lam
        u = svr_update_u(lam)
        history.append(u)
        statuses.append(status)
        log.debug("%s inner %d: U=%.6g margin=%.3g", side, k, u, sol.margin)
        if abs(u - u_prev) <= config.inner_tol * max(1.0, abs(u)):
            break
        u_prev = u
    return Psi, u, history, statuses


def run_draoa(scene: Scene | LinkModel, config: DraoaConfig = DraoaConfig(), p_max: float | None = None,
              trace_sink=None) -> DraoaResult:
    """Alternate transmit and receive SDP steps, then round to amplitudes.

    ``trace_sink`` (a writable text stream) receives one JSON record per outer
    iteration.
    """
    if isinstance(scene, LinkModel):
        if p_max is None:
            raise ValueError("p_max required with a prebuilt link model")
        link = scene
    else:
        link = link_model(scene)
        p_max = scene.p_max if p_max is None else p_max
    n_t = link.n_tx * link.n_t
    n_r = link.n_rx * link.n_r

    init = trial_rng(config.rng_seed, 0, 1)
    Psi_r = lift(init.random(n_r))
    Psi_t = np.zeros((n_t + 1, n_t + 1))

    def tx_assemble(forms, lam, ref):
        return assemble_tx_sdp(forms, lam, p_max, reference=ref, mode=config.margin_mode, rlt=config.rlt,
                               nonneg=config.nonneg)

    def rx_assemble(forms, lam, ref):
        return assemble_rx_sdp(forms, lam, reference=ref, mode=config.margin_mode, rlt=config.rlt,
                               nonneg=config.nonneg)

    trace = []
    for m in range(1, config.max_outer + 1):
        try:
            forms_t = transmit_forms(link, Psi_r)
            Psi_t, u_t, hist_t, st_t = _svr_loop(tx_assemble, forms_t, svr_update_lambda(forms_t, Psi_t),
                                                 Psi_t, config, "tx")
            forms_r = receive_forms(link, Psi_t)
            Psi_r, u_r, hist_r, st_r = _svr_loop(rx_assemble, forms_r, svr_update_lambda(forms_r, Psi_r),
                                                 Psi_r, config, "rx")
        except (SolverError, ValueError) as exc:
            raise DraoaError(f"outer iteration {m} failed: {exc}", trace) from exc
        rec = OuterRecord(m, u_t, u_r, len(hist_t), len(hist_r), hist_t, hist_r, st_t, st_r)
        trace.append(rec)
        if trace_sink is not None:
            trace_sink.write(json.dumps(asdict(rec)) + "\n")
        log.info("outer %d: U_t=%.6g U_r=%.6g", m, u_t, u_r)
        if abs(u_r - u_t) <= config.eps_outer:
            break

    rng = trial_rng(config.rng_seed, 0, 2)
    beamformers, stats = gaussian_rounding(Psi_t, Psi_r, link, p_max, config.n_tx_samples,
                                           config.n_rx_samples, rng, dehomogenize=config.dehomogenize,
                                           shortlist=config.shortlist,
                                           recombine=config.recombine)
    report = evaluate_final(link, beamformers)
    return DraoaResult(beamformers, report, trace[-1].u_r, trace, stats, Psi_t, Psi_r)


def evaluate_final(link: LinkModel, beamformers: BeamformerSet) -> SinrReport:
    return sinr_per_pair(link, beamformers)


def _sample_factor(Psi):
    Psi = (Psi + Psi.T) / 2
    w, V = np.linalg.eigh(Psi)
    top = max(1.0, abs(w).max())
    w = np.where(w < -1e-8 * top, w, np.maximum(w, 0.0))
    if np.any(w < 0):
        raise ValueError("lifted matrix is not PSD")
    # round-off eigenvalues would add sqrt(1e-16)-sized noise to every sample
    w = np.where(w < 1e-13 * top, 0.0, w)
    return V * np.sqrt(w)


def clip_amplitudes(x: np.ndarray) -> np.ndarray:
    """Replace out-of-range entries: below 0 -> 0, above 1 -> 1."""
    return np.clip(x, 0.0, 1.0)


def draw_candidates(Psi: np.ndarray, count: int, rng: np.random.Generator, dehomogenize: bool = True) -> np.ndarray:
    """Gaussian samples with covariance ``Psi`` mapped into [0, 1]^n.

    With ``dehomogenize`` each sample is divided by its homogenization
    coordinate (when that is not tiny) and replaced by its absolute value;
    the coordinate is dropped and entries are clipped to [0, 1].
    """
    L = _sample_factor(Psi)
    z = rng.standard_normal((count, Psi.shape[0]))
    zeta = z @ L.T
    head, last = zeta[:, :-1], zeta[:, -1:]
    if dehomogenize:
        ok = np.abs(last) >= 1e-6
        head = np.where(ok, head / np.where(ok, last, 1.0), head)
        # the lifted problem cannot tell psi from -psi
        head = np.abs(head)
    return clip_amplitudes(head)


def gaussian_rounding(Psi_t, Psi_r, link: LinkModel, p_max: float, G: int, H: int,
                      rng: np.random.Generator, *, dehomogenize: bool = True, shortlist: int | None = None,
                      recombine: bool = False):
    """Pick the (transmit, receive) sample pair with the best worst-case average SINR.

    Transmit samples over the power budget are discarded.  Returns the
    beamformers and :class:`RoundingStats`.
    """
    tx_rng, rx_rng = rng.spawn(2)
    cand_t = draw_candidates(Psi_t, G, tx_rng, dehomogenize)
    cand_r = draw_candidates(Psi_r, H, rx_rng, dehomogenize)
    live = cand_r.max(axis=1) > 0
    if not live.any():
        raise ValueError("degenerate receive chain: every receive sample is zero")
    cand_r = cand_r[live]

    pool_t = cand_t
    power = link.tx_power(cand_t)
    feasible = np.all(power <= p_max, axis=1)
    discarded = int(np.sum(~feasible))

    t_all = link.tx_gains(cand_t)  # G P Q L
    r_all, n_all = link.rx_gains(cand_r), link.rx_noise(cand_r)  # H Q L, H Q
    t_lift = lifted_tx_gains(link, Psi_t)
    r_lift, n_lift = lifted_rx_gains(link, Psi_r), lifted_rx_noise(link, Psi_r)
    with np.errstate(invalid="ignore", divide="ignore"):
        score_t = worst_case(sinr_table(link.variances, t_all, r_lift, n_lift, link.n_targets))
    score_r = worst_case(sinr_table(link.variances, t_lift, r_all, n_all, link.n_targets))

    fallback = False
    if not feasible.any():
        fallback = True
        best = cand_t[int(np.nanargmax(score_t))].copy()
        per = best.reshape(link.n_tx, link.n_t)
        p_now = link.tx_power(best)
        per *= np.minimum(1.0, np.sqrt(p_max / np.maximum(p_now, 1e-300)))[:, None]
        # scaled rounding can still leave a hair over the budget
        while np.any(link.tx_power(best) > p_max):
            best *= 1 - 1e-12
        warnings.warn("all transmit samples violated the power budget; using a scaled-down sample")
        cand_t, t_all, score_t = best[None], link.tx_gains(best[None]), np.zeros(1)
    else:
        cand_t, t_all, score_t = cand_t[feasible], t_all[feasible], score_t[feasible]

    idx_t = np.arange(len(cand_t))
    idx_r = np.arange(len(cand_r))
    if shortlist is not None:
        idx_t = np.argsort(-np.nan_to_num(score_t, nan=-np.inf), kind="stable")[:shortlist]
        idx_r = np.argsort(-score_r, kind="stable")[:shortlist]
    table = sinr_table(link.variances, t_all[idx_t][:, None], r_all[idx_r][None], n_all[idx_r][None],
                       link.n_targets)
    score = worst_case(table)  # |idx_t| x |idx_r|
    g, h = np.unravel_index(int(np.argmax(score)), score.shape)
    psi_t, psi_r = cand_t[idx_t[g]], cand_r[idx_r[h]]
    if recombine:
        psi_t, psi_r = recombine_blocks(link, p_max, pool_t, psi_t, cand_r, psi_r)
    bf = BeamformerSet(psi_t, psi_r)
    return bf, RoundingStats(len(cand_t), len(cand_r), discarded, fallback)


def recombine_blocks(link: LinkModel, p_max: float, pool_t, psi_t, pool_r, psi_r, sweeps: int = 5):
    """Coordinate ascent over subarrays, each taking its block from any sample.

    Pair (p, q) depends on transmit block p and receive block q only, so a
    block may be swapped without touching the others.  Transmit blocks over
    their own power budget are skipped.  Starts from the given pair and
    only accepts strict improvements.
    """
    P, Q, n_t, n_r = link.n_tx, link.n_rx, link.n_t, link.n_r
    pool_t = np.vstack([psi_t[None], pool_t])
    pool_r = np.vstack([psi_r[None], pool_r])
    block_ok = link.tx_power(pool_t) <= p_max  # G x P
    t_pool = link.tx_gains(pool_t)  # G P Q L
    r_pool, n_pool = link.rx_gains(pool_r), link.rx_noise(pool_r)  # H Q L, H Q
    pick_t, pick_r = np.zeros(P, dtype=int), np.zeros(Q, dtype=int)

    def tables():
        T = t_pool[pick_t, np.arange(P)]
        return T, r_pool[pick_r, np.arange(Q)], n_pool[pick_r, np.arange(Q)]

    T, R, N = tables()
    best = float(worst_case(sinr_table(link.variances, T, R, N, link.n_targets)))
    for _ in range(sweeps):
        improved = False
        for p in range(P):
            trial = np.repeat(T[None], len(pool_t), axis=0)
            trial[:, p] = t_pool[:, p]
            with np.errstate(invalid="ignore", divide="ignore"):
                sc = worst_case(sinr_table(link.variances, trial, R, N, link.n_targets))
            sc = np.where(block_ok[:, p], sc, -np.inf)
            k = int(np.argmax(sc))
            if sc[k] > best * (1 + 1e-12):
                pick_t[p], best, improved = k, float(sc[k]), True
                T, R, N = tables()
        for q in range(Q):
            R_try = np.repeat(R[None], len(pool_r), axis=0)
            N_try = np.repeat(N[None], len(pool_r), axis=0)
            R_try[:, q], N_try[:, q] = r_pool[:, q], n_pool[:, q]
            with np.errstate(invalid="ignore", divide="ignore"):
                sc = worst_case(sinr_table(link.variances, T, R_try, N_try, link.n_targets))
            sc = np.nan_to_num(sc, nan=-np.inf)
            k = int(np.argmax(sc))
            if sc[k] > best * (1 + 1e-12):
                pick_r[q], best, improved = k, float(sc[k]), True
                T, R, N = tables()
        if not improved:
            break
    out_t = np.concatenate([pool_t[pick_t[p], p * n_t:(p + 1) * n_t] for p in range(P)])
    out_r = np.concatenate([pool_r[pick_r[q], q * n_r:(q + 1) * n_r] for q in range(Q)])
    return out_t, out_r
