"""Homogenized SDP assembly, the conic solve, and the slack-variable updates.

Each step of the alternation lifts the free amplitude vector ``psi`` to
``Psi = [psi; t][psi; t]^T`` with ``t^2 = 1`` and drops the rank constraint.
The per-ratio slack variables ``lambda_pq^l`` are held fixed inside one
solve; the solve maximizes a margin by which every ratio constraint

    (Tr(S' Psi) - lambda (Tr(I' Psi) + noise)) / weight >= tau_pq^l

can be tightened, and ``lambda`` is then recomputed as the achieved ratios.
With ``mode="average"`` the margins are per-pair, nonnegative, and the
objective is the smallest per-target mean margin; ``mode="common"`` uses a
single shared margin.  ``mode="tradeoff"`` lets margins go negative and
maximizes the smallest per-target mean of ``lambda + margin``, a first-order
model of the next worst-case average, so one pair or target may give up
ratio where another gains more.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .signal_chain import QuadraticForms, form_ratios

log = logging.getLogger(__name__)

SENSES = ("<=", ">=", "==")


class SolverError(RuntimeError):
    def __init__(self, message, status=None, diagnostics=None):
        super().__init__(message)
        self.status = status
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True, eq=False)
class TraceConstraint:
    matrix: np.ndarray
    sense: str
    bound: float
    label: str = ""

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")
        m = np.asarray(self.matrix, dtype=float)
        if not np.allclose(m, m.T, atol=1e-12 * max(1.0, np.abs(m).max())):
            raise ValueError(f"constraint {self.label!r} is not symmetric")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class MarginBlock:
    """Padded ratio forms, one row per (p, q, l_t)."""

    signal: np.ndarray  # P x Q x Lt x d x d
    interference: np.ndarray  # P x Q x Lt x d x d
    noise: np.ndarray  # P x Q
    weight: np.ndarray  # P x Q x Lt, positive normalizers
    lam: np.ndarray  # P x Q x Lt

    @property
    def count(self) -> int:
        return int(np.prod(self.lam.shape))


@dataclass(frozen=True, eq=False)
class LiftedSdp:
    dim: int
    constraints: list
    margin: MarginBlock
    mode: str = "average"
    scale: np.ndarray | None = None  # diagonal congruence used only for conditioning
    side: str = ""
    nonneg: bool = False  # entrywise Psi >= 0, valid because psi >= 0
    block_size: int = 0  # elements per subarray; 0 means no block structure is known

    @property
    def constraint_count(self) -> int:
        """Trace constraints + PSD constraint (+ entrywise sign cone) + one per ratio."""
        return len(self.constraints) + 1 + int(self.nonneg) + self.margin.count

    def with_lambda(self, lam) -> "LiftedSdp":
        m = self.margin
        new = MarginBlock(m.signal, m.interference, m.noise, m.weight, np.asarray(lam, dtype=float))
        return LiftedSdp(self.dim, self.constraints, new, self.mode, self.scale, self.side, self.nonneg,
                         self.block_size)


def pad(matrix: np.ndarray) -> np.ndarray:
    """Expand by one row and one column of zeros (last axes)."""
    widths = [(0, 0)] * (matrix.ndim - 2) + [(0, 1), (0, 1)]
    return np.pad(matrix, widths)


def homogenization_matrix(dim: int) -> np.ndarray:
    D = np.zeros((dim, dim))
    D[-1, -1] = 1.0
    return D


def amplitude_matrix(index: int, dim: int) -> np.ndarray:
    """X_{p,n}: half-ones linking element ``index`` to the homogenization slot."""
    X = np.zeros((dim, dim))
    X[index, -1] = X[-1, index] = 0.5
    return X


def _box_constraints(n: int, rlt: bool) -> list:
    dim = n + 1
    out = []
    for i in range(n):
        X = amplitude_matrix(i, dim)
        out.append(TraceConstraint(X, ">=", 0.0, f"amp_lo[{i}]"))
        out.append(TraceConstraint(X, "<=", 1.0, f"amp_hi[{i}]"))
        if rlt:
            # psi_i^2 <= psi_i, valid for psi_i in [0, 1]; bounds the diagonal
            E = -X
            E[i, i] = 1.0
            out.append(TraceConstraint(E, "<=", 0.0, f"rlt[{i}]"))
    out.append(TraceConstraint(homogenization_matrix(dim), "==", 1.0, "homogenization"))
    return out


def _weights(forms: QuadraticForms, reference):
    n = forms.dim
    if reference is None:
        w = forms.noise[:, :, None] + np.zeros(forms.signal.shape[:3])
    else:
        core = np.asarray(reference)[:n, :n]
        w = np.einsum("pqlij,ji->pql", forms.interference, core) + forms.noise[:, :, None]
    fallback = np.trace(forms.interference, axis1=-2, axis2=-1) + forms.noise[:, :, None]
    w = np.where(w > 1e-300, w, fallback)
    if np.any(w <= 0):
        raise ValueError("degenerate pair: no positive normalizer")
    return w


def _check_lambda(lam, forms):
    lam = np.asarray(lam, dtype=float)
    if lam.shape != forms.signal.shape[:3]:
        raise ValueError("lambda table shape mismatch")
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError("lambda entries must be finite and >= 0")
    return lam


def _check_forms(forms: QuadraticForms):
    for name in ("signal", "interference"):
        m = getattr(forms, name)
        tol = 1e-10 * max(1.0, np.abs(m).max())
        if not np.allclose(m, np.swapaxes(m, -1, -2), atol=tol):
            raise ValueError(f"{name} forms are not Hermitian")


def assemble_tx_sdp(forms: QuadraticForms, lam, p_max: float, *, reference=None, mode: str = "average",
                    rlt: bool = True, nonneg: bool = True, power_margin: float = 1e-7) -> LiftedSdp:
    """Transmit step: power, amplitude, homogenization and ratio constraints.

    ``power_margin`` tightens P_M relatively so solver round-off never puts
    the solution just outside the power budget.
    """
    if forms.side != "tx" or forms.power is None:
        raise ValueError("transmit forms required")
    _check_forms(forms)
    lam = _check_lambda(lam, forms)
    n = forms.dim
    budget = p_max * (1 - power_margin)
    cons = [TraceConstraint(pad(C), "<=", budget, f"power[{p}]") for p, C in enumerate(forms.power)]
    cons += _box_constraints(n, rlt)
    margin = MarginBlock(pad(forms.signal), pad(forms.interference), forms.noise,
                         _weights(forms, reference), lam)
    scale = np.ones(n + 1)
    for p, C in enumerate(forms.power):
        tr = np.trace(C)
        if tr > 0:
            s = slice(p * forms.n_el, (p + 1) * forms.n_el)
            scale[s] = min(1.0, np.sqrt(p_max / tr))
    return LiftedSdp(n + 1, cons, margin, mode, scale, "tx", nonneg, forms.n_el)


def assemble_rx_sdp(forms: QuadraticForms, xi, *, reference=None, mode: str = "average",
                    rlt: bool = True, nonneg: bool = True) -> LiftedSdp:
    """Receive step: amplitude, homogenization and ratio constraints (no power budget)."""
    if forms.side != "rx":
        raise ValueError("receive forms required")
    _check_forms(forms)
    xi = _check_lambda(xi, forms)
    n = forms.dim
    margin = MarginBlock(pad(forms.signal), pad(forms.interference), forms.noise,
                         _weights(forms, reference), xi)
    return LiftedSdp(n + 1, _box_constraints(n, rlt), margin, mode, None, "rx", nonneg, forms.n_el)


@dataclass
class SdpSolution:
    psi: np.ndarray
    margin: float
    status: str
    max_violation: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def clique_indices(dim: int, block_size: int) -> list:
    """Index sets {subarray block} + {homogenization slot}, one per subarray."""
    n = dim - 1
    if block_size <= 0 or n % block_size:
        return []
    return [np.r_[np.arange(g * block_size, (g + 1) * block_size), n] for g in range(n // block_size)]


def _clique_mask(dim: int, cliques: list) -> np.ndarray:
    mask = np.zeros((dim, dim), dtype=bool)
    for idx in cliques:
        mask[np.ix_(idx, idx)] = True
    return mask


def decomposable(problem: LiftedSdp) -> bool:
    """True when no constraint couples two different subarray blocks.

    The sparsity graph is then a set of cliques sharing only the
    homogenization slot, which is chordal, so ``Psi >> 0`` is equivalent to
    every clique submatrix being PSD (the missing blocks can be completed).
    """
    cliques = clique_indices(problem.dim, problem.block_size)
    if len(cliques) < 2:
        return False
    outside = ~_clique_mask(problem.dim, cliques)
    m = problem.margin
    mats = [c.matrix for c in problem.constraints] + [m.signal.reshape(-1, problem.dim, problem.dim),
                                                      m.interference.reshape(-1, problem.dim, problem.dim)]
    return all(not np.any(np.asarray(M)[..., outside]) for M in mats)


def complete_from_cliques(blocks: list, cliques: list, dim: int) -> np.ndarray:
    """PSD completion of clique submatrices that share only the last index.

    Cross-block entries are filled with ``b_g b_h^T / t``, where ``b`` is a
    clique's border column and ``t`` the shared corner.
    """
    t = float(np.mean([B[-1, -1] for B in blocks]))
    border = np.zeros(dim - 1)
    Psi = np.zeros((dim, dim))
    for B, idx in zip(blocks, cliques):
        core = idx[:-1]
        Psi[np.ix_(core, core)] = B[:-1, :-1]
        border[core] = B[:-1, -1]
    if t > 0:
        cross = np.outer(border, border) / t
        Psi[:-1, :-1] = np.where(_clique_mask(dim, cliques)[:-1, :-1], Psi[:-1, :-1], cross)
    Psi[:-1, -1] = Psi[-1, :-1] = border
    Psi[-1, -1] = t
    return Psi


class CompiledSdp:
    """A :class:`LiftedSdp` compiled once; ``lambda`` is a parameter.

    With ``decompose=None`` the PSD cone is split into one cone per subarray
    whenever :func:`decomposable` holds; the returned ``psi`` is the full
    completed matrix either way.
    """

    def __init__(self, problem: LiftedSdp, eps_ipm: float = 1e-8, solver: str = "CLARABEL",
                 decompose: bool | None = None):
        self.problem = problem
        self.eps_ipm = eps_ipm
        self.solver = solver
        d = problem.dim
        s = np.ones(d) if problem.scale is None else np.asarray(problem.scale, dtype=float)
        self._s = s
        S2 = np.outer(s, s)
        ok = decomposable(problem)
        if decompose and not ok:
            raise ValueError("problem couples subarray blocks; cannot decompose")
        self.cliques = clique_indices(d, problem.block_size) if (ok if decompose is None else decompose) else []

        constraints = []
        if self.cliques:
            Xs = [cp.Variable((len(idx), len(idx)), symmetric=True) for idx in self.cliques]
            for X in Xs:
                constraints.append(X >> 0)
                if problem.nonneg:
                    constraints.append(X >= 0)
            # every clique carries its own copy of the corner entry
            constraints += [X[-1, -1] == Xs[0][-1, -1] for X in Xs[1:]]
            xs = [cp.vec(X, order="F") for X in Xs]
        else:
            Xs = [cp.Variable((d, d), symmetric=True)]
            constraints.append(Xs[0] >> 0)
            if problem.nonneg:
                constraints.append(Xs[0] >= 0)
            xs = [cp.vec(Xs[0], order="F")]

        def linear(mats, scale_rows):
            """Row k is Tr(mats[k] Psi) / scale_rows[k]; mats already scaled."""
            if not self.cliques:
                return (mats.reshape(len(mats), -1) / scale_rows[:, None]) @ xs[0]
            terms = []
            for g, idx in enumerate(self.cliques):
                sub = mats[:, idx][:, :, idx].copy()
                if g:
                    sub[:, -1, -1] = 0.0
                # C-order flatten equals the F-order vec(X) for symmetric matrices
                terms.append((sub.reshape(len(mats), -1) / scale_rows[:, None]) @ xs[g])
            return cp.sum(terms) if len(terms) > 1 else terms[0]

        for sense in SENSES:
            rows = [c for c in problem.constraints if c.sense == sense]
            if not rows:
                continue
            A = np.array([c.matrix * S2 for c in rows])
            b = np.array([c.bound for c in rows])
            norm = np.abs(A).reshape(len(rows), -1).max(axis=1)
            norm[norm == 0] = 1.0
            expr = linear(A, norm)
            b = b / norm
            constraints.append({"<=": expr <= b, ">=": expr >= b, "==": expr == b}[sense])

        m = problem.margin
        shape = m.lam.shape
        w = m.weight.ravel()
        sig = linear((m.signal * S2).reshape(-1, d, d), w)
        itf = linear((m.interference * S2).reshape(-1, d, d), w)
        noise = np.broadcast_to(m.noise[:, :, None], shape).ravel() / w
        self._lam = cp.Parameter(len(w), nonneg=True)
        ratio_margin = sig - cp.multiply(self._lam, itf + noise)
        if problem.mode == "average":
            tau = cp.Variable(len(w), nonneg=True)
            mu = cp.Variable()
            tgt = np.arange(len(w)).reshape(shape)
            constraints.append(ratio_margin >= tau)
            for l in range(shape[2]):
                constraints.append(mu <= cp.sum(tau[tgt[:, :, l].ravel()]) / (shape[0] * shape[1]))
            objective = mu
        elif problem.mode == "tradeoff":
            # first-order model of the new per-target means: ratios may drop
            # on some pairs (or on a non-worst target) if others gain more
            tau = cp.Variable(len(w))
            mu = cp.Variable()
            tgt = np.arange(len(w)).reshape(shape)
            constraints.append(ratio_margin >= tau)
            for l in range(shape[2]):
                idx = tgt[:, :, l].ravel()
                constraints.append(mu <= cp.sum(self._lam[idx] + tau[idx]) / (shape[0] * shape[1]))
            objective = mu
        elif problem.mode == "common":
            mu = cp.Variable()
            constraints.append(ratio_margin >= mu)
            objective = mu
        else:
            raise ValueError(f"unknown margin mode {problem.mode!r}")
        self._Xs, self._mu = Xs, mu
        self._cvx = cp.Problem(cp.Maximize(objective), constraints)

    def _assemble_psi(self) -> np.ndarray:
        if self.cliques:
            X = complete_from_cliques([V.value for V in self._Xs], self.cliques, self.problem.dim)
        else:
            X = self._Xs[0].value
        return self._s[:, None] * X * self._s[None, :]

    def solve(self, lam=None) -> SdpSolution:
        lam = self.problem.margin.lam if lam is None else np.asarray(lam, dtype=float)
        if np.any(lam < 0):
            raise ValueError("lambda entries must be >= 0")
        self._lam.value = lam.ravel()
        kwargs = {}
        if self.solver == "CLARABEL":
            kwargs = dict(tol_gap_abs=self.eps_ipm, tol_gap_rel=self.eps_ipm, tol_feas=self.eps_ipm)
        try:
            with warnings.catch_warnings():
                # cvxpy's generic accuracy note; the status is checked below
                warnings.filterwarnings("ignore", message="Solution may be inaccurate")
                self._cvx.solve(solver=self.solver, **kwargs)
        except cp.error.SolverError as exc:
            raise SolverError(f"conic solver failed: {exc}", status="solver_error") from exc
        status = self._cvx.status
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            raise SolverError("SDP infeasible", status=status)
        if status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            raise SolverError("SDP unbounded", status=status)
        if any(V.value is None for V in self._Xs):
            raise SolverError(f"solver returned no solution ({status})", status=status)
        psi = project_psd(self._assemble_psi())
        viol = constraint_violation(self.problem, psi)
        diag = {"status": status, "solve_time": self._cvx.solver_stats.solve_time,
                "iterations": self._cvx.solver_stats.num_iters, "max_violation": viol,
                "cones": max(1, len(self.cliques))}
        if status != cp.OPTIMAL:
            if viol > 1e-6:
                raise SolverError(f"inaccurate solve ({status}), violation {viol:.2e}",
                                  status=status, diagnostics=diag)
            log.info("SDP solve status %s; constraints hold to %.1e", status, viol)
        return SdpSolution(psi, float(self._mu.value), status, viol, diag)


def solve_sdp(problem: LiftedSdp, eps_ipm: float = 1e-8) -> SdpSolution:
    return CompiledSdp(problem, eps_ipm).solve()


def project_psd(M: np.ndarray) -> np.ndarray:
    M = (M + M.T) / 2
    w, V = np.linalg.eigh(M)
    if w.min() >= 0:
        return M
    return (V * np.maximum(w, 0)) @ V.T


def constraint_violation(problem: LiftedSdp, Psi: np.ndarray) -> float:
    """Largest absolute violation of the trace constraints at ``Psi``."""
    worst = 0.0
    for c in problem.constraints:
        v = float(np.sum(c.matrix * Psi))
        gap = {"<=": v - c.bound, ">=": c.bound - v, "==": abs(v - c.bound)}[c.sense]
        worst = max(worst, gap)
    return worst


def svr_update_lambda(forms: QuadraticForms, Psi: np.ndarray) -> np.ndarray:
    """Achieved ratios Tr(S'Psi) / (Tr(I'Psi) + noise)."""
    return form_ratios(forms, Psi)


def svr_update_u(lam: np.ndarray) -> float:
    """Smallest per-target mean over the P x Q pairs."""
    return float(np.asarray(lam).mean(axis=(0, 1)).min())


def dump_sdp(problem: LiftedSdp, path) -> None:
    """Write the problem as text: constraint headers then ``i j value`` triplets."""
    lines = [f"# lifted sdp side={problem.side} dim={problem.dim} mode={problem.mode}"]

    def block(tag, M):
        rows, cols = np.nonzero(M)
        lines.append(tag)
        lines.extend(f"{i} {j} {M[i, j]:.17g}" for i, j in zip(rows, cols))

    for c in problem.constraints:
        block(f"constraint {c.label} {c.sense} {c.bound:.17g}", c.matrix)
    m = problem.margin
    for idx in np.ndindex(m.lam.shape):
        p, q, l = idx
        block(f"ratio_signal {p} {q} {l} lambda={m.lam[idx]:.17g} weight={m.weight[idx]:.17g}", m.signal[idx])
        block(f"ratio_interference {p} {q} {l} noise={m.noise[p, q]:.17g}", m.interference[idx])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
