import numpy as np
import pytest
from hypothesis import given, strategies as st

from rhsradar.checks import oracle_scene, random_feasible, tiny_random_scene
from rhsradar.rhs import RhsPanel
from rhsradar.scenario import Scatterer, Scene, trial_rng
from rhsradar.sdp import (CompiledSdp, LiftedSdp, MarginBlock, SolverError, TraceConstraint, _box_constraints,
                          amplitude_matrix, assemble_rx_sdp, assemble_tx_sdp, clique_indices,
                          complete_from_cliques, constraint_violation, decomposable, dump_sdp,
                          homogenization_matrix, pad, solve_sdp, svr_update_lambda, svr_update_u)
from rhsradar.signal_chain import (QuadraticForms, lift, link_model, receive_forms, sinr_per_pair,
                                   transmit_forms)


def _toy(signal, rlt=True, extra=()):
    """One ratio with lambda = 0 and no noise: maximize Tr(signal Psi)."""
    d = signal.shape[0]
    margin = MarginBlock(signal.reshape(1, 1, 1, d, d), np.zeros((1, 1, 1, d, d)), np.zeros((1, 1)),
                         np.ones((1, 1, 1)), np.zeros((1, 1, 1)))
    return LiftedSdp(d, _box_constraints(d - 1, rlt) + list(extra), margin)


def test_two_by_two_toy_optimum():
    sol = solve_sdp(_toy(np.diag([1.0, 0.0])))
    assert sol.margin == pytest.approx(1.0, abs=1e-6)
    assert np.allclose(sol.psi, np.ones((2, 2)), atol=1e-5)


def test_toy_matches_rank_one_grid():
    # grid over psi in [0, 1]: Tr(A lift(psi)) = psi^2, best at psi = 1
    grid = max(x * x for x in np.linspace(0, 1, 101))
    assert solve_sdp(_toy(np.diag([1.0, 0.0]))).margin == pytest.approx(grid, abs=1e-6)


def test_toy_without_diagonal_bound_is_unbounded():
    # 0 <= border <= 1 alone does not bound Psi[0, 0]
    with pytest.raises(SolverError, match="unbounded"):
        solve_sdp(_toy(np.diag([1.0, 0.0]), rlt=False))


def test_zero_objective_gives_zero_margin():
    sol = solve_sdp(_toy(np.zeros((3, 3))))
    assert sol.margin == pytest.approx(0.0, abs=1e-7)
    assert sol.max_violation < 1e-6


def test_duplicate_constraint_keeps_optimum():
    A = np.diag([0.3, 1.0, 0.0])
    base = solve_sdp(_toy(A))
    dup = solve_sdp(_toy(A, extra=[TraceConstraint(amplitude_matrix(0, 3), "<=", 1.0, "dup")]))
    assert dup.margin == pytest.approx(base.margin, abs=1e-7)


def test_trace_constraint_rejects_asymmetric():
    with pytest.raises(ValueError, match="symmetric"):
        TraceConstraint(np.array([[0.0, 1.0], [0.0, 0.0]]), "<=", 1.0)
    with pytest.raises(ValueError):
        TraceConstraint(np.eye(2), "<", 1.0)


def test_pad_and_border_helpers():
    M = np.arange(4.0).reshape(2, 2)
    P = pad(M)
    assert P.shape == (3, 3) and np.all(P[2] == 0) and np.all(P[:, 2] == 0)
    X = amplitude_matrix(0, 2)
    Psi = np.array([[0.25, 0.5], [0.5, 1.0]])
    assert np.isclose(np.sum(X * Psi), 0.5)  # border entry = psi * t
    assert np.isclose(np.sum(homogenization_matrix(2) * Psi), 1.0)


@given(seed=st.integers(0, 1000))
def test_zero_padding_ignores_border(seed):
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((4, 4))
    R = R + R.T
    Psi = rng.standard_normal((5, 5))
    Psi = Psi + Psi.T
    assert np.isclose(np.sum(pad(R) * Psi), np.trace(R @ Psi[:4, :4]))


def _forms(seed=0):
    scene = tiny_random_scene(trial_rng(seed, 0, 50))
    link = link_model(scene)
    bf = random_feasible(link, scene.p_max, trial_rng(seed, 0, 51))
    return scene, link, bf


def test_tx_constraint_count():
    scene, link, bf = _forms()
    forms = transmit_forms(link, bf.psi_r)
    P, N, Q, Lt = link.n_tx, link.n_t, link.n_rx, link.n_targets
    lam = np.zeros((P, Q, Lt))
    plain = assemble_tx_sdp(forms, lam, scene.p_max, rlt=False, nonneg=False)
    assert plain.constraint_count == P + 2 * P * N + 1 + 1 + P * Q * Lt
    full = assemble_tx_sdp(forms, lam, scene.p_max)
    # one diagonal bound per amplitude and one entrywise sign cone
    assert full.constraint_count == P + 3 * P * N + 1 + 1 + 1 + P * Q * Lt
    labels = [c.label for c in full.constraints]
    assert labels.count("homogenization") == 1


def test_rx_constraint_count():
    scene, link, bf = _forms(1)
    forms = receive_forms(link, bf.psi_t)
    Q, N, P, Lt = link.n_rx, link.n_r, link.n_tx, link.n_targets
    plain = assemble_rx_sdp(forms, np.zeros((P, Q, Lt)), rlt=False, nonneg=False)
    assert plain.constraint_count == 2 * Q * N + 1 + 1 + P * Q * Lt
    assert not any(c.label.startswith("power") for c in plain.constraints)


def test_assembly_rejects_bad_input():
    scene, link, bf = _forms()
    tf = transmit_forms(link, bf.psi_r)
    shape = tf.signal.shape[:3]
    with pytest.raises(ValueError):
        assemble_tx_sdp(tf, -np.ones(shape), scene.p_max)
    with pytest.raises(ValueError):
        assemble_tx_sdp(tf, np.zeros(shape[:2]), scene.p_max)
    with pytest.raises(ValueError, match="receive"):
        assemble_rx_sdp(tf, np.zeros(shape))
    bad = QuadraticForms("tx", tf.n_sub, tf.n_el, tf.signal + np.triu(np.ones(tf.dim), 1), tf.interference,
                         tf.noise, tf.power)
    with pytest.raises(ValueError, match="Hermitian"):
        assemble_tx_sdp(bad, np.zeros(shape), scene.p_max)


def test_lambda_from_homogenization_only_is_zero():
    scene, link, bf = _forms()
    tf = transmit_forms(link, bf.psi_r)
    D = homogenization_matrix(tf.dim + 1)
    assert np.all(svr_update_lambda(tf, D) == 0)


def test_lambda_ratio_homogeneity():
    scene, link, bf = _forms(2)
    tf = transmit_forms(link, bf.psi_r)
    twice = QuadraticForms("tx", tf.n_sub, tf.n_el, 2 * tf.signal, 2 * tf.interference, 2 * tf.noise, tf.power)
    Psi = lift(bf.psi_t)
    assert np.allclose(svr_update_lambda(twice, Psi), svr_update_lambda(tf, Psi))


def test_rank_one_lambda_is_sinr():
    scene, link, bf = _forms(3)
    ref = sinr_per_pair(link, bf).per_pair
    assert np.allclose(svr_update_lambda(transmit_forms(link, bf.psi_r), lift(bf.psi_t)), ref, rtol=1e-9)
    assert np.allclose(svr_update_lambda(receive_forms(link, bf.psi_t), lift(bf.psi_r)), ref, rtol=1e-9)


def test_svr_update_u_examples():
    assert svr_update_u(np.full((1, 1, 1), 0.7)) == pytest.approx(0.7)
    assert svr_update_u(np.full((2, 3, 2), 4.0)) == pytest.approx(4.0)
    # two targets on one pair each seen twice: rows are targets
    table = np.array([[1.0, 3.0], [2.0, 2.0]]).T.reshape(1, 2, 2)
    assert svr_update_u(table) == pytest.approx(2.0)


def test_zero_lambda_margin_is_pure_signal():
    scene = oracle_scene(with_clutter=False)
    link = link_model(scene)
    tf = transmit_forms(link, np.ones(2))
    sol = solve_sdp(assemble_tx_sdp(tf, np.zeros((1, 1, 1)), scene.p_max, mode="common"))
    # margin is the weighted signal term at the optimum
    w = assemble_tx_sdp(tf, np.zeros((1, 1, 1)), scene.p_max).margin.weight[0, 0, 0]
    assert sol.margin == pytest.approx(np.trace(tf.signal[0, 0, 0] @ sol.psi[:2, :2]) / w, rel=1e-5)


def test_solution_contract():
    scene, link, bf = _forms(4)
    tf = transmit_forms(link, bf.psi_r)
    lam = svr_update_lambda(tf, lift(bf.psi_t))
    problem = assemble_tx_sdp(tf, lam, scene.p_max, reference=lift(bf.psi_t))
    sol = solve_sdp(problem)
    assert np.linalg.eigvalsh(sol.psi).min() >= -1e-8
    assert constraint_violation(problem, sol.psi) <= 1e-6
    # the incumbent is feasible with zero margin, so the optimum is >= 0
    assert sol.margin >= -1e-7


def test_clique_helpers():
    cl = clique_indices(7, 3)
    assert [list(c) for c in cl] == [[0, 1, 2, 6], [3, 4, 5, 6]]
    assert clique_indices(7, 4) == [] and clique_indices(7, 0) == []
    a, b = np.array([0.2, 0.5, 0.9]), np.array([0.4, 0.1, 0.7])
    full = lift(np.r_[a, b])
    blocks = [full[np.ix_(c, c)] for c in cl]
    assert np.allclose(complete_from_cliques(blocks, cl, 7), full)


@pytest.mark.parametrize("side", ["tx", "rx"])
def test_decomposed_solve_matches_dense(side):
    tx = [RhsPanel(2, 1, 0.01 / 3, center=[0.2 + 0.6 * p, 0.3, 0.0]) for p in range(2)]
    rx = [RhsPanel(2, 1, 0.01 / 3, center=[1.6, 0.4 + 0.8 * q, 0.0]) for q in range(2)]
    scat = [Scatterer([0.5, 2.0, 1.0], "target", 1e-5), Scatterer([1.0, 2.0, 2.0], "clutter", 1e-5)]
    scene = Scene(tx, rx, scat)
    link = link_model(scene)
    bf = random_feasible(link, scene.p_max, trial_rng(0))
    if side == "tx":
        forms = transmit_forms(link, bf.psi_r)
        ref = lift(bf.psi_t)
        problem = assemble_tx_sdp(forms, svr_update_lambda(forms, ref), scene.p_max, reference=ref)
    else:
        forms = receive_forms(link, bf.psi_t)
        ref = lift(bf.psi_r)
        problem = assemble_rx_sdp(forms, svr_update_lambda(forms, ref), reference=ref)
    assert decomposable(problem)
    split = CompiledSdp(problem)
    dense = CompiledSdp(problem, decompose=False)
    assert len(split.cliques) == 2 and dense.cliques == []
    a, b = split.solve(), dense.solve()
    assert a.margin == pytest.approx(b.margin, rel=1e-5, abs=1e-9)
    assert a.diagnostics["cones"] == 2
    assert np.allclose(svr_update_lambda(forms, a.psi), svr_update_lambda(forms, b.psi), rtol=1e-4)


def test_forced_decomposition_of_coupled_problem_fails():
    d = 5
    coupling = np.zeros((d, d))
    coupling[0, 2] = coupling[2, 0] = 1.0
    problem = _toy(np.diag([1.0, 0, 0, 0, 0]), extra=[TraceConstraint(coupling, "<=", 0.5)])
    problem = LiftedSdp(problem.dim, problem.constraints, problem.margin, block_size=2)
    assert not decomposable(problem)
    with pytest.raises(ValueError):
        CompiledSdp(problem, decompose=True)


def test_dump_sdp(tmp_path):
    problem = _toy(np.diag([1.0, 0.0]))
    path = tmp_path / "toy.txt"
    dump_sdp(problem, path)
    text = path.read_text()
    assert text.startswith("# lifted sdp")
    assert "constraint homogenization == 1" in text
    assert "ratio_signal 0 0 0" in text
    assert "\n0 0 1\n" in text


def test_tradeoff_step_never_loses_first_order_value():
    scene, link, bf = _forms(5)
    tf = transmit_forms(link, bf.psi_r)
    ref = lift(bf.psi_t)
    lam = svr_update_lambda(tf, ref)
    problem = assemble_tx_sdp(tf, lam, scene.p_max, reference=ref, mode="tradeoff")
    sol = solve_sdp(problem)
    # the incumbent scores exactly U, so the optimum is at least U
    assert sol.margin >= svr_update_u(lam) - 1e-7
    # margins are free: some pair may end below its slack
    assert constraint_violation(problem, sol.psi) <= 1e-6


def test_unknown_mode_is_rejected():
    p = _toy(np.eye(2))
    with pytest.raises(ValueError, match="margin mode"):
        CompiledSdp(LiftedSdp(p.dim, p.constraints, p.margin, mode="median"))
