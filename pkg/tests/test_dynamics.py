import math

import numpy as np
import pytest
from scipy.linalg import expm

from kerrpolariton.dynamics import (
    LindbladModel,
    evolve,
    evolve_unitary,
    liouvillian_apply,
    liouvillian_superoperator,
    standard_observables,
)
from kerrpolariton.errors import IntegrationError, LayoutError, SpaceMismatchError, ValidationError
from kerrpolariton.experiments import run_fig3
from kerrpolariton.hamiltonians import build_h_eff, build_h_jc, build_h_tc, make_space
from kerrpolariton.model import DerivedScales, effective_spin_spin
from kerrpolariton.params import TWO_PI
from kerrpolariton.quantum import (
    Operator,
    QuantumState,
    SpaceDescriptor,
    annihilation,
    embed,
    expectation,
    identity,
    pauli,
    product_ket,
)

G_R = TWO_PI * 3.5e6


def _jc(g=G_R, lp_dim=6, kappa=0.0, gamma=0.0, w=TWO_PI * 2e3):
    space = make_space("jc", lp_dim)
    H = build_h_jc(DerivedScales(Delta_nv=w, omega_minus=w, g_r=g), space)
    a = embed(annihilation(lp_dim), 1, space)
    sm = embed(pauli("minus"), 0, space)
    return space, LindbladModel(H, ((a, kappa), (sm, gamma)))


def _excited_projector(space):
    sp = pauli("plus").matrix
    return embed(sp @ sp.conj().T, 0, space)


def _oracle_propagate(H, collapses, rho0, times):
    """Row-major vectorization, coded independently of the package: vec(A X B) = (A kron B^T) vec(X)."""
    n = H.shape[0]
    eye = np.eye(n)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for c, rate in collapses:
        cdc = c.conj().T @ c
        L += rate * (np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T))
    out = []
    for t in times:
        out.append((expm(L * t) @ rho0.reshape(-1)).reshape(n, n))
    return out


# -- model and generator ----------------------------------------------------------

def test_lindblad_model_validation():
    space = make_space("jc", 3)
    H = identity(space)
    with pytest.raises(ValidationError):
        LindbladModel(H, ((H, -1.0),))
    with pytest.raises(SpaceMismatchError):
        LindbladModel(H, ((identity(SpaceDescriptor((2, 4))), 1.0),))


def test_generator_zero_without_dynamics():
    space = make_space("jc", 3)
    model = LindbladModel(identity(space) * 0.0)
    rho = product_ket(space, (0, 1)).density()
    assert np.array_equal(liouvillian_apply(model, rho), np.zeros_like(rho))


def test_amplitude_damping_rate():
    space = SpaceDescriptor((2,), ("spin1",))
    gamma = 0.37
    model = LindbladModel(pauli("z") * 0.0, ((pauli("minus"), gamma),))
    rho = product_ket(space, (0,))
    d = liouvillian_apply(model, rho)
    assert np.trace(_excited_projector(space).matrix @ d).real == pytest.approx(-gamma, rel=1e-14)


def test_jc_short_time_taylor():
    space, model = _jc(g=0.3, kappa=0.0, gamma=0.0, w=1.0)
    P = _excited_projector(space).matrix
    rho = product_ket(space, (0, 0)).density()
    d1 = liouvillian_apply(model, rho)
    d2 = liouvillian_apply(model, d1)
    assert abs(np.trace(P @ d1)) < 1e-14
    assert np.trace(P @ d2).real == pytest.approx(-2 * 0.3**2, rel=1e-12)


def test_generator_traceless_and_matches_superoperator():
    space, model = _jc(g=0.2, kappa=0.3, gamma=0.1, w=1.0)
    rng = np.random.default_rng(3)
    x = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    rho = x @ x.conj().T
    rho /= np.trace(rho)
    d = liouvillian_apply(model, rho)
    assert abs(np.trace(d)) < 1e-12
    S = liouvillian_superoperator(model)
    np.testing.assert_allclose(S @ rho.reshape(-1, order="F"), d.reshape(-1, order="F"), atol=1e-12)


def test_generator_space_mismatch():
    _, model = _jc(lp_dim=4)
    with pytest.raises(SpaceMismatchError):
        liouvillian_apply(model, product_ket(make_space("jc", 5), (0, 0)))


# -- evolve ------------------------------------------------------------------------

def test_pure_decay_matches_exponential():
    gamma = TWO_PI * 1e3
    space = SpaceDescriptor((2,), ("spin1",))
    model = LindbladModel(embed(pauli("z"), 0, space) * (0.5 * TWO_PI * 1e6), ((embed(pauli("minus"), 0, space), gamma),))
    t = np.linspace(0, 3 / gamma, 31)
    res = evolve(model, product_ket(space, (0,)), t, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(res["spin1_occupation"], np.exp(-gamma * t), rtol=1e-6)


def test_closed_jc_full_exchange():
    space, model = _jc(lp_dim=6)
    t_star = math.pi / (2 * G_R)
    res = evolve(model, product_ket(space, (0, 0)), np.linspace(0, t_star, 11))
    assert res["lp_occupation"][-1] >= 0.999


def test_open_jc_matches_independent_expm_oracle():
    kappa, gamma = TWO_PI * 1e6, TWO_PI * 1e3
    space, model = _jc(lp_dim=5, kappa=kappa, gamma=gamma)
    t = np.linspace(0, 2 * math.pi / G_R, 41)
    psi0 = product_ket(space, (0, 0))
    res = evolve(model, psi0, t, rtol=1e-10, atol=1e-12)
    cols = [(c.matrix, r) for c, r in model.collapses]
    states = _oracle_propagate(model.hamiltonian.matrix, cols, psi0.density(), t)
    obs = standard_observables(space)
    for k in ("spin1_occupation", "lp_occupation"):
        ref = [np.trace(obs[k].matrix @ r).real for r in states]
        np.testing.assert_allclose(res[k], ref, atol=1e-8)


def test_propagator_method_matches_oracle():
    kappa, gamma = TWO_PI * 1e6, TWO_PI * 1e3
    space, model = _jc(lp_dim=4, kappa=kappa, gamma=gamma)
    t = np.linspace(0, 2 * math.pi / G_R, 21)
    psi0 = product_ket(space, (0, 0))
    res = evolve(model, psi0, t, method="propagator")
    states = _oracle_propagate(model.hamiltonian.matrix, [(c.matrix, r) for c, r in model.collapses], psi0.density(), t)
    ref = [np.trace(_excited_projector(space).matrix @ r).real for r in states]
    np.testing.assert_allclose(res["spin1_occupation"], ref, atol=1e-10)


def test_open_revival_below_closed():
    closed = run_fig3(False)
    opened = run_fig3(True)
    t = closed.times

    def at(x):
        return int(np.argmin(np.abs(t - x)))

    for k in (1, 2, 3):  # spin revivals
        i = at(k * math.pi / G_R)
        assert opened["spin1_occupation"][i] < closed["spin1_occupation"][i]
    # at 5 pi / (2 g_r) the closed spin is empty and the excitation sits in the LP
    i = at(5 * math.pi / (2 * G_R))
    assert closed["spin1_occupation"][i] < 1e-10
    assert opened["lp_occupation"][i] < closed["lp_occupation"][i]


def test_state_diagnostics_on_open_run():
    res = run_fig3(True)
    d = res.diagnostics
    assert d["max_trace_deviation"] < 1e-8
    assert d["min_eigenvalue_overall"] >= -1e-8
    assert len(d["trace_deviation"]) == len(res.times)
    rho = res.final_state
    assert np.abs(rho - rho.conj().T).max() < 1e-10


def test_tolerance_halving_within_error_estimate():
    kw = dict(periods=1.0, points_per_period=50)
    a = run_fig3(True, rtol=1e-8, atol=1e-10, **kw)
    b = run_fig3(True, rtol=5e-9, atol=5e-11, **kw)
    for k in ("spin1_occupation", "lp_occupation"):
        assert abs(a[k][-1] - b[k][-1]) < a.diagnostics["error_estimate"]


def test_step_budget_exhaustion():
    space, model = _jc(kappa=1e6)
    with pytest.raises(IntegrationError):
        evolve(model, product_ket(space, (0, 0)), [0.0, 1e-6], max_steps=3)


def test_bad_inputs():
    space, model = _jc()
    psi = product_ket(space, (0, 0))
    with pytest.raises(ValidationError):
        evolve(model, psi, [0.0, 1.0, 0.5])
    with pytest.raises(ValidationError):
        evolve(model, psi, [0.0, 1.0], method="euler")
    with pytest.raises(SpaceMismatchError):
        evolve(model, product_ket(make_space("jc", 3), (0, 0)), [0.0, 1.0])


# -- unitary ------------------------------------------------------------------------

def test_unitary_stationary_excited_state():
    space = SpaceDescriptor((2,), ("spin1",))
    res = evolve_unitary(embed(pauli("z"), 0, space) * 0.7, product_ket(space, (0,)), np.linspace(0, 50, 101))
    np.testing.assert_allclose(res["spin1_occupation"], 1.0, atol=1e-14)
    assert res.diagnostics["max_norm_deviation"] < 1e-10


def test_unitary_matches_lindblad_without_rates():
    space, model = _jc(lp_dim=6)
    psi = product_ket(space, (0, 0))
    t = np.linspace(0, 3 * math.pi / G_R, 61)
    u = evolve_unitary(model.hamiltonian, psi, t)
    m = evolve(model, psi, t, rtol=1e-11, atol=1e-13)
    for k in u.observables:
        np.testing.assert_allclose(u[k], m[k], atol=1e-8)


def test_unitary_rejects_bad_inputs():
    space = SpaceDescriptor((2,), ("spin1",))
    with pytest.raises(ValidationError):
        evolve_unitary(pauli("plus"), product_ket(space, (0,)), [0.0, 1.0])
    with pytest.raises(ValidationError):
        evolve_unitary(pauli("z"), QuantumState(space, np.eye(2) / 2), [0.0, 1.0])


def test_tc_exchange_period_matches_effective_model():
    g, d, w = G_R, TWO_PI * 960e6, TWO_PI * 2e3
    g_eff, w_eff = effective_spin_spin(g, d)
    t_star = math.pi / (2 * abs(g_eff))
    t = np.linspace(0, 2 * t_star, 2001)
    tc_space = make_space("tc", 4)
    tc = evolve_unitary(build_h_tc(DerivedScales(Delta_nv=d, omega_minus=w, g_r=g), tc_space),
                        product_ket(tc_space, (0, 1, 0)), t)
    eff_space = make_space("eff")
    eff = evolve_unitary(build_h_eff(DerivedScales(omega_eff=w_eff, g_eff=g_eff), eff_space),
                         product_ket(eff_space, (0, 1)), t)
    for res in (tc, eff):
        peak = t[np.argmax(res["spin2_occupation"])]
        assert peak == pytest.approx(t_star, rel=0.05)


# -- observables --------------------------------------------------------------------

def test_standard_observables_examples():
    space = make_space("tc", 4)
    obs = standard_observables(space)
    assert set(obs) == {"spin1_occupation", "spin2_occupation", "lp_occupation", "top_fock_population"}
    vac = product_ket(space, (1, 1, 0))
    assert all(abs(expectation(o, vac)) == 0 for o in obs.values())
    eg0 = product_ket(space, (0, 1, 0))
    vals = {k: expectation(o, eg0).real for k, o in obs.items()}
    assert (vals["spin1_occupation"], vals["spin2_occupation"], vals["lp_occupation"]) == (1.0, 0.0, 0.0)
    top = product_ket(space, (1, 1, 3))
    assert expectation(obs["top_fock_population"], top).real == 1.0


def test_maximally_mixed_spin_occupation():
    space = make_space("jc", 3)
    rho = np.kron(np.eye(2) / 2, np.diag([1.0, 0.0, 0.0]))
    val = expectation(standard_observables(space)["spin1_occupation"], QuantumState(space, rho))
    assert val.real == pytest.approx(0.5)


def test_standard_observables_need_labels():
    with pytest.raises(LayoutError):
        standard_observables(SpaceDescriptor((2, 3)))


def test_custom_observable_space_checked():
    space, model = _jc(lp_dim=3)
    bad = {"x": Operator(SpaceDescriptor((2, 4)), np.eye(8))}
    with pytest.raises(SpaceMismatchError):
        evolve_unitary(model.hamiltonian, product_ket(space, (0, 0)), [0.0, 1.0], bad)
