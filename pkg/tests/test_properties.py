"""Randomized checks of the module invariants, 500 cases each."""

import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from kerrpolariton.config import build_config, parse_value
from kerrpolariton.dynamics import LindbladModel, evolve, evolve_unitary
from kerrpolariton.experiments import run_fig2b
from kerrpolariton.hamiltonians import BUILDERS, build_h_jc, build_h_tc, make_space
from kerrpolariton.model import (
    DerivedScales,
    bogoliubov_spectrum,
    cavity_in_polariton_basis,
    critical_coupling,
    effective_spin_spin,
    mixing_angle,
    polariton_frequencies,
    squeezed_frequency,
    squeezing_parameter,
)
from kerrpolariton.quantum import (
    Operator,
    QuantumState,
    SpaceDescriptor,
    adjoint,
    annihilation,
    commutator,
    embed,
    expectation,
    multiply,
    pauli,
    product_ket,
)
from kerrpolariton.params import TWO_PI

CASES = settings(max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow])

unit = st.floats(0.1, 10.0)
seeds = st.integers(0, 2**32 - 1)


def _random_matrix(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def _random_density(rng, n):
    x = _random_matrix(rng, n)
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


# -- quantum core -------------------------------------------------------------------

@CASES
@given(st.integers(2, 12))
def test_ladder_corner_identity(d):
    a = annihilation(d)
    c = commutator(a, a.dag()).matrix
    expected = np.eye(d)
    expected[-1, -1] -= d
    np.testing.assert_allclose(c, expected, atol=1e-13, rtol=0)


@CASES
@given(st.integers(2, 6), seeds)
def test_adjoint_rules(n, seed):
    rng = np.random.default_rng(seed)
    sp = SpaceDescriptor((n,))
    A, B = Operator(sp, _random_matrix(rng, n)), Operator(sp, _random_matrix(rng, n))
    np.testing.assert_array_equal(adjoint(adjoint(A)).matrix, A.matrix)
    lhs = adjoint(multiply(A, B)).matrix
    rhs = multiply(adjoint(B), adjoint(A)).matrix
    assert np.abs(lhs - rhs).max() <= 1e-13 * max(1.0, np.abs(lhs).max())


@CASES
@given(st.lists(st.integers(2, 4), min_size=1, max_size=3), st.data(), seeds)
def test_embed_preserves_spectrum(factors, data, seed):
    rng = np.random.default_rng(seed)
    slot = data.draw(st.integers(0, len(factors) - 1))
    space = SpaceDescriptor(tuple(factors))
    x = _random_matrix(rng, factors[slot])
    op = x + x.conj().T
    others = math.prod(factors) // factors[slot]
    small = np.linalg.eigvalsh(op)
    big = embed(op, slot, space).eigvalsh()
    np.testing.assert_allclose(big, np.sort(np.repeat(small, others)), atol=1e-12 * np.abs(small).max())


@CASES
@given(st.integers(2, 8), seeds, st.booleans())
def test_expectation_real_for_hermitian(n, seed, pure):
    rng = np.random.default_rng(seed)
    sp = SpaceDescriptor((n,))
    x = _random_matrix(rng, n)
    H = Operator(sp, x + x.conj().T)
    if pure:
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        state = QuantumState(sp, v / np.linalg.norm(v))
    else:
        state = QuantumState(sp, _random_density(rng, n))
    assert abs(np.imag(expectation(H, state))) < 1e-10


# -- model ----------------------------------------------------------------------------

@CASES
@given(st.sampled_from(sorted(BUILDERS)), seeds)
def test_builders_hermitian(kind, seed):
    rng = np.random.default_rng(seed)
    vals = {n: rng.uniform(-3, 3) for n in DerivedScales.field_names()}
    vals["omega_minus"] = abs(vals["omega_minus"]) + 0.1
    vals["omega_plus"] = abs(vals["omega_plus"]) + 0.1
    scales = DerivedScales(**{("lambda_" if k == "lambda" else k): v for k, v in vals.items()})
    dims = {"lin": (3, 3), "s": (3, 3), "cms": (3, 3), "cmp": (3, 2), "jc": (4,), "tc": (3,), "eff": ()}
    assert BUILDERS[kind](scales, make_space(kind, *dims[kind])).is_hermitian(1e-12)


@CASES
@given(unit, unit, st.floats(0.0, 0.99))
def test_closed_form_matches_hopfield(dc, ds, frac):
    G = frac * critical_coupling(dc, ds)
    wp, wm2 = polariton_frequencies(dc, ds, G)
    spec = bogoliubov_spectrum(dc, ds, G)
    assert not spec.unstable
    lo, hi = spec.frequencies
    assert hi == pytest.approx(wp, rel=1e-10)
    assert lo == pytest.approx(math.sqrt(wm2), rel=1e-10)


@CASES
@given(unit, unit)
def test_branches_monotone_in_coupling(dc, ds):
    grid = np.linspace(0.0, critical_coupling(dc, ds), 40)
    wp, wm2 = np.array([polariton_frequencies(dc, ds, g) for g in grid]).T
    assert np.all(np.diff(wp) > 0)
    assert np.all(np.diff(wm2) < 0)


@CASES
@given(unit, unit, st.floats(0.0, 0.99))
def test_cavity_decomposition_symplectic(dc, ds, frac):
    assume(abs(dc - ds) > 1e-6)
    G = frac * critical_coupling(dc, ds)
    wp, wm2 = polariton_frequencies(dc, ds, G)
    um, vm, up, vp = cavity_in_polariton_basis(mixing_angle(dc, ds, G), dc, wp, math.sqrt(wm2))
    assert abs(um**2 - vm**2 + up**2 - vp**2 - 1) < 1e-12


@CASES
@given(st.floats(0.1, 10.0), st.floats(0.001, 0.999))
def test_squeeze_cosh_sinh(dm, frac):
    ks = -0.5 * frac * dm
    r, ds = squeezing_parameter(dm, ks), squeezed_frequency(dm, ks)
    assert ds * math.cosh(2 * r) == pytest.approx(dm, rel=1e-9)
    assert ds * math.sinh(2 * r) == pytest.approx(-2 * ks, rel=1e-9)


@CASES
@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.sampled_from([-1.0, 1.0]))
def test_g_eff_matches_tc_splitting(g, wm, side):
    d = wm + side * 100 * g
    assume(abs(d) > 0)
    space = make_space("tc", 3)
    h = build_h_tc(DerivedScales(Delta_nv=d, omega_minus=wm, g_r=g), space).matrix
    # one-excitation block in the rotating frame of the spins: |eg0>, |ge0>, |gg1>
    idx = [int(np.flatnonzero(product_ket(space, lv).data)[0]) for lv in ((0, 1, 0), (1, 0, 0), (1, 1, 1))]
    ev = np.sort(np.linalg.eigvalsh(h[np.ix_(idx, idx)]))
    # the two spin-like levels are the pair closest to each other
    gaps = np.diff(ev)
    split = gaps.min()
    g_eff, _ = effective_spin_spin(g, d - wm)
    assert 0.5 * split == pytest.approx(abs(g_eff), rel=0.05)


# -- dynamics ----------------------------------------------------------------------------

def _open_jc(g, wm, det, kappa, gamma, n):
    space = make_space("jc", n)
    H = build_h_jc(DerivedScales(Delta_nv=wm + det, omega_minus=wm, g_r=g), space)
    ops = (
        (embed(annihilation(n), 1, space), kappa),
        (embed(pauli("minus"), 0, space), gamma),
    )
    return space, LindbladModel(H, ops)


@CASES
@given(st.floats(0.2, 2.0), st.floats(0.5, 3.0), st.floats(-1.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 0.5))
def test_open_jc_trace_positivity_hermiticity(g, wm, det, kappa, gamma):
    space, model = _open_jc(g, wm, det, kappa, gamma, 3)
    res = evolve(model, product_ket(space, (0, 0)), np.linspace(0, 3.0, 7), rtol=1e-7, atol=1e-9)
    d = res.diagnostics
    assert d["max_trace_deviation"] < 1e-8
    assert d["min_eigenvalue_overall"] >= -1e-8
    rho = res.final_state
    assert np.abs(rho - rho.conj().T).max() < 1e-10


@CASES
@given(st.sampled_from(["jc", "tc"]), st.floats(0.1, 2.0), st.floats(0.5, 3.0), st.floats(-2.0, 2.0))
def test_closed_excitation_conserved(kind, g, wm, det):
    n = 4
    space = make_space(kind, n)
    scales = DerivedScales(Delta_nv=wm + det, omega_minus=wm, g_r=g)
    H = BUILDERS[kind](scales, space)
    levels = (0, 0) if kind == "jc" else (0, 1, 0)
    res = evolve_unitary(H, product_ket(space, levels), np.linspace(0, 20.0, 41))
    total = res["spin1_occupation"] + res["lp_occupation"] + (res["spin2_occupation"] if kind == "tc" else 0)
    assert np.abs(total - total[0]).max() < 1e-8


# -- experiments and config --------------------------------------------------------------------

@CASES
@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_fig2b_flag_follows_sign(dc, ds):
    t = run_fig2b(Delta_c=TWO_PI * dc * 1e6, Delta_s=TWO_PI * ds * 1e6)
    assert np.array_equal(t["stable"] == 1, t["omega_minus_sq_hz2"] >= 0)


@CASES
@given(
    st.floats(1e-3, 1e3, allow_nan=False),
    st.sampled_from(["hz", "khz", "mhz", "ghz"]),
    st.floats(1.0, 500.0),
    st.sampled_from(["nm", "um"]),
    st.floats(-5.0, 5.0),
)
def test_config_echo(freq, funit, length, lunit, r_m):
    raw = {"omega_c": f"{freq!r}{funit}", "R": f"{length!r}{lunit}", "r_m": repr(r_m)}
    prov = build_config(raw).provenance()
    assert prov["config"] == raw
    echoed = json.loads(json.dumps(prov))
    assert echoed["params"]["omega_c"] == parse_value("omega_c", raw["omega_c"])
    assert echoed["params"]["R"] == parse_value("R", raw["R"])
    assert echoed["overrides"]["r_m"] == r_m
