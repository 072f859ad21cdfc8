"""Quick, seeded run over every module's invariants.

Each check returns ``(ok, detail)``; :func:`run_all` catches exceptions so a
single broken invariant shows up as a failure line instead of a traceback.
The pytest suite covers the same ground with larger randomized samples.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .config import ConfigError, build_config, parse_value
from .dynamics import LindbladModel, evolve, evolve_unitary, liouvillian_apply, standard_observables
from .experiments import run_fig2b, run_fig3, run_fig4
from .hamiltonians import BUILDERS, make_space
from .model import (
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
from .params import TWO_PI
from .quantum import (
    Operator,
    QuantumState,
    SpaceDescriptor,
    adjoint,
    annihilation,
    commutator,
    creation,
    embed,
    expectation,
    product_ket,
)

SEED = 20240531
Check = Callable[[np.random.Generator], tuple[bool, str]]


def _random_density(rng, n):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def _sample_scales(rng) -> DerivedScales:
    return DerivedScales(
        Delta_nv=rng.uniform(0.5, 2), Delta_c=rng.uniform(0.5, 2), Delta_m=rng.uniform(1, 2),
        Delta_s=rng.uniform(0.5, 2), delta_m=rng.uniform(0.5, 2), K=rng.uniform(-0.1, 0.1),
        K_s=rng.uniform(-0.2, 0.2), lambda_=rng.uniform(0, 0.1), g_m=rng.uniform(0, 0.1),
        G=rng.uniform(0, 0.2), omega_plus=rng.uniform(1, 2), omega_minus=rng.uniform(0.1, 1),
        g_r=rng.uniform(0, 0.1), g_cr=rng.uniform(0, 0.1), g_r_prime=rng.uniform(0, 0.1),
        g_cr_prime=rng.uniform(0, 0.1), omega_eff=rng.uniform(0.5, 2), g_eff=rng.uniform(-0.01, 0.01),
    )


# -- quantum-core -------------------------------------------------------------

def ladder_corner(rng):
    for d in range(2, 13):
        c = commutator(annihilation(d), creation(d)).matrix
        ref = np.eye(d)
        ref[-1, -1] = 1 - d
        if not np.allclose(c, ref, rtol=0, atol=1e-14):
            return False, f"d = {d}"
    return True, "d = 2..12"


def adjoint_rules(rng):
    sp = SpaceDescriptor((3, 4))
    for _ in range(50):
        a = Operator(sp, rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12)))
        b = Operator(sp, rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12)))
        if not np.array_equal(adjoint(adjoint(a)).matrix, a.matrix):
            return False, "involution"
        if not np.allclose(adjoint(a @ b).matrix, (adjoint(b) @ adjoint(a)).matrix, atol=1e-12):
            return False, "product rule"
    return True, "50 random pairs"


def embed_spectrum(rng):
    for _ in range(30):
        factors = tuple(int(x) for x in rng.integers(2, 5, size=3))
        slot = int(rng.integers(0, 3))
        d = factors[slot]
        x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = Operator(SpaceDescriptor((d,)), x + x.conj().T)
        big = embed(h, slot, SpaceDescriptor(factors))
        mult = math.prod(factors) // d
        ref = np.sort(np.repeat(h.eigvalsh(), mult))
        if not np.allclose(np.sort(big.eigvalsh()), ref, atol=1e-10):
            return False, f"factors {factors}, slot {slot}"
    return True, "30 random embeddings"


def expectation_real(rng):
    sp = SpaceDescriptor((2, 5))
    worst = 0.0
    for _ in range(50):
        x = rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10))
        h = Operator(sp, x + x.conj().T)
        v = expectation(h, QuantumState(sp, _random_density(rng, 10)))
        worst = max(worst, abs(complex(v).imag))
    return worst < 1e-10, f"max |Im| = {worst:.1e}"


# -- model --------------------------------------------------------------------

def builders_hermitian(rng):
    dims = {"sys": (4, 4), "lin": (4, 4), "s": (4, 4), "cms": (4, 4), "cmp": (4, 3), "jc": (5,), "tc": (4,), "eff": ()}
    for _ in range(20):
        s = _sample_scales(rng)
        for kind, builder in BUILDERS.items():
            h = builder(s, make_space(kind, *dims[kind]))
            if not h.is_hermitian(1e-12):
                return False, kind
    return True, f"{len(BUILDERS)} builders x 20 scale sets"


def closed_form_vs_hopfield(rng):
    worst = 0.0
    for _ in range(200):
        dc, ds = rng.uniform(0.1, 10, size=2)
        g = rng.uniform(0, 0.99) * critical_coupling(dc, ds)
        wp, wm2 = polariton_frequencies(dc, ds, g)
        ref = bogoliubov_spectrum(dc, ds, g).frequencies
        worst = max(worst, abs(math.sqrt(wm2) - ref[0]) / ref[0], abs(wp - ref[1]) / ref[1])
    return worst < 1e-10, f"max rel err {worst:.1e}"


def branch_monotonicity(rng):
    for _ in range(20):
        dc, ds = rng.uniform(0.1, 10, size=2)
        G = np.linspace(0, critical_coupling(dc, ds), 200)
        f = np.array([polariton_frequencies(dc, ds, g) for g in G])
        if np.any(np.diff(f[:, 0]) <= 0) or np.any(np.diff(f[:, 1]) >= 0):
            return False, f"Dc = {dc:.3g}, Ds = {ds:.3g}"
    return True, "20 random detuning pairs"


def symplectic_identity(rng):
    worst = 0.0
    for _ in range(200):
        dc, ds = rng.uniform(0.1, 10, size=2)
        if abs(dc - ds) < 1e-3:
            continue
        g = rng.uniform(0, 0.99) * critical_coupling(dc, ds)
        wp, wm2 = polariton_frequencies(dc, ds, g)
        um, vm, up, vp = cavity_in_polariton_basis(mixing_angle(dc, ds, g), dc, wp, math.sqrt(wm2))
        worst = max(worst, abs(um**2 - vm**2 + up**2 - vp**2 - 1))
    return worst < 1e-12, f"max deviation {worst:.1e}"


def squeeze_consistency(rng):
    for _ in range(200):
        dm = rng.uniform(0.1, 10)
        ks = -rng.uniform(0, 0.49) * dm
        r, s = squeezing_parameter(dm, ks), squeezed_frequency(dm, ks)
        if not (math.isclose(s * math.cosh(2 * r), dm, rel_tol=1e-10)
                and math.isclose(s * math.sinh(2 * r), -2 * ks, rel_tol=1e-9, abs_tol=1e-12)):
            return False, f"Dm = {dm}, Ks = {ks}"
    return True, "200 samples with K_s < 0"


def g_eff_vs_tc(rng):
    g = TWO_PI * 3.5e6
    wm = TWO_PI * 2e3
    d = wm + 100 * g
    ge, _ = effective_spin_spin(g, d)
    s = DerivedScales(Delta_nv=d, omega_minus=wm, g_r=g)
    space = make_space("tc", 4)
    h = BUILDERS["tc"](s, space).matrix
    # one-excitation block: |eg0>, |ge0>, |gg1>
    idx = [np.ravel_multi_index(lv, space.factors) for lv in ((0, 1, 0), (1, 0, 0), (1, 1, 1))]
    ev = np.sort(np.linalg.eigvalsh(h[np.ix_(idx, idx)]))
    split = ev[2] - ev[1]  # the two spin-like levels sit at the top
    ratio = 0.5 * split / abs(ge)
    return abs(ratio - 1) < 0.05, f"half splitting / |g_eff| = {ratio:.4f}"


# -- dynamics -----------------------------------------------------------------

def generator_traceless(rng):
    space = make_space("jc", 5)
    s = DerivedScales(Delta_nv=1.0, omega_minus=1.0, g_r=0.1)
    a = embed(annihilation(5), 1, space)
    model = LindbladModel(BUILDERS["jc"](s, space), ((a, 0.3),))
    worst = max(abs(np.trace(liouvillian_apply(model, _random_density(rng, 10)))) for _ in range(50))
    return worst < 1e-12, f"max |tr| = {worst:.1e}"


def open_jc_state_checks(rng):
    res = run_fig3(True, periods=1.0, points_per_period=100)
    d = res.diagnostics
    ok = d["max_trace_deviation"] < 1e-8 and d["min_eigenvalue_overall"] >= -1e-8
    return ok, f"trace dev {d['max_trace_deviation']:.1e}, min eig {d['min_eigenvalue_overall']:.1e}"


def excitation_conservation(rng):
    worst = 0.0
    r3 = run_fig3(False)
    worst = max(worst, np.abs(r3["spin1_occupation"] + r3["lp_occupation"] - 1).max())
    r4 = run_fig4(False, points_per_period=50)
    worst = max(worst, np.abs(r4["spin1_occupation"] + r4["spin2_occupation"] + r4["lp_occupation"] - 1).max())
    return worst < 1e-8, f"max drift {worst:.1e}"


def truncation_adequacy(rng):
    a = run_fig3(False, lp_dim=10)
    b = run_fig3(False, lp_dim=20)
    top = a["top_fock_population"].max()
    diff = max(np.abs(a[k] - b[k]).max() for k in ("spin1_occupation", "lp_occupation"))
    return top < 1e-4 and diff < 1e-6, f"top Fock {top:.1e}, doubling change {diff:.1e}"


def integrator_convergence(rng):
    kw = dict(periods=0.5, points_per_period=20)
    a = run_fig3(True, rtol=1e-7, atol=1e-9, **kw)
    b = run_fig3(True, rtol=5e-8, atol=5e-10, **kw)
    change = abs(a["spin1_occupation"][-1] - b["spin1_occupation"][-1])
    est = a.diagnostics["error_estimate"]
    return change < est, f"change {change:.1e} < estimate {est:.1e}"


def unitary_matches_lindblad(rng):
    space = make_space("jc", 6)
    s = DerivedScales(Delta_nv=1.0, omega_minus=1.0, g_r=0.05)
    H = BUILDERS["jc"](s, space)
    psi = product_ket(space, (0, 0))
    t = np.linspace(0, 60, 61)
    u = evolve_unitary(H, psi, t)
    m = evolve(LindbladModel(H), psi, t, rtol=1e-10, atol=1e-12)
    diff = max(np.abs(u[k] - m[k]).max() for k in u.observables)
    return diff < 1e-8, f"max diff {diff:.1e}"


# -- experiments --------------------------------------------------------------

def fig2b_flags(rng):
    t = run_fig2b()
    return bool(np.all((t["omega_minus_sq_hz2"] >= 0) == (t["stable"] == 1))), f"{len(t)} grid points"


def vacuum_observables(rng):
    space = make_space("tc", 5)
    obs = standard_observables(space)
    psi = product_ket(space, (1, 1, 0))
    vals = {k: expectation(op, psi).real for k, op in obs.items()}
    return all(abs(v) < 1e-15 for v in vals.values()), ", ".join(sorted(vals))


# -- cli ----------------------------------------------------------------------

def config_schema(rng):
    try:
        build_config({"no_such_key": "1"})
        return False, "unknown key accepted"
    except ConfigError:
        pass
    ok = math.isclose(parse_value("omega_c", "2 GHz"), TWO_PI * 2e9) and math.isclose(parse_value("R", "50nm"), 50e-9)
    return ok, "units and unknown-key rejection"


CHECKS: list[tuple[str, Check]] = [
    ("quantum-core: [a, a^dag] truncation corner", ladder_corner),
    ("quantum-core: adjoint involution and product rule", adjoint_rules),
    ("quantum-core: embed preserves spectra", embed_spectrum),
    ("quantum-core: Hermitian expectations are real", expectation_real),
    ("model: builders are Hermitian", builders_hermitian),
    ("model: closed-form polaritons match Hopfield matrix", closed_form_vs_hopfield),
    ("model: omega_- falls and omega_+ rises with G", branch_monotonicity),
    ("model: cavity decomposition is symplectic", symplectic_identity),
    ("model: cosh/sinh squeezing consistency", squeeze_consistency),
    ("model: g_eff matches TC singlet-triplet splitting", g_eff_vs_tc),
    ("dynamics: generator is traceless", generator_traceless),
    ("dynamics: trace and positivity on open JC", open_jc_state_checks),
    ("dynamics: excitation conserved in closed JC/TC", excitation_conservation),
    ("dynamics: truncation adequacy", truncation_adequacy),
    ("dynamics: integrator convergence within estimate", integrator_convergence),
    ("dynamics: unitary and Lindblad agree without decay", unitary_matches_lindblad),
    ("experiments: fig2b stability flag follows sign of omega_-^2", fig2b_flags),
    ("experiments: vacuum gives zero occupations", vacuum_observables),
    ("cli: config schema", config_schema),
]


def run_all(seed: int = SEED) -> list[tuple[str, bool, str]]:
    out = []
    for name, check in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            ok, detail = check(rng)
        except Exception as exc:  # report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
