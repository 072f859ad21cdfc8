"""Closed-form quantities of the Kerr-magnon / cavity / spin reduction chain.

Everything here is a pure function of floats (angular frequencies in rad/s).
:func:`derive` strings the steps together, optionally pinning any
intermediate quantity through ``overrides``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Mapping, NamedTuple

import numpy as np

from .errors import (
    ConfigError,
    DegenerateDetuningError,
    SingularGeometryError,
    SqueezingUndefinedError,
    UndefinedCriticalityError,
    UnphysicalRegimeError,
    UnstablePolaritonError,
    ValidationError,
)
from .params import HBAR, MU_0, MU_B, TWO_PI, CouplingCalibration, PhysicalParams, gyromagnetic_ratio

DISPERSIVE_GUARD = 10.0

NAN = float("nan")


# -- laboratory-scale couplings -----------------------------------------------

def spin_frequency(D: float, g_e: float, B_ex: float) -> float:
    """NV transition frequency ``D - g_e mu_B B_ex / hbar``."""
    omega = D - g_e * MU_B * B_ex / HBAR
    if omega <= 0:
        raise UnphysicalRegimeError(f"external field {B_ex} T pushes the NV transition to {omega} rad/s")
    return omega


def sphere_volume(R: float) -> float:
    return 4.0 / 3.0 * math.pi * R**3


def kerr_coefficient(K_an: float, g_e: float, M: float, R: float) -> float:
    """``mu_0 K_an gamma^2 / (M^2 V_m)``; the sign follows ``K_an``."""
    if R <= 0 or M <= 0:
        raise ValidationError("sphere radius and magnetization must be positive")
    return MU_0 * K_an * gyromagnetic_ratio(g_e) ** 2 / (M**2 * sphere_volume(R))


def magnon_frequency(B_0: float, K_an: float, M: float, R: float, s_total: float | None, g_e: float) -> float:
    """Kittel-mode frequency ``gamma B_0 - (2 s - 1) K``.

    ``s_total=None`` is treated as ``1/2``, where the anisotropy shift vanishes.
    """
    s = 0.5 if s_total is None else s_total
    K = kerr_coefficient(K_an, g_e, M, R)
    omega = gyromagnetic_ratio(g_e) * B_0 - (2.0 * s - 1.0) * K
    if omega <= 0:
        raise UnphysicalRegimeError(f"Kittel frequency {omega} rad/s is not positive")
    return omega


def spin_cavity_coupling(omega_c: float, L_a: float, d: float, g_e: float) -> float:
    """Spin-resonator coupling from the vacuum current of a CPW centre line.

    ``lambda = 2 g_e mu_B B_rms / hbar`` with ``B_rms = mu_0 I_rms / (2 pi d)``
    and ``I_rms = sqrt(hbar omega_c / (2 L_a))``.
    """
    if d <= 0:
        raise SingularGeometryError("spin must sit a finite distance from the centre conductor")
    i_rms = math.sqrt(HBAR * omega_c / (2.0 * L_a))
    b_rms = MU_0 * i_rms / (2.0 * math.pi * d)
    return 2.0 * g_e * MU_B * b_rms / HBAR


def cavity_magnon_coupling(R: float, calibration: CouplingCalibration | None = None) -> float:
    if R <= 0:
        raise ValidationError("sphere radius must be positive")
    cal = calibration or CouplingCalibration()
    return cal.g_ref * (R / cal.R_ref) ** cal.p


# -- Kerr steady state and squeezing ------------------------------------------

class SteadyStateRoot(NamedTuple):
    n: float
    stable: bool


def steady_state_magnon(delta_m: float, K: float, kappa_m: float, Omega_d: float) -> list[SteadyStateRoot]:
    """Mean-field magnon populations ``n = |<m>|^2`` of the driven Kerr mode.

    Solves ``n[(delta_m + 2 K n)^2 + (kappa_m/2)^2] = Omega_d^2``. A root is
    stable when the left-hand side increases through it; the middle branch
    of a bistable triple is the unstable one.
    """
    if kappa_m < 0:
        raise ValidationError("kappa_m must be nonnegative")
    if Omega_d == 0:
        return [SteadyStateRoot(0.0, True)]
    coeffs = [4 * K**2, 4 * K * delta_m, delta_m**2 + kappa_m**2 / 4, -(Omega_d**2)]
    f = np.poly1d(coeffs)
    df = f.deriv()
    scale = max(abs(c) for c in coeffs)
    roots = []
    for z in np.roots(coeffs):
        if abs(z.imag) > 1e-6 * max(1.0, abs(z)):
            continue
        n = float(z.real)
        for _ in range(50):  # Newton polish
            slope = df(n)
            if slope == 0:
                break
            step = f(n) / slope
            n -= step
            if abs(step) <= 1e-16 * max(1.0, abs(n)):
                break
        if n < 0:
            continue
        if abs(f(n)) > 1e-8 * scale * max(1.0, n**3):
            continue
        roots.append(SteadyStateRoot(n, bool(df(n) > 0)))
    roots.sort()
    dedup = []
    for r in roots:
        if not dedup or abs(r.n - dedup[-1].n) > 1e-9 * max(1.0, r.n):
            dedup.append(r)
    return dedup


def two_magnon_params(delta_m: float, K: float, mean_m: complex) -> tuple[float, float]:
    """``(Delta_m, K_s)`` with the drive phase chosen so ``<m>^2`` is real.

    Only ``|<m>|`` matters under that convention, so ``K_s = K |<m>|^2``.
    """
    n = abs(mean_m) ** 2
    return delta_m + 4.0 * K * n, K * n


def squeezing_parameter(Delta_m: float, K_s: float) -> float:
    """``r_m = 1/4 ln[(Delta_m - 2 K_s) / (Delta_m + 2 K_s)]``."""
    num, den = Delta_m - 2.0 * K_s, Delta_m + 2.0 * K_s
    if den == 0 or num / den <= 0:
        raise SqueezingUndefinedError(f"|Delta_m| = {abs(Delta_m)} must exceed 2|K_s| = {2 * abs(K_s)}")
    return 0.25 * math.log(num / den)


def squeezed_frequency(Delta_m: float, K_s: float) -> float:
    if abs(Delta_m) <= 2.0 * abs(K_s):
        raise SqueezingUndefinedError(f"|Delta_m| = {abs(Delta_m)} must exceed 2|K_s| = {2 * abs(K_s)}")
    # (|D| - 2|K|)(|D| + 2|K|) avoids cancellation close to the squeezing edge
    return math.sqrt((abs(Delta_m) - 2.0 * abs(K_s)) * (abs(Delta_m) + 2.0 * abs(K_s)))


def enhanced_coupling(g_m: float, r_m: float) -> float:
    if g_m <= 0:
        raise ValidationError("g_m must be positive")
    return 0.5 * g_m * math.exp(r_m)


# -- polaritons ---------------------------------------------------------------

def polariton_frequencies(Delta_c: float, Delta_s: float, G: float) -> tuple[float, float]:
    """Return ``(omega_plus, omega_minus_squared)``.

    ``omega_minus_squared`` is signed; a negative value marks an unstable LP.
    The lower root is taken from the product of roots,
    ``omega_+^2 omega_-^2 = Delta_c Delta_s (Delta_c Delta_s - 4 G^2)``, which
    is free of the cancellation the difference form suffers near criticality.
    """
    if not (Delta_c > 0 and Delta_s > 0):
        raise ValidationError("polariton frequencies need Delta_c > 0 and Delta_s > 0")
    p = Delta_c * Delta_s
    disc = math.sqrt((Delta_c**2 - Delta_s**2) ** 2 + 16.0 * G**2 * p)
    wp2 = 0.5 * (Delta_c**2 + Delta_s**2 + disc)
    wm2 = p * (p - 4.0 * G**2) / wp2
    return math.sqrt(wp2), wm2


def critical_coupling(Delta_c: float, Delta_s: float) -> float:
    p = Delta_c * Delta_s
    if p < 0:
        raise UndefinedCriticalityError("Delta_c and Delta_s have opposite signs")
    return 0.5 * math.sqrt(p)


def coupling_for_lp_frequency(Delta_c: float, Delta_s: float, omega_minus: float) -> float:
    """Inverse of :func:`polariton_frequencies`: the ``G`` giving LP frequency ``omega_minus``."""
    p = Delta_c * Delta_s
    wm2 = omega_minus**2
    if not 0 <= wm2 < min(Delta_c, Delta_s) ** 2:
        raise ValidationError("omega_minus must lie below both bare frequencies")
    g2 = (p - wm2 * (Delta_c**2 + Delta_s**2 - wm2) / p) / 4.0
    return math.sqrt(g2)


def mixing_angle(Delta_c: float, Delta_s: float, G: float) -> float:
    """Principal-branch ``theta`` from ``tan 2 theta = 4 G sqrt(Dc Ds) / (Dc^2 - Ds^2)``."""
    if Delta_c == Delta_s:
        raise DegenerateDetuningError("mixing angle branch is undefined for Delta_c == Delta_s")
    return 0.5 * math.atan(4.0 * G * math.sqrt(Delta_c * Delta_s) / (Delta_c**2 - Delta_s**2))


def _check_polaritons(Delta_c: float, omega_plus: float, omega_minus: float) -> None:
    if not omega_minus > 0:
        raise UnstablePolaritonError(f"omega_minus = {omega_minus}: LP is not a stable mode")
    if not (omega_plus > 0 and Delta_c > 0):
        raise ValidationError("need omega_plus > 0 and Delta_c > 0")


def cavity_in_polariton_basis(theta: float, Delta_c: float, omega_plus: float, omega_minus: float):
    """Coefficients ``(u_-, v_-, u_+, v_+)`` of
    ``a = u_- a_- + v_- a_-^dag + u_+ a_+ + v_+ a_+^dag``."""
    _check_polaritons(Delta_c, omega_plus, omega_minus)
    cm = math.cos(theta) / (2.0 * math.sqrt(Delta_c * omega_minus))
    cp = math.sin(theta) / (2.0 * math.sqrt(Delta_c * omega_plus))
    return (
        cm * (Delta_c + omega_minus),
        cm * (Delta_c - omega_minus),
        cp * (Delta_c + omega_plus),
        cp * (Delta_c - omega_plus),
    )


def polariton_spin_couplings(lam: float, theta: float, Delta_c: float, omega_plus: float, omega_minus: float):
    """``(g_r, g_cr, g_r_prime, g_cr_prime)``: rotating and counter-rotating
    spin couplings to the LP (unprimed) and HP (primed)."""
    u_m, v_m, u_p, v_p = cavity_in_polariton_basis(theta, Delta_c, omega_plus, omega_minus)
    return lam * u_m, lam * v_m, lam * u_p, lam * v_p


class BogoliubovSpectrum(NamedTuple):
    frequencies: np.ndarray
    unstable: bool
    eigenvalues: np.ndarray


def hopfield_matrix(Delta_c: float, Delta_s: float, G: float) -> np.ndarray:
    """Dynamical matrix ``M`` with ``i d/dt (a, b, a^dag, b^dag) = M (a, b, a^dag, b^dag)``
    for ``Dc a^dag a + Ds b^dag b + G (a + a^dag)(b + b^dag)``."""
    A = np.array([[Delta_c, G], [G, Delta_s]], dtype=float)
    B = np.array([[0.0, G], [G, 0.0]])
    return np.block([[A, B], [-B, -A]])


def bogoliubov_spectrum(Delta_c: float, Delta_s: float, G: float, tol: float = 1e-9) -> BogoliubovSpectrum:
    """Normal-mode frequencies from the eigenvalues of the Hopfield matrix.

    Returns the positive branch in ascending order. An eigenvalue with a
    non-negligible imaginary part sets ``unstable``; the corresponding entry
    of ``frequencies`` is then the (complex) eigenvalue itself.
    """
    if not (Delta_c > 0 and Delta_s > 0):
        raise ValidationError("need Delta_c > 0 and Delta_s > 0")
    ev = np.linalg.eigvals(hopfield_matrix(Delta_c, Delta_s, G))
    scale = max(Delta_c, Delta_s)
    unstable = bool(np.abs(ev.imag).max() > tol * scale)
    if not unstable:
        pos = np.sort(ev.real[ev.real > 0])
        if len(pos) != 2:
            pos = np.sort(np.abs(ev.real))[::2]
        return BogoliubovSpectrum(pos, False, ev)
    order = np.argsort(-ev.imag)
    return BogoliubovSpectrum(ev[order][:2], True, ev)


# -- dispersive spin-spin coupling --------------------------------------------

def dispersive_ratio(Delta_nv: float, omega_minus: float, g_r: float) -> float:
    return abs(Delta_nv - omega_minus) / abs(g_r) if g_r else math.inf


def check_dispersive(Delta_nv: float, omega_minus: float, g_r: float, guard: float = DISPERSIVE_GUARD) -> float:
    ratio = dispersive_ratio(Delta_nv, omega_minus, g_r)
    if ratio < guard:
        raise UnphysicalRegimeError(f"|Delta_NV - omega_-|/g_r = {ratio:.3g} is below the dispersive guard {guard}")
    return ratio


def effective_spin_spin(g_r: float, Delta_nv: float, n_minus: float = 0.0) -> tuple[float, float]:
    """``(g_eff, omega_eff)`` after adiabatic elimination of the LP."""
    if Delta_nv == 0:
        raise ZeroDivisionError("Delta_NV = 0: the LP cannot be eliminated")
    g_eff = -(g_r**2) / Delta_nv
    return g_eff, Delta_nv + 2.0 * g_eff * n_minus + g_eff


# -- the full chain -----------------------------------------------------------

def _public(name: str) -> str:
    return "lambda" if name == "lambda_" else name


def _private(name: str) -> str:
    return "lambda_" if name == "lambda" else name


@dataclass
class DerivedScales:
    """Every derived symbol of the chain, in rad/s (``r_m``, ``theta`` dimensionless).

    Unset entries are NaN. ``lambda`` is a keyword, hence ``lambda_``; it is
    serialized as ``"lambda"``.
    """

    omega_nv: float = NAN
    omega_m: float = NAN
    K: float = NAN
    g_m: float = NAN
    lambda_: float = NAN
    delta_m: float = NAN
    Delta_m: float = NAN
    Delta_c: float = NAN
    Delta_nv: float = NAN
    K_s: float = NAN
    r_m: float = NAN
    Delta_s: float = NAN
    G: float = NAN
    G_c: float = NAN
    omega_plus: float = NAN
    omega_minus: float = NAN
    theta: float = NAN
    g_r: float = NAN
    g_cr: float = NAN
    g_r_prime: float = NAN
    g_cr_prime: float = NAN
    g_eff: float = NAN
    omega_eff: float = NAN

    @staticmethod
    def field_names() -> list[str]:
        return [_public(f.name) for f in fields(DerivedScales)]

    def get(self, name: str) -> float:
        return getattr(self, _private(name))

    def require(self, *names: str) -> tuple[float, ...]:
        vals = tuple(self.get(n) for n in names)
        bad = [n for n, v in zip(names, vals) if not math.isfinite(v)]
        if bad:
            raise ValidationError(f"scales {bad} are not set")
        return vals

    def to_dict(self) -> dict[str, float | None]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[_public(f.name)] = float(v) if math.isfinite(v) else None
        return out


ANGULAR = frozenset(DerivedScales.field_names()) - {"r_m", "theta"}


@dataclass
class DerivedReport:
    scales: DerivedScales
    mean_m_abs: float
    omega_minus_squared: float
    lp_stable: bool
    dispersive_ratio: float
    dispersive_ok: bool
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        s = self.scales.to_dict()
        out: dict = dict(s)
        for k, v in s.items():
            if k in ANGULAR:
                out[f"{k}_over_2pi_hz"] = None if v is None else v / TWO_PI
        out["flags"] = {
            "lp_stable": self.lp_stable,
            "omega_minus_squared": self.omega_minus_squared,
            "dispersive_ratio": None if not math.isfinite(self.dispersive_ratio) else self.dispersive_ratio,
            "dispersive_ok": self.dispersive_ok,
            "mean_m_abs": self.mean_m_abs,
        }
        out["notes"] = list(self.notes)
        return out


def resolve_mean_m(params: PhysicalParams, delta_m: float, K: float) -> tuple[float, list[str]]:
    if params.mean_m is not None:
        return abs(params.mean_m), []
    roots = [r for r in steady_state_magnon(delta_m, K, params.kappa_m, params.Omega_d) if r.stable]
    if not roots:
        raise UnphysicalRegimeError("driven Kerr mode has no stable steady state")
    n = roots[-1].n
    notes = []
    if len(roots) > 1:
        notes.append(f"bistable drive: picked the upper stable branch n = {n:.6g}")
    return math.sqrt(n), notes


def derive(
    params: PhysicalParams,
    overrides: Mapping[str, float] | None = None,
    n_minus: float = 0.0,
    dispersive_guard: float = DISPERSIVE_GUARD,
) -> DerivedReport:
    """Evaluate the whole chain; any named scale in ``overrides`` replaces the
    computed value and feeds every downstream step."""
    ov = dict(overrides or {})
    unknown = set(ov) - set(DerivedScales.field_names())
    if unknown:
        raise ConfigError(f"unknown derived-scale overrides: {sorted(unknown)}")
    s = DerivedScales()
    notes: list[str] = []

    def put(name, compute):
        value = ov[name] if name in ov else compute()
        setattr(s, _private(name), float(value))
        return float(value)

    p = params
    put("omega_nv", lambda: spin_frequency(p.D, p.g_e, p.B_ex))
    K = put("K", lambda: kerr_coefficient(p.K_an, p.g_e, p.M, p.R))
    if p.s_total is None and "omega_m" not in ov:
        notes.append("s_total not given: Kittel frequency taken without the anisotropy shift")
    put("omega_m", lambda: magnon_frequency(p.B_0, p.K_an, p.M, p.R, p.s_total, p.g_e))
    put("g_m", lambda: cavity_magnon_coupling(p.R, p.coupling))
    put("lambda", lambda: spin_cavity_coupling(p.omega_c, p.L_a, p.d, p.g_e))
    Delta_nv = put("Delta_nv", lambda: s.omega_nv - p.omega_d)
    Delta_c = put("Delta_c", lambda: p.omega_c - p.omega_d)
    delta_m = put("delta_m", lambda: s.omega_m - p.omega_d)

    mean_abs, mnotes = resolve_mean_m(p, delta_m, K)
    notes += mnotes
    Dm_ks = two_magnon_params(delta_m, K, mean_abs)
    Delta_m = put("Delta_m", lambda: Dm_ks[0])
    K_s = put("K_s", lambda: Dm_ks[1])
    r_m = put("r_m", lambda: squeezing_parameter(Delta_m, K_s))
    Delta_s = put("Delta_s", lambda: squeezed_frequency(Delta_m, K_s))
    G = put("G", lambda: enhanced_coupling(s.g_m, r_m))
    put("G_c", lambda: critical_coupling(Delta_c, Delta_s))

    wp, wm2 = polariton_frequencies(Delta_c, Delta_s, G)
    put("omega_plus", lambda: wp)
    if "omega_minus" in ov:
        wm2 = ov["omega_minus"] ** 2
    stable = wm2 > 0
    put("omega_minus", lambda: math.sqrt(wm2) if stable else NAN)
    put("theta", lambda: mixing_angle(Delta_c, Delta_s, G))

    if stable:
        couplings = polariton_spin_couplings(s.lambda_, s.theta, Delta_c, s.omega_plus, s.omega_minus)
    else:
        couplings = (NAN,) * 4
        notes.append("LP unstable (G > G_c): spin-polariton couplings undefined")
    for name, value in zip(("g_r", "g_cr", "g_r_prime", "g_cr_prime"), couplings):
        put(name, lambda value=value: value)

    if math.isfinite(s.g_r):
        ge_we = effective_spin_spin(s.g_r, Delta_nv, n_minus)
    else:
        ge_we = (NAN, NAN)
    put("g_eff", lambda: ge_we[0])
    put("omega_eff", lambda: ge_we[1])

    ratio = dispersive_ratio(Delta_nv, s.omega_minus, s.g_r) if math.isfinite(s.g_r) else NAN
    return DerivedReport(
        scales=s,
        mean_m_abs=mean_abs,
        omega_minus_squared=wm2,
        lp_stable=bool(stable),
        dispersive_ratio=ratio,
        dispersive_ok=bool(math.isfinite(ratio) and ratio >= dispersive_guard),
        notes=notes,
    )
