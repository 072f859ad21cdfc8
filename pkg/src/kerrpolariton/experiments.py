"""Scenario runners behind each figure and the headline derived numbers.

Every runner is deterministic. Sweeps return a :class:`SweepTable`;
dynamical scenarios return an :class:`~kerrpolariton.dynamics.EvolutionResult`
that :func:`evolution_table` turns into one. Tables are written as CSV with a
single ``#``-prefixed JSON provenance line on top.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from . import __version__
from .dynamics import EvolutionResult, LindbladModel, evolve, evolve_unitary, standard_observables
from .errors import UnstablePolaritonError, ValidationError
from .hamiltonians import build_h_cmp, build_h_jc, build_h_tc, make_space
from .model import (
    DerivedReport,
    DerivedScales,
    coupling_for_lp_frequency,
    critical_coupling,
    derive,
    effective_spin_spin,
    enhanced_coupling,
    cavity_magnon_coupling,
    mixing_angle,
    polariton_frequencies,
    polariton_spin_couplings,
)
from .params import TWO_PI, CouplingCalibration, PhysicalParams
from .quantum import annihilation, embed, pauli, product_ket

SCENARIOS = ("fig1c", "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "derive", "cmp_vs_jc")

NOMINAL_OVERRIDES = {"r_m": 3.0}

# Figure-level defaults (angular units)
FIG_G_R = TWO_PI * 3.5e6
FIG_DELTA_C = TWO_PI * 2.0e9
FIG_RATIO = 1e6
FIG_OMEGA_MINUS = FIG_DELTA_C / FIG_RATIO
FIG_DELTA_NV_DISPERSIVE = TWO_PI * 960e6
CMP_DELTA_S = TWO_PI * 20e6
CMP_LAMBDA = TWO_PI * 7e3

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10


@dataclass
class SweepTable:
    axis: str
    columns: dict[str, np.ndarray]
    provenance: dict = field(default_factory=dict)
    unstable_column: str | None = None

    def __post_init__(self):
        if self.axis not in self.columns:
            raise ValidationError(f"axis column {self.axis!r} missing")
        n = len(self.columns[self.axis])
        cols = {}
        for k, v in self.columns.items():
            v = np.asarray(v, dtype=float)
            if v.shape != (n,):
                raise ValidationError(f"column {k!r} is not aligned with the axis")
            cols[k] = v
        self.columns = cols
        flagged = np.zeros(n, dtype=bool)
        if self.unstable_column is not None:
            flagged = self.columns[self.unstable_column] == 0
        for k, v in cols.items():
            if np.any(np.isnan(v) & ~flagged):
                raise ValidationError(f"column {k!r} has NaN at points not flagged unstable")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __len__(self) -> int:
        return len(self.columns[self.axis])

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.provenance, sort_keys=True, default=_jsonable) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.columns)
        w.writerow(names)
        for row in zip(*(self.columns[k] for k in names)):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def write(self, path: str | os.PathLike) -> str:
        """Atomic write: temp file in the target directory, then rename."""
        path = os.fspath(path)
        d = os.path.dirname(os.path.abspath(path))
        os.makedirs(d, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".csv")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(self.to_csv_string())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path


def read_csv(path: str | os.PathLike) -> tuple[dict, dict[str, np.ndarray]]:
    """Inverse of :meth:`SweepTable.write`: ``(provenance, columns)``."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValidationError("missing provenance header")
        prov = json.loads(first[2:])
        rows = list(csv.reader(fh))
    names = rows[0]
    data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, len(names))
    return prov, {k: data[:, i] for i, k in enumerate(names)}


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not serializable: {type(x).__name__}")


def provenance(scenario: str, **extra) -> dict:
    out = {"scenario": scenario, "package": "kerrpolariton", "version": __version__}
    out.update(extra)
    return out


def _hz(x: float) -> float:
    return x / TWO_PI


# -- static sweeps ------------------------------------------------------------

def default_radius_grid() -> np.ndarray:
    return np.linspace(10e-9, 100e-9, 91)


def _check_radii(R_grid) -> np.ndarray:
    R = np.atleast_1d(np.asarray(R_grid, dtype=float))
    if np.any(R <= 0) or np.any(np.diff(R) <= 0):
        raise ValidationError("radius grid must be positive and ascending")
    return R


def run_fig1c(R_grid=None, calibration: CouplingCalibration | None = None) -> SweepTable:
    """Cavity-magnon coupling versus sphere radius."""
    cal = calibration or CouplingCalibration()
    R = _check_radii(default_radius_grid() if R_grid is None else R_grid)
    g = np.array([cavity_magnon_coupling(r, cal) for r in R])
    return SweepTable(
        "R_m",
        {"R_m": R, "R_nm": R * 1e9, "g_m_over_2pi_hz": g / TWO_PI},
        provenance("fig1c", calibration={"g_ref_hz": _hz(cal.g_ref), "R_ref_m": cal.R_ref, "p": cal.p}),
    )


def run_fig2a(R_grid=None, r_m_set: Iterable[float] = (0.0, 3.0, 5.0), calibration=None) -> SweepTable:
    """Enhanced coupling ``G = g_m(R) e^{r_m} / 2`` for several squeezing parameters."""
    cal = calibration or CouplingCalibration()
    R = _check_radii(default_radius_grid() if R_grid is None else R_grid)
    r_set = [float(r) for r in r_m_set]
    cols = {"R_m": R, "R_nm": R * 1e9}
    for r in r_set:
        cols[f"G_over_2pi_hz_r{r:g}"] = np.array([enhanced_coupling(cavity_magnon_coupling(x, cal), r) for x in R]) / TWO_PI
    return SweepTable(
        "R_m",
        cols,
        provenance("fig2a", r_m_set=r_set, calibration={"g_ref_hz": _hz(cal.g_ref), "R_ref_m": cal.R_ref, "p": cal.p}),
    )


def run_fig2b(G_grid=None, Delta_c: float = TWO_PI * 2e6, Delta_s: float = TWO_PI * 1e6) -> SweepTable:
    """Squared polariton frequencies versus the enhanced coupling."""
    G_c = critical_coupling(Delta_c, Delta_s)
    G = np.linspace(0.0, 1.2 * G_c, 241) if G_grid is None else np.asarray(G_grid, dtype=float)
    wp2, wm2 = [], []
    for g in G:
        wp, m2 = polariton_frequencies(Delta_c, Delta_s, g)
        wp2.append(wp**2)
        wm2.append(m2)
    wm2 = np.array(wm2)
    return SweepTable(
        "G_over_2pi_hz",
        {
            "G_over_2pi_hz": G / TWO_PI,
            "omega_plus_sq_hz2": np.array(wp2) / TWO_PI**2,
            "omega_minus_sq_hz2": wm2 / TWO_PI**2,
            "stable": (wm2 >= 0).astype(float),
        },
        provenance("fig2b", Delta_c_hz=_hz(Delta_c), Delta_s_hz=_hz(Delta_s), G_c_hz=_hz(G_c)),
        unstable_column="stable",
    )


def run_derive(params: PhysicalParams | None = None, overrides: Mapping[str, float] | None = None) -> DerivedReport:
    """Whole-chain evaluation; defaults to the nominal set with ``r_m = 3``."""
    params = params or PhysicalParams()
    ov = dict(NOMINAL_OVERRIDES if overrides is None else overrides)
    return derive(params, ov)


# -- dynamics -----------------------------------------------------------------

def _time_grid(t_end: float, period: float, points_per_period: int) -> np.ndarray:
    n = int(math.ceil(t_end / period * points_per_period))
    return np.linspace(0.0, t_end, n + 1)


def _get(ov: Mapping[str, float] | None, name: str, default: float) -> float:
    if ov and name in ov:
        return float(ov[name])
    return default


def jc_scales(overrides: Mapping[str, float] | None = None) -> DerivedScales:
    """Figure-3 scales: resonant JC at ``g_r/2pi = 3.5 MHz``."""
    wm = _get(overrides, "omega_minus", FIG_OMEGA_MINUS)
    return DerivedScales(
        omega_minus=wm,
        Delta_nv=_get(overrides, "Delta_nv", wm),
        g_r=_get(overrides, "g_r", FIG_G_R),
    )


def run_fig3(
    dissipative: bool = False,
    *,
    params: PhysicalParams | None = None,
    overrides: Mapping[str, float] | None = None,
    periods: float = 3.0,
    points_per_period: int = 400,
    lp_dim: int = 10,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> EvolutionResult:
    """Spin prepared excited, LP in vacuum; spin and LP occupations versus time."""
    params = params or PhysicalParams()
    s = jc_scales(overrides)
    space = make_space("jc", lp_dim)
    H = build_h_jc(s, space)
    psi0 = product_ket(space, (0, 0))
    period = math.pi / abs(s.g_r)
    t = _time_grid(periods * period, period, points_per_period)
    if dissipative:
        a = embed(annihilation(lp_dim), 1, space)
        sm = embed(pauli("minus"), 0, space)
        model = LindbladModel(H, ((a, params.kappa_minus), (sm, params.gamma_perp)))
        res = evolve(model, psi0, t, rtol=rtol, atol=atol)
    else:
        res = evolve_unitary(H, psi0, t)
    res.diagnostics["scales"] = s.to_dict()
    res.diagnostics["time_unit_g_r"] = 1.0 / abs(s.g_r)
    return res


def tc_scales(overrides: Mapping[str, float] | None = None) -> DerivedScales:
    """Figure-4 scales: two spins detuned 960 MHz from a slow LP."""
    g_r = _get(overrides, "g_r", FIG_G_R)
    d_nv = _get(overrides, "Delta_nv", FIG_DELTA_NV_DISPERSIVE)
    g_eff, w_eff = effective_spin_spin(g_r, d_nv)
    return DerivedScales(
        omega_minus=_get(overrides, "omega_minus", FIG_OMEGA_MINUS),
        Delta_nv=d_nv,
        g_r=g_r,
        g_eff=_get(overrides, "g_eff", g_eff),
        omega_eff=_get(overrides, "omega_eff", w_eff),
    )


def run_fig4(
    dissipative: bool = False,
    *,
    params: PhysicalParams | None = None,
    overrides: Mapping[str, float] | None = None,
    periods: float = 2.0,
    points_per_period: int = 400,
    lp_dim: int | None = None,
) -> EvolutionResult:
    """Dispersive two-spin exchange through the LP (Tavis-Cummings model).

    The closed run is exact (eigendecomposition). The open run resolves the
    ~1 GHz spin-LP detuning over tens of microseconds, so it uses the exact
    grid propagator of the master equation; the LP truncation defaults to 3
    there, ample for a single excitation that can only decay.
    """
    params = params or PhysicalParams()
    s = tc_scales(overrides)
    if lp_dim is None:
        lp_dim = 3 if dissipative else 10
    space = make_space("tc", lp_dim)
    H = build_h_tc(s, space)
    psi0 = product_ket(space, (0, 1, 0))
    period = math.pi / abs(s.g_eff)
    t = _time_grid(periods * period, period, points_per_period)
    if dissipative:
        a = embed(annihilation(lp_dim), 2, space)
        s1 = embed(pauli("minus"), 0, space)
        s2 = embed(pauli("minus"), 1, space)
        model = LindbladModel(H, ((a, params.kappa_minus), (s1, params.gamma_perp), (s2, params.gamma_perp)))
        res = evolve(model, psi0, t, method="propagator")
    else:
        res = evolve_unitary(H, psi0, t)
    res.diagnostics["scales"] = s.to_dict()
    res.diagnostics["time_unit_g_eff"] = 1.0 / abs(s.g_eff)
    return res


class CmpVsJc(NamedTuple):
    full: EvolutionResult
    jc: EvolutionResult
    max_deviation: float
    hp_max: float
    scales: DerivedScales


def cmp_scales(
    ratio: float = 1e3,
    Delta_c: float = FIG_DELTA_C,
    Delta_s: float = CMP_DELTA_S,
    lam: float = CMP_LAMBDA,
) -> DerivedScales:
    """Near-critical polariton scales with ``Delta_c / omega_minus = ratio``."""
    wm = Delta_c / ratio
    if not wm < Delta_s:
        raise ValidationError("Delta_s must exceed the target LP frequency")
    G = coupling_for_lp_frequency(Delta_c, Delta_s, wm)
    G_c = critical_coupling(Delta_c, Delta_s)
    if G >= G_c:
        raise UnstablePolaritonError("requested LP frequency needs G >= G_c")
    wp, wm2 = polariton_frequencies(Delta_c, Delta_s, G)
    theta = mixing_angle(Delta_c, Delta_s, G)
    wm = math.sqrt(wm2)
    g_r, g_cr, g_rp, g_crp = polariton_spin_couplings(lam, theta, Delta_c, wp, wm)
    return DerivedScales(
        lambda_=lam, Delta_c=Delta_c, Delta_s=Delta_s, G=G, G_c=G_c, omega_plus=wp, omega_minus=wm,
        theta=theta, g_r=g_r, g_cr=g_cr, g_r_prime=g_rp, g_cr_prime=g_crp, Delta_nv=wm,
    )


def run_cmp_vs_jc(
    ratio: float = 1e3,
    *,
    Delta_c: float = FIG_DELTA_C,
    Delta_s: float = CMP_DELTA_S,
    lam: float = CMP_LAMBDA,
    lp_dim: int = 20,
    hp_dim: int = 4,
    points_per_period: int = 400,
    zero_counter_rotating: bool = False,
) -> CmpVsJc:
    """Full spin-polariton evolution against its JC reduction over one Rabi period.

    The spin starts excited with both polaritons in vacuum, resonant with the
    LP. ``zero_counter_rotating`` drops the spin-LP counter-rotating coupling
    from the full model.
    """
    if ratio < 100:
        raise ValidationError("Delta_c / omega_minus must be at least 100")
    s = cmp_scales(ratio, Delta_c, Delta_s, lam)
    if zero_counter_rotating:
        s.g_cr = 0.0
    full_space = make_space("cmp", lp_dim, hp_dim)
    jc_space = make_space("jc", lp_dim)
    period = math.pi / abs(s.g_r)
    t = _time_grid(period, period, points_per_period)
    full = evolve_unitary(build_h_cmp(s, full_space), product_ket(full_space, (0, 0, 0)), t)
    jc = evolve_unitary(build_h_jc(s, jc_space), product_ket(jc_space, (0, 0)), t)
    dev = float(np.max(np.abs(full["spin1_occupation"] - jc["spin1_occupation"])))
    return CmpVsJc(full, jc, dev, float(full["hp_occupation"].max()), s)


def evolution_table(
    res: EvolutionResult,
    scenario: str,
    time_unit: float | None = None,
    time_unit_name: str = "t_g_r",
    **prov,
) -> SweepTable:
    cols = {"t_s": res.times}
    if time_unit:
        cols[time_unit_name] = res.times / time_unit
    cols.update(res.observables)
    diag = {k: v for k, v in res.diagnostics.items() if not isinstance(v, np.ndarray)}
    diag["max_trace_deviation"] = res.diagnostics.get("max_trace_deviation")
    return SweepTable("t_s", cols, provenance(scenario, diagnostics=diag, **prov))
