"""Hamiltonian builders for every stage of the reduction chain.

Each builder takes a :class:`~kerrpolariton.model.DerivedScales` and a
labelled :class:`~kerrpolariton.quantum.SpaceDescriptor` whose layout must
match the one listed in :data:`LAYOUTS`. Boson truncations are free.
"""

from __future__ import annotations

from .errors import ValidationError
from .model import DerivedScales
from .quantum import Operator, SpaceDescriptor, annihilation, embed, identity, pauli

LAYOUTS = {
    "sys": ("spin1", "cavity", "magnon"),
    "lin": ("spin1", "cavity", "magnon"),
    "s": ("spin1", "cavity", "squeezed"),
    "cms": ("cavity", "squeezed"),
    "cmp": ("spin1", "lp", "hp"),
    "jc": ("spin1", "lp"),
    "tc": ("spin1", "spin2", "lp"),
    "eff": ("spin1", "spin2"),
}


def make_space(kind: str, *boson_dims: int) -> SpaceDescriptor:
    """Labelled space for builder ``kind``; qubit factors are filled in automatically.

    >>> make_space("tc", 10).factors
    (2, 2, 10)
    """
    labels = LAYOUTS[kind]
    n_bosons = sum(not lab.startswith("spin") for lab in labels)
    if len(boson_dims) != n_bosons:
        raise ValidationError(f"layout {labels} takes {n_bosons} boson dimensions, got {boson_dims}")
    dims = iter(boson_dims)
    factors = tuple(2 if lab.startswith("spin") else next(dims) for lab in labels)
    return SpaceDescriptor(factors, labels)


class _Ops:
    """Embedded single-factor operators of one space, looked up by label."""

    def __init__(self, space: SpaceDescriptor):
        self.space = space

    def boson(self, label: str) -> Operator:
        slot = self.space.slot(label)
        return embed(annihilation(self.space.factors[slot]), slot, self.space)

    def sigma(self, label: str, kind: str) -> Operator:
        return embed(pauli(kind), self.space.slot(label), self.space)

    def zero(self) -> Operator:
        return identity(self.space) * 0.0


def _finish(h: Operator, name: str) -> Operator:
    if not h.is_hermitian(1e-12):
        raise AssertionError(f"{name} came out non-Hermitian")
    return Operator(h.space, 0.5 * (h.matrix + h.matrix.conj().T))


def _spin_cavity(o: _Ops, lam: float, spin: str, mode: str) -> Operator:
    sp, sm = o.sigma(spin, "plus"), o.sigma(spin, "minus")
    a = o.boson(mode)
    return lam * (sp @ a + a.dag() @ sm)


def _beam_splitter(o: _Ops, g: float, x: str, y: str) -> Operator:
    a, b = o.boson(x), o.boson(y)
    return g * (a.dag() @ b + a @ b.dag())


def build_h_sys(scales: DerivedScales, space: SpaceDescriptor, Omega_d: float) -> Operator:
    """Rotating-frame Hamiltonian with the full Kerr term and the classical drive."""
    space.require_layout(LAYOUTS["sys"])
    d_nv, d_c, d_m, K, lam, g_m = scales.require("Delta_nv", "Delta_c", "delta_m", "K", "lambda", "g_m")
    o = _Ops(space)
    a, m = o.boson("cavity"), o.boson("magnon")
    md = m.dag()
    h = (
        0.5 * d_nv * o.sigma("spin1", "z")
        + d_c * (a.dag() @ a)
        + d_m * (md @ m)
        + K * (md @ md @ m @ m)
        + Omega_d * (md + m)
        + _spin_cavity(o, lam, "spin1", "cavity")
        + _beam_splitter(o, g_m, "cavity", "magnon")
    )
    return _finish(h, "H_sys")


def build_h_lin(scales: DerivedScales, space: SpaceDescriptor) -> Operator:
    """Linearized Hamiltonian: the Kerr term reduced to a two-magnon process."""
    space.require_layout(LAYOUTS["lin"])
    d_nv, d_c, D_m, K_s, lam, g_m = scales.require("Delta_nv", "Delta_c", "Delta_m", "K_s", "lambda", "g_m")
    o = _Ops(space)
    a, m = o.boson("cavity"), o.boson("magnon")
    h = (
        0.5 * d_nv * o.sigma("spin1", "z")
        + d_c * (a.dag() @ a)
        + D_m * (m.dag() @ m)
        + K_s * (m @ m + m.dag() @ m.dag())
        + _spin_cavity(o, lam, "spin1", "cavity")
        + _beam_splitter(o, g_m, "cavity", "magnon")
    )
    return _finish(h, "H_lin")


def _cms_terms(o: _Ops, D_c: float, D_s: float, G: float) -> Operator:
    a, b = o.boson("cavity"), o.boson("squeezed")
    return D_c * (a.dag() @ a) + D_s * (b.dag() @ b) + G * ((a + a.dag()) @ (b + b.dag()))


def build_h_cms(scales: DerivedScales, space: SpaceDescriptor) -> Operator:
    """Cavity coupled to the squeezed magnon with the enhanced coupling G."""
    space.require_layout(LAYOUTS["cms"])
    D_c, D_s, G = scales.require("Delta_c", "Delta_s", "G")
    return _finish(_cms_terms(_Ops(space), D_c, D_s, G), "H_CMS")


def build_h_s(scales: DerivedScales, space: SpaceDescriptor) -> Operator:
    """Spin plus the squeezed-frame cavity-magnon block."""
    space.require_layout(LAYOUTS["s"])
    d_nv, D_c, D_s, G, lam = scales.require("Delta_nv", "Delta_c", "Delta_s", "G", "lambda")
    o = _Ops(space)
    h = 0.5 * d_nv * o.sigma("spin1", "z") + _cms_terms(o, D_c, D_s, G) + _spin_cavity(o, lam, "spin1", "cavity")
    return _finish(h, "H_S")


def build_h_cmp(scales: DerivedScales, space: SpaceDescriptor) -> Operator:
    """Spin coupled to both polaritons, rotating and counter-rotating terms kept."""
    space.require_layout(LAYOUTS["cmp"])
    d_nv, wp, wm, g_r, g_cr, g_rp, g_crp = scales.require(
        "Delta_nv", "omega_plus", "omega_minus", "g_r", "g_cr", "g_r_prime", "g_cr_prime"
    )
    o = _Ops(space)
    sp, sm = o.sigma("spin1", "plus"), o.sigma("spin1", "minus")
    am, ap = o.boson("lp"), o.boson("hp")
    h = (
        0.5 * d_nv * o.sigma("spin1", "z")
        + wp * (ap.dag() @ ap)
        + wm * (am.dag() @ am)
        + g_r * (sp @ am + sm @ am.dag())
        + g_cr * (sp @ am.dag() + sm @ am)
        + g_rp * (sp @ ap + sm @ ap.dag())
        + g_crp * (sp @ ap.dag() + sm @ ap)
    )
    return _finish(h, "H_CMP")


def build_h_jc(scales: DerivedScales, space: SpaceDescriptor) -> Operator:
    space.require_layout(LAYOUTS["jc"])
    d_nv, wm, g_r = scales.require("Delta_nv", "omega_minus", "g_r")
    o = _Ops(space)
    am = o.boson("lp")
    h = 0.5 * d_nv * o.sigma("spin1", "z") + wm * (am.dag() @ am) + _spin_cavity(o, g_r, "spin1", "lp")
    return _finish(h, "H_JC")


def build_h_tc(scales: DerivedScales, space: SpaceDescriptor) -> Operator:
    space.require_layout(LAYOUTS["tc"])
    d_nv, wm, g_r = scales.require("Delta_nv", "omega_minus", "g_r")
    o = _Ops(space)
    am = o.boson("lp")
    h = (
        wm * (am.dag() @ am)
        + 0.5 * d_nv * (o.sigma("spin1", "z") + o.sigma("spin2", "z"))
        + _spin_cavity(o, g_r, "spin1", "lp")
        + _spin_cavity(o, g_r, "spin2", "lp")
    )
    return _finish(h, "H_TC")


def build_h_eff(scales: DerivedScales, space: SpaceDescriptor) -> Operator:
    """Two spins exchanging excitations through the eliminated LP."""
    space.require_layout(LAYOUTS["eff"])
    w_eff, g_eff = scales.require("omega_eff", "g_eff")
    o = _Ops(space)
    s1p, s1m = o.sigma("spin1", "plus"), o.sigma("spin1", "minus")
    s2p, s2m = o.sigma("spin2", "plus"), o.sigma("spin2", "minus")
    h = 0.5 * w_eff * (o.sigma("spin1", "z") + o.sigma("spin2", "z")) + g_eff * (s1p @ s2m + s1m @ s2p)
    return _finish(h, "H_eff")


BUILDERS = {
    "lin": build_h_lin,
    "s": build_h_s,
    "cms": build_h_cms,
    "cmp": build_h_cmp,
    "jc": build_h_jc,
    "tc": build_h_tc,
    "eff": build_h_eff,
}
