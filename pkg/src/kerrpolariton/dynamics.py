"""Unitary and Lindblad time evolution.

The master equation is

    d rho / dt = -i [H, rho] + sum_k rate_k D[o_k] rho,
    D[o] rho = o rho o^dag - 1/2 (o^dag o rho + rho o^dag o),

with rates entering as plain prefactors. Density matrices are integrated
directly as matrices with an embedded Dormand-Prince 5(4) pair, in a
dimensionless time measured in units of the inverse largest model frequency.
For long, time-independent runs where resolving the fastest phase with a
step integrator is too costly, ``method="propagator"`` applies the exact
one-step propagator ``expm(L dt)`` of the vectorized generator on the grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import IntegrationError, LayoutError, PositivityError, SpaceMismatchError, ValidationError
from .quantum import Operator, QuantumState, SpaceDescriptor, annihilation, embed, identity, pauli

log = logging.getLogger(__name__)

__all__ = [
    "LindbladModel",
    "EvolutionResult",
    "liouvillian_apply",
    "liouvillian_superoperator",
    "evolve",
    "evolve_unitary",
    "standard_observables",
]


@dataclass(frozen=True, eq=False)
class LindbladModel:
    hamiltonian: Operator
    collapses: tuple[tuple[Operator, float], ...] = ()

    def __post_init__(self):
        cols = tuple((op, float(rate)) for op, rate in self.collapses)
        for op, rate in cols:
            if op.space.factors != self.hamiltonian.space.factors:
                raise SpaceMismatchError("collapse operator lives on a different space")
            if rate < 0 or not math.isfinite(rate):
                raise ValidationError(f"collapse rate must be finite and nonnegative, got {rate}")
        object.__setattr__(self, "collapses", cols)

    @property
    def space(self) -> SpaceDescriptor:
        return self.hamiltonian.space

    def frequency_scale(self) -> float:
        """Largest frequency in the generator, used as the integration time unit."""
        w = self.hamiltonian.norm()
        for op, rate in self.collapses:
            w = max(w, rate * op.norm() ** 2)
        return w if w > 0 else 1.0


def _rhs_factory(model: LindbladModel, scale: float = 1.0):
    H = model.hamiltonian.matrix / scale
    ops = [(np.sqrt(rate / scale) * op.matrix) for op, rate in model.collapses if rate > 0]
    Ls = [(L, L.conj().T, L.conj().T @ L) for L in ops]
    # Non-Hermitian effective Hamiltonian absorbs the anticommutator part.
    Heff = H - 0.5j * sum((ldl for _, _, ldl in Ls), np.zeros_like(H))

    def rhs(rho: np.ndarray) -> np.ndarray:
        out = -1j * (Heff @ rho - rho @ Heff.conj().T)
        for L, Ld, _ in Ls:
            out += L @ rho @ Ld
        return out

    return rhs


def liouvillian_apply(model: LindbladModel, rho: QuantumState | np.ndarray) -> np.ndarray:
    """``d rho / dt`` for the given state."""
    if isinstance(rho, QuantumState):
        if rho.space.factors != model.space.factors:
            raise SpaceMismatchError(f"{rho.space.factors} vs {model.space.factors}")
        r = rho.density()
    else:
        r = np.asarray(rho, dtype=complex)
        if r.shape != (model.space.dim,) * 2:
            raise SpaceMismatchError(f"density matrix shape {r.shape} does not match the model")
    return _rhs_factory(model)(r)


def liouvillian_superoperator(model: LindbladModel) -> np.ndarray:
    """Generator acting on the column-stacked ``vec(rho)``."""
    n = model.space.dim
    eye = np.eye(n)
    H = model.hamiltonian.matrix
    S = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for op, rate in model.collapses:
        L = op.matrix
        LdL = L.conj().T @ L
        S += rate * (np.kron(L.conj(), L) - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron(LdL.T, eye))
    return S


@dataclass
class EvolutionResult:
    """Observable time series on the requested grid (times in seconds)."""

    times: np.ndarray
    observables: dict[str, np.ndarray]
    diagnostics: dict[str, object] = field(default_factory=dict)
    final_state: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        for k, v in self.observables.items():
            v = np.asarray(v, dtype=float)
            if v.shape != self.times.shape:
                raise ValidationError(f"observable {k!r} has {v.shape} points for {self.times.shape} times")
            self.observables[k] = v

    def __getitem__(self, name: str) -> np.ndarray:
        return self.observables[name]


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (  # fifth minus fourth order weights
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


def _dopri_step(f, y, k1, h):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks) if a)
        ks.append(f(yi))
    # stage 7 is evaluated at the propagated solution (FSAL)
    y_new = y + h * sum(b * k for b, k in zip(_B, ks) if b)
    err = h * sum(e * k for e, k in zip(_E, ks) if e)
    return y_new, err, ks[-1]


def _expectations(ops: Mapping[str, np.ndarray], rho: np.ndarray) -> dict[str, float]:
    # tr(O rho) with O Hermitian: sum of O^T * rho elementwise
    return {k: float(np.real(np.sum(m.T * rho))) for k, m in ops.items()}


def _prepare(model_space: SpaceDescriptor, observables) -> dict[str, np.ndarray]:
    if observables is None:
        observables = standard_observables(model_space)
    out = {}
    for k, op in observables.items():
        if op.space.factors != model_space.factors:
            raise SpaceMismatchError(f"observable {k!r} lives on a different space")
        out[k] = op.matrix
    return out


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 1 or np.any(np.diff(t) <= 0):
        raise ValidationError("time grid must be a strictly increasing 1-D sequence")
    return t


def evolve(
    model: LindbladModel,
    rho0: QuantumState,
    t_grid: Sequence[float],
    observables: Mapping[str, Operator] | None = None,
    *,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    method: str = "dopri5",
    max_halvings: int = 40,
    trace_tol: float = 1e-8,
    positivity_tol: float = 1e-6,
    max_steps: int = 5_000_000,
) -> EvolutionResult:
    """Integrate the master equation from ``rho0`` and sample observables on ``t_grid``.

    ``rho0`` may be pure; it is promoted to a density matrix. Diagnostics hold
    the per-output trace deviation and minimum eigenvalue, the worst values
    seen over all accepted steps, the step count and an accumulated bound on
    the trace-norm integration error (``error_estimate``).
    """
    if rho0.space.factors != model.space.factors:
        raise SpaceMismatchError(f"{rho0.space.factors} vs {model.space.factors}")
    rho0.validate()
    t = _check_grid(t_grid)
    obs = _prepare(model.space, observables)
    rho = rho0.density().astype(complex)
    if method == "dopri5":
        return _evolve_dopri(model, rho, t, obs, rtol, atol, max_halvings, trace_tol, positivity_tol, max_steps)
    if method == "propagator":
        return _evolve_propagator(model, rho, t, obs, trace_tol, positivity_tol)
    raise ValidationError(f"unknown evolution method {method!r}")


def _state_checks(rho, trace_tol, positivity_tol, where):
    tr_dev = abs(np.trace(rho) - 1.0)
    lo = float(np.linalg.eigvalsh(rho).min())
    if lo < -positivity_tol:
        raise PositivityError(f"density matrix eigenvalue {lo:.3e} at {where}")
    if tr_dev > trace_tol:
        raise IntegrationError(f"trace drifted by {tr_dev:.3e} at {where}")
    return tr_dev, lo


def _evolve_dopri(model, rho, t, obs, rtol, atol, max_halvings, trace_tol, positivity_tol, max_steps):
    scale = model.frequency_scale()
    f = _rhs_factory(model, scale)
    tau = (t - t[0]) * scale
    n = model.space.dim

    series = {k: np.empty(len(t)) for k in obs}
    tr_out = np.empty(len(t))
    eig_out = np.empty(len(t))

    def record(i, r):
        for k, v in _expectations(obs, r).items():
            series[k][i] = v
        tr_out[i] = abs(np.trace(r) - 1.0)
        eig_out[i] = np.linalg.eigvalsh(r).min()

    record(0, rho)
    k1 = f(rho)
    h = min(0.1, tau[-1] - tau[0]) if len(tau) > 1 else 0.1
    steps = rejected = 0
    err_bound = 0.0
    worst_trace = tr_out[0]
    worst_eig = eig_out[0]
    now = 0.0
    for i in range(1, len(t)):
        target = tau[i]
        while now < target:
            if steps >= max_steps:
                raise IntegrationError(f"step budget {max_steps} exhausted at t = {now / scale:.3e} s")
            last = target - now <= h * (1 + 1e-12)
            hh = target - now if last else h
            halvings = 0
            while True:
                y_new, err, k7 = _dopri_step(f, rho, k1, hh)
                sc = atol + rtol * np.maximum(np.abs(rho), np.abs(y_new))
                enorm = float(np.max(np.abs(err) / sc))
                if enorm <= 1.0:
                    break
                rejected += 1
                halvings += 1
                if halvings > max_halvings:
                    raise IntegrationError(
                        f"error control failed after {max_halvings} step reductions at t = {now / scale:.3e} s"
                    )
                hh *= max(0.2, 0.9 * enorm ** -0.2)
                last = False
            now = target if last else now + hh
            rho = 0.5 * (y_new + y_new.conj().T)
            k1 = k7 if np.allclose(rho, y_new, rtol=0, atol=1e-15) else f(rho)
            err_bound += math.sqrt(n) * float(np.linalg.norm(err))
            steps += 1
            tr, lo = _state_checks(rho, trace_tol, positivity_tol, f"t = {now / scale:.3e} s")
            worst_trace = max(worst_trace, tr)
            worst_eig = min(worst_eig, lo)
            grow = 5.0 if enorm == 0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
            if not last or hh >= h:
                h = hh * grow
        record(i, rho)

    log.debug("dopri5: %d steps, %d rejected", steps, rejected)
    return EvolutionResult(
        times=t,
        observables=series,
        diagnostics={
            "method": "dopri5",
            "rtol": rtol,
            "atol": atol,
            "time_unit_s": 1.0 / scale,
            "steps": steps,
            "rejected": rejected,
            "trace_deviation": tr_out,
            "min_eigenvalue": eig_out,
            "max_trace_deviation": float(worst_trace),
            "min_eigenvalue_overall": float(worst_eig),
            "error_estimate": err_bound,
        },
        final_state=rho,
    )


def _evolve_propagator(model, rho, t, obs, trace_tol, positivity_tol):
    n = model.space.dim
    S = liouvillian_superoperator(model)
    series = {k: np.empty(len(t)) for k in obs}
    tr_out = np.empty(len(t))
    eig_out = np.empty(len(t))
    cache: dict[float, np.ndarray] = {}
    v = rho.reshape(-1, order="F")
    for i in range(len(t)):
        if i:
            dt = float(t[i] - t[i - 1])
            key = round(dt, 15 - int(math.floor(math.log10(dt))))
            P = cache.get(key)
            if P is None:
                P = cache[key] = expm(S * dt)
            v = P @ v
            r = v.reshape(n, n, order="F")
            r = 0.5 * (r + r.conj().T)
            v = r.reshape(-1, order="F")
        r = v.reshape(n, n, order="F")
        tr_out[i], eig_out[i] = _state_checks(r, trace_tol, positivity_tol, f"t = {t[i]:.3e} s")
        for k, val in _expectations(obs, r).items():
            series[k][i] = val
    return EvolutionResult(
        times=t,
        observables=series,
        diagnostics={
            "method": "propagator",
            "steps": len(t) - 1,
            "distinct_propagators": len(cache),
            "trace_deviation": tr_out,
            "min_eigenvalue": eig_out,
            "max_trace_deviation": float(tr_out.max()),
            "min_eigenvalue_overall": float(eig_out.min()),
            "error_estimate": 0.0,
        },
        final_state=v.reshape(n, n, order="F"),
    )


def evolve_unitary(
    H: Operator,
    psi0: QuantumState,
    t_grid: Sequence[float],
    observables: Mapping[str, Operator] | None = None,
) -> EvolutionResult:
    """Closed evolution ``psi(t) = exp(-i H t) psi0`` through the eigenbasis of ``H``."""
    if not H.is_hermitian(1e-12):
        raise ValidationError("unitary evolution needs a Hermitian Hamiltonian")
    if not psi0.is_pure:
        raise ValidationError("evolve_unitary takes a pure state")
    if psi0.space.factors != H.space.factors:
        raise SpaceMismatchError(f"{psi0.space.factors} vs {H.space.factors}")
    psi0.validate()
    t = _check_grid(t_grid)
    obs = _prepare(H.space, observables)
    E, V = np.linalg.eigh(H.matrix)
    c0 = V.conj().T @ psi0.data
    # psi(t) for all t at once: columns are time points
    psi = V @ (np.exp(-1j * np.outer(E, t - t[0])) * c0[:, None])
    series = {k: np.real(np.einsum("it,ij,jt->t", psi.conj(), m, psi)) for k, m in obs.items()}
    norms = np.linalg.norm(psi, axis=0)
    return EvolutionResult(
        times=t,
        observables=series,
        diagnostics={
            "method": "eigh",
            "norm_deviation": np.abs(norms - 1.0),
            "max_norm_deviation": float(np.abs(norms - 1.0).max()),
        },
        final_state=psi[:, -1],
    )


def standard_observables(space: SpaceDescriptor) -> dict[str, Operator]:
    """Occupations of every labelled factor plus ``top_fock_population``.

    Spin factors give ``<sigma_+ sigma_->``, boson factors ``<a^dag a>``.
    ``top_fock_population`` projects onto states with any boson in its top
    truncation level.
    """
    if space.labels is None:
        raise LayoutError("standard observables need a labelled space")
    out = {}
    none_at_top = identity(space)
    has_boson = False
    for slot, (label, dim) in enumerate(zip(space.labels, space.factors)):
        if label.startswith("spin"):
            sp = pauli("plus").matrix
            out[f"{label}_occupation"] = embed(sp @ sp.conj().T, slot, space)
        else:
            has_boson = True
            a = annihilation(dim).matrix
            out[f"{label}_occupation"] = embed(a.conj().T @ a, slot, space)
            below = np.eye(dim)
            below[-1, -1] = 0.0
            none_at_top = none_at_top @ embed(below, slot, space)
    if has_boson:
        out["top_fock_population"] = identity(space) - none_at_top
    return out
