"""``kerrpolariton`` command line.

Exit codes: 0 success, 1 invalid input (bad config, unknown subcommand or
scenario), 2 numerical failure (unstable polariton, integrator tolerance).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .config import ALL_KINDS, Config, build_config, parse_set, parse_value, read_config_file
from .dynamics import LindbladModel, evolve, evolve_unitary
from .errors import NumericalError, UnstablePolaritonError, ValidationError
from .experiments import (
    SCENARIOS,
    SweepTable,
    evolution_table,
    provenance,
    run_cmp_vs_jc,
    run_derive,
    run_fig1c,
    run_fig2a,
    run_fig2b,
    run_fig3,
    run_fig4,
)
from .hamiltonians import BUILDERS, make_space
from .model import ANGULAR, DerivedScales, derive
from .params import TWO_PI
from .quantum import QUBIT_EXCITED, QUBIT_GROUND, annihilation, embed, pauli, product_ket

EVOLVE_MODELS = ("jc", "tc", "eff", "cmp")
_UNIT_SUFFIX = {"freq": "hz", "length": "m", "field": "t", "inductance": "h", "time": "s"}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for numerical failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat key = value config file")
    p.add_argument("--out", metavar="DIR", help="output directory (default: out)")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="sets",
                   help="override one config key; repeatable")
    p.add_argument("--tol", type=float, metavar="RTOL", help="integrator relative tolerance (atol = RTOL/100)")
    p.add_argument("--dim", type=int, metavar="N", help="LP truncation dimension")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kerrpolariton", description="Kerr-magnon polariton reduction chain and dynamics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("derive", help="evaluate the derived scales and print them as JSON")
    _common(p)

    p = sub.add_parser("reproduce", help="run one figure scenario and write its data file")
    p.add_argument("scenario", metavar="FIG_ID", help=", ".join(SCENARIOS))
    _common(p)

    p = sub.add_parser("sweep", help="sweep one input and tabulate derived quantities")
    p.add_argument("--axis", required=True, help="any physical, calibration or derived-override key")
    p.add_argument("--from", dest="start", required=True, help="first value, with units")
    p.add_argument("--to", dest="stop", required=True, help="last value, with units")
    p.add_argument("--num", type=int, default=51)
    p.add_argument("--log", action="store_true", help="geometric spacing")
    p.add_argument("--quantities", default="", help="comma-separated derived names (default: all)")
    _common(p)

    p = sub.add_parser("evolve", help="evolve a model built from the derived scales")
    _common(p)

    p = sub.add_parser("selftest", help="run the invariant checks")
    return parser


def _load(args) -> Config:
    raw = read_config_file(args.config) if getattr(args, "config", None) else {}
    raw.update(parse_set(getattr(args, "sets", [])))
    if getattr(args, "out", None):
        raw["out_dir"] = args.out
    if getattr(args, "tol", None) is not None:
        if not args.tol > 0:
            raise ValidationError("--tol must be positive")
        raw["rtol"] = repr(args.tol)
        raw["atol"] = repr(args.tol * 1e-2)
    if getattr(args, "dim", None) is not None:
        raw["lp_dim"] = str(args.dim)
    cfg = build_config(raw)
    if cfg.defaulted:
        print(f"notice: nominal defaults used for {', '.join(cfg.defaulted)}", file=sys.stderr)
    return cfg


def _write_text(path: str, text: str) -> str:
    tmp = f"{path}.tmp-{os.getpid()}"
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def _settings_with(cfg: Config, **defaults):
    s = dict(cfg.settings)
    for k, v in defaults.items():
        if s.get(k) is None:
            s[k] = v
    return s


# -- subcommands --------------------------------------------------------------

def cmd_derive(args) -> int:
    cfg = _load(args)
    report = derive(cfg.params, cfg.overrides)
    out = report.to_dict()
    out["provenance"] = provenance("derive", **cfg.provenance())
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0 if report.lp_stable else 2


def _reproduce_table(sid: str, cfg: Config):
    s = cfg.settings
    prov = cfg.provenance()
    if sid in ("fig1c", "fig2a"):
        grid = np.linspace(s["R_min"], s["R_max"], s["R_num"])
        t = run_fig1c(grid, cfg.params.coupling) if sid == "fig1c" else run_fig2a(grid, calibration=cfg.params.coupling)
        t.provenance.update(prov)
        return t
    if sid == "fig2b":
        t = run_fig2b(Delta_c=s["fig2b_Delta_c"], Delta_s=s["fig2b_Delta_s"])
        t.provenance.update(prov)
        return t
    if sid in ("fig3a", "fig3b"):
        s = _settings_with(cfg, periods=3.0, lp_dim=10)
        res = run_fig3(
            sid == "fig3b", params=cfg.params, overrides=cfg.overrides, periods=s["periods"],
            points_per_period=s["points_per_period"], lp_dim=s["lp_dim"], rtol=s["rtol"], atol=s["atol"],
        )
        return evolution_table(res, sid, res.diagnostics["time_unit_g_r"], "t_g_r", **prov)
    if sid in ("fig4a", "fig4b"):
        s = _settings_with(cfg, periods=2.0)
        res = run_fig4(
            sid == "fig4b", params=cfg.params, overrides=cfg.overrides, periods=s["periods"],
            points_per_period=s["points_per_period"], lp_dim=s["lp_dim"],
        )
        return evolution_table(res, sid, res.diagnostics["time_unit_g_eff"], "t_g_eff", **prov)
    if sid == "cmp_vs_jc":
        s = _settings_with(cfg, lp_dim=20)
        r = run_cmp_vs_jc(
            s["ratio"], Delta_c=s["cmp_Delta_c"], Delta_s=s["cmp_Delta_s"], lam=s["cmp_lambda"],
            lp_dim=s["lp_dim"], hp_dim=s["hp_dim"], points_per_period=s["points_per_period"],
        )
        cols = {
            "t_s": r.full.times,
            "t_g_r": r.full.times * abs(r.scales.g_r),
            "spin1_full": r.full["spin1_occupation"],
            "spin1_jc": r.jc["spin1_occupation"],
            "lp_full": r.full["lp_occupation"],
            "lp_jc": r.jc["lp_occupation"],
            "hp_full": r.full["hp_occupation"],
        }
        return SweepTable("t_s", cols, provenance(
            sid, max_deviation=r.max_deviation, hp_max=r.hp_max, scales=r.scales.to_dict(), **prov
        ))
    raise AssertionError(sid)


def cmd_reproduce(args) -> int:
    sid = args.scenario
    if sid not in SCENARIOS:
        print(f"unknown scenario {sid!r}; choose from {', '.join(SCENARIOS)}", file=sys.stderr)
        build_parser().print_usage(sys.stderr)
        return 1
    cfg = _load(args)
    out_dir = cfg.settings["out_dir"]
    if sid == "derive":
        report = run_derive(cfg.params, cfg.overrides)
        out = report.to_dict()
        out["provenance"] = provenance("derive", **cfg.provenance())
        path = _write_text(os.path.join(out_dir, "derive.json"), json.dumps(out, indent=2, sort_keys=True) + "\n")
        print(path)
        return 0 if report.lp_stable else 2
    path = _reproduce_table(sid, cfg).write(os.path.join(out_dir, f"{sid}.csv"))
    print(path)
    return 0


def _column_name(key: str) -> str:
    kind = ALL_KINDS[key].rstrip("?")
    if kind == "freq":
        return f"{key}_over_2pi_hz"
    return f"{key}_{_UNIT_SUFFIX[kind]}" if kind in _UNIT_SUFFIX else key


def _display(key: str, value: float) -> float:
    return value / TWO_PI if ALL_KINDS[key].rstrip("?") == "freq" else value


def cmd_sweep(args) -> int:
    cfg = _load(args)
    axis = args.axis
    if axis not in ALL_KINDS or ALL_KINDS[axis].rstrip("?") in ("str", "bool", "int"):
        raise ValidationError(f"cannot sweep {axis!r}")
    if args.num < 2:
        raise ValidationError("--num must be at least 2")
    lo, hi = parse_value(axis, args.start), parse_value(axis, args.stop)
    if lo is None or hi is None:
        raise ValidationError("sweep endpoints must be numbers")
    if args.log:
        if lo <= 0 or hi <= 0:
            raise ValidationError("--log needs positive endpoints")
        values = np.geomspace(lo, hi, args.num)
    else:
        values = np.linspace(lo, hi, args.num)

    names = DerivedScales.field_names()
    wanted = [q.strip() for q in args.quantities.split(",") if q.strip()] or names
    bad = [q for q in wanted if q not in names]
    if bad:
        raise ValidationError(f"unknown derived quantities {bad}")

    kind = ALL_KINDS[axis].rstrip("?")
    unit = {"freq": "hz", "length": "m", "field": "t", "inductance": "h"}.get(kind, "")
    cols = {q: np.empty(len(values)) for q in wanted}
    stable = np.empty(len(values))
    for i, v in enumerate(values):
        raw = dict(cfg.raw)
        raw[axis] = f"{float(_display(axis, v))!r}{unit}"
        point = build_config(raw)
        try:
            report = derive(point.params, point.overrides)
            ok = report.lp_stable
            sc = report.scales
        except NumericalError:
            ok, sc = False, None
        stable[i] = float(ok)
        for q in wanted:
            cols[q][i] = sc.get(q) if (ok and sc is not None) else math.nan

    table_cols = {_column_name(axis): np.array([_display(axis, v) for v in values])}
    for q in wanted:
        table_cols[f"{q}_over_2pi_hz" if q in ANGULAR else q] = cols[q] / (TWO_PI if q in ANGULAR else 1.0)
    table_cols["stable"] = stable
    table = SweepTable(
        _column_name(axis), table_cols,
        provenance("sweep", axis=axis, start=args.start, stop=args.stop, num=args.num, log=args.log,
                   **cfg.provenance()),
        unstable_column="stable",
    )
    path = table.write(os.path.join(cfg.settings["out_dir"], f"sweep_{axis}.csv"))
    print(path)
    if not stable.all():
        print(f"note: {int((stable == 0).sum())} of {len(stable)} points have an unstable LP (flagged in 'stable')", file=sys.stderr)
    return 0


def _initial_levels(space, spec: str) -> tuple[int, ...]:
    default = [QUBIT_EXCITED if i == 0 else (QUBIT_GROUND if lab.startswith("spin") else 0)
               for i, lab in enumerate(space.labels)]
    if not spec:
        return tuple(default)
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) != len(space.labels):
        raise ValidationError(f"initial needs {len(space.labels)} entries for layout {space.labels}")
    levels = []
    for lab, dim, p in zip(space.labels, space.factors, parts):
        if lab.startswith("spin"):
            if p not in ("e", "g"):
                raise ValidationError(f"spin level must be e or g, got {p!r}")
            levels.append(QUBIT_EXCITED if p == "e" else QUBIT_GROUND)
        else:
            if not p.isdigit():
                raise ValidationError(f"Fock level must be a nonnegative integer, got {p!r}")
            n = int(p)
            if not n < dim:
                raise ValidationError(f"Fock level {n} outside truncation {dim}")
            levels.append(n)
    return tuple(levels)


def cmd_evolve(args) -> int:
    cfg = _load(args)
    s = _settings_with(cfg, periods=3.0)
    kind = s["model"]
    if kind not in EVOLVE_MODELS:
        raise ValidationError(f"model must be one of {EVOLVE_MODELS}, got {kind!r}")
    report = derive(cfg.params, cfg.overrides)
    if not report.lp_stable:
        raise UnstablePolaritonError("the lower polariton is unstable for this configuration")
    sc = report.scales
    lp_dim = s["lp_dim"] or (20 if kind == "cmp" else 10)
    dims = {"jc": (lp_dim,), "tc": (lp_dim,), "eff": (), "cmp": (lp_dim, s["hp_dim"])}[kind]
    space = make_space(kind, *dims)
    H = BUILDERS[kind](sc, space)

    rate = sc.require("g_eff")[0] if kind in ("tc", "eff") else sc.require("g_r")[0]
    period = math.pi / abs(rate)
    t_final = s["t_final"] or s["periods"] * period
    n = max(2, int(math.ceil(t_final / period * s["points_per_period"])))
    t = np.linspace(0.0, t_final, n + 1)
    psi0 = product_ket(space, _initial_levels(space, s["initial"]))

    if s["dissipative"]:
        p = cfg.params
        ops = []
        for slot, lab in enumerate(space.labels):
            if lab.startswith("spin"):
                ops.append((embed(pauli("minus"), slot, space), p.gamma_perp))
            elif lab == "lp":
                ops.append((embed(annihilation(space.factors[slot]), slot, space), p.kappa_minus))
        model = LindbladModel(H, tuple(ops))
        method = s["method"]
        if method == "auto":
            method = "dopri5" if model.frequency_scale() * t_final < 1e5 else "propagator"
        res = evolve(model, psi0, t, method=method, rtol=s["rtol"], atol=s["atol"])
    else:
        res = evolve_unitary(H, psi0, t)
    table = evolution_table(res, f"evolve_{kind}", period / 2, "t_over_half_period",
                            model=kind, scales=sc.to_dict(), **cfg.provenance())
    path = table.write(os.path.join(cfg.settings["out_dir"], f"evolve_{kind}.csv"))
    print(path)
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_all

    results = run_all()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
    failed = sum(not ok for _, ok, _ in results)
    print(f"{len(results) - failed}/{len(results)} invariants passed")
    return 0 if not failed else 2


COMMANDS = {
    "derive": cmd_derive,
    "reproduce": cmd_reproduce,
    "sweep": cmd_sweep,
    "evolve": cmd_evolve,
    "selftest": cmd_selftest,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ZeroDivisionError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
