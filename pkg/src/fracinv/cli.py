"""Command-line interface: ``fracinv {analyze,simulate,audit,ml,field}``.

Exit codes: 0 success, 2 input error, 3 numerical blow-up (partial output
is still written).
"""

from __future__ import annotations

import argparse
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .audit import (
    curve_invariance_check,
    line_distance,
    restart_divergence,
    stable_manifold_audit,
    subspace_invariance_check,
)
from .curves import CurveCandidate, CurveKind
from .detect import analyze
from .fractional import FractionalSystem, ScalarLinear, STABLE_MANIFOLD_EXACT, fam_solve, rk4_solve
from .io import (
    SystemFileError,
    atomic_write,
    config_hash,
    dump_system,
    load_system,
    write_csv,
    write_json,
)
from .mittag_leffler import MLDomainError, ml

EXIT_OK, EXIT_INPUT, EXIT_BLOWUP = 0, 2, 3
FORMATS = {"json", "csv", "svg"}
PRESETS = ("semigroup", "subspace", "curve", "cong")


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def _formats(text: str) -> set:
    out = {f.strip() for f in text.split(",") if f.strip()}
    bad = out - FORMATS
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s): {', '.join(sorted(bad))}")
    return out


def _positive(text: str) -> float:
    v = _number(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text} must be positive")
    return v


def _alpha(text: str) -> float:
    v = _number(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"alpha = {text} must lie in (0, 1]")
    return v


def _number(text: str) -> float:
    """Float, rational ``p/q`` or power of two written ``2^-k``."""
    t = text.strip()
    m = re.fullmatch(r"2\^(-?\d+)", t)
    try:
        if m:
            return 2.0 ** int(m.group(1))
        return float(Fraction(t)) if "/" in t else float(t)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text}") from None


def _pair(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated numbers")
    return tuple(_number(p) for p in parts)


def _grid(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 5:
        raise argparse.ArgumentTypeError("grid is xmin,xmax,ymin,ymax,steps")
    *box, steps = parts
    return tuple(_number(p) for p in box), int(steps)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("fracinv-out"), help="output directory")
    common.add_argument("--format", type=_formats, default={"json", "csv", "svg"},
                        help="comma-separated subset of json,csv,svg")

    p = argparse.ArgumentParser(prog="fracinv", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fracinv {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="detect invariant curves")
    a.add_argument("--system", required=True, help="system JSON file or corpus name")
    a.add_argument("--grid", type=_grid, default=None, help="plot window xmin,xmax,ymin,ymax,steps")

    s = sub.add_parser("simulate", parents=[common], help="integrate a (fractional) system")
    s.add_argument("--system", help="system JSON file or corpus name")
    s.add_argument("--lam", type=_number, help="scalar system D^alpha x = -lam x (instead of --system)")
    s.add_argument("--alpha", type=_alpha)
    s.add_argument("--h", type=_positive, default=2.0**-8)
    s.add_argument("--T", type=_positive, default=1.0)
    s.add_argument("--x0", help="initial state, e.g. 0.1,0.3 (scalar: 1)")
    s.add_argument("--method", choices=("auto", "fam", "rk4"), default="auto",
                   help="auto: rk4 at alpha=1, fam otherwise")

    u = sub.add_parser("audit", parents=[common], help="run an invariance experiment")
    u.add_argument("--preset", required=True, help="|".join(PRESETS))
    u.add_argument("--system")
    u.add_argument("--alpha", type=_alpha)
    u.add_argument("--h", type=_positive)
    u.add_argument("--T", type=_positive)
    u.add_argument("--tstar", type=_positive, default=0.3)
    u.add_argument("--x0", type=_pair)
    u.add_argument("--c2", type=_number)

    m = sub.add_parser("ml", parents=[common], help="evaluate a Mittag-Leffler function")
    m.add_argument("--alpha", type=_positive, required=True)
    m.add_argument("--beta", type=_positive, default=1.0)
    m.add_argument("--z", required=True, help="real or complex argument, e.g. -1 or 1+2j")
    m.add_argument("--method", choices=("auto", "series", "contour"), default="auto")

    f = sub.add_parser("field", parents=[common], help="vector-field samples and plot")
    f.add_argument("--system", required=True)
    f.add_argument("--grid", type=_grid, default=((-2.0, 2.0, -2.0, 2.0), 21))
    f.add_argument("--no-overlay", action="store_true", help="omit detected invariant curves")
    return p


# ---------------------------------------------------------------------------
# helpers


def _stem(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "", name.replace("*", "star")) or "system"


def _load(source):
    try:
        return load_system(source)
    except FileNotFoundError as err:
        raise InputError(str(err)) from None


def _sidecar(out: Path, stem: str, config: dict):
    cfg = {k: (sorted(v) if isinstance(v, set) else str(v) if isinstance(v, Path) else v)
           for k, v in config.items()}
    write_json(out / f"{stem}.config.json", {"config": cfg, "config_hash": config_hash(cfg)})


def _parse_x0(text, dim):
    try:
        vals = tuple(_number(v) for v in text.split(","))
    except argparse.ArgumentTypeError as err:
        raise InputError(str(err)) from None
    if len(vals) != dim:
        raise InputError(f"--x0 needs {dim} component(s)")
    return vals


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> int:
    spec = _load(args.system)
    rep = analyze(spec.field, spec.reference_curves)
    stem = _stem(spec.name or Path(str(args.system)).stem)
    out = args.out
    text = [f"system {spec.name}: x' = {spec.field.P}, y' = {spec.field.Q}",
            f"classification: {rep.classification}", rep.summary()]
    if rep.diagnostics:
        text += ["notes:"] + [f"  {d}" for d in rep.diagnostics]
    summary = "\n".join(text)
    print(summary)
    atomic_write(out / f"{stem}-summary.txt", summary + "\n")
    if "json" in args.format:
        write_json(out / f"{stem}-report.json", {"system": dump_system(spec), **rep.to_dict()})
    if "svg" in args.format:
        from .plotting import plot_field

        box, steps = args.grid or ((-3.0, 3.0, -3.0, 3.0), 21)
        plot_field(spec.field, box, steps, out / f"{stem}-field.svg", rep, title=spec.name)
    _sidecar(out, f"{stem}-analyze", {"command": "analyze", "system": dump_system(spec),
                                       "format": args.format})
    return EXIT_OK


def cmd_simulate(args) -> int:
    if (args.system is None) == (args.lam is None):
        raise InputError("give exactly one of --system and --lam")
    if args.system is not None:
        spec = _load(args.system)
        x0 = _parse_x0(args.x0, 2) if args.x0 else None
        try:
            system = FractionalSystem.from_spec(spec, args.alpha, x0, prefer_matrix=False)
        except ValueError as err:
            raise InputError(str(err)) from None
        stem = _stem(spec.name or Path(args.system).stem)
        sysdesc = dump_system(spec)
    else:
        if args.alpha is None:
            raise InputError("--alpha is required for a scalar system")
        x0 = _parse_x0(args.x0, 1) if args.x0 else (1.0,)
        system = FractionalSystem(args.alpha, ScalarLinear(args.lam), x0, "scalar")
        stem = "scalar"
        sysdesc = {"scalar": {"lam": args.lam}}
    method = args.method
    if method == "auto":
        method = "rk4" if system.alpha == 1.0 else "fam"
    if method == "rk4" and system.alpha != 1.0:
        raise InputError("rk4 is the classical integrator; it needs alpha = 1")
    tr = (rk4_solve if method == "rk4" else fam_solve)(system, args.h, args.T)
    out = args.out
    if "csv" in args.format:
        tr.to_csv(out / f"{stem}-trajectory.csv")
    if "svg" in args.format:
        from .plotting import plot_trajectory

        plot_trajectory(tr, out / f"{stem}-trajectory.svg",
                        title=f"{system.label}, alpha = {system.alpha:g}, {method}")
    cfg = {"command": "simulate", "system": sysdesc, "alpha": system.alpha, "h": args.h,
           "T": args.T, "x0": list(system.x0), "method": method}
    if "json" in args.format:
        write_json(out / f"{stem}-simulate.json",
                   {**cfg, "steps": len(tr.t) - 1, "final_state": tr.states[-1].tolist(),
                    "blowup": tr.blowup, "message": tr.message, "config_hash": config_hash(cfg)})
    _sidecar(out, f"{stem}-simulate", cfg)
    print(f"{method}: {len(tr.t) - 1} steps, final state {tr.states[-1].tolist()}")
    if tr.blowup:
        print(f"blow-up: {tr.message}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


def _first_line_through(report, x0):
    for c in report.candidates:
        if c.is_line and not c.is_family and line_distance(c, [x0])[0] < 1e-12:
            return c
    return None


def _first_curve_through(report, x0):
    for c in report.candidates:
        g = c.implicit()
        if g is not None and not c.is_line and abs(g.evaluate_float(*x0)) < 1e-12:
            return c
    return None


def cmd_audit(args) -> int:
    preset = args.preset
    if preset not in PRESETS:
        raise InputError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    if preset == "cong":
        c2 = 1e-10 if args.c2 is None else args.c2
        res = stable_manifold_audit(c2, args.T or 20.0)
    else:
        default = {"semigroup": "4.44", "subspace": "4.4*", "curve": "4.7.1"}[preset]
        spec = _load(args.system or default)
        x0 = args.x0
        if preset == "curve" and x0 is None and spec.x0 is None:
            c2 = 0.1 if args.c2 is None else args.c2
            x0 = (-STABLE_MANIFOLD_EXACT * c2 * c2, c2)
        try:
            system = FractionalSystem.from_spec(spec, args.alpha, x0, prefer_matrix=(preset == "semigroup"))
        except ValueError as err:
            raise InputError(str(err)) from None
        if preset == "semigroup":
            res = restart_divergence(system, args.tstar, args.T or 1.0, args.h or 2.0**-9)
        elif preset == "subspace":
            line = _first_line_through(analyze(spec.field), system.x0)
            if line is None:
                raise InputError("initial state is not on a detected invariant line")
            res = subspace_invariance_check(system, line, args.T or 1.0, args.h or 2.0**-8)
        else:
            if spec.name == "4.7.1":
                curve = CurveCandidate(CurveKind.PARABOLA_X_OF_Y, {"m": -STABLE_MANIFOLD_EXACT},
                                       clause="candidate local stable manifold")
            else:
                curve = _first_curve_through(analyze(spec.field), system.x0)
            if curve is None:
                raise InputError("initial state is not on a detected invariant curve")
            res = curve_invariance_check(system, curve, args.T or 2.0, args.h or 2.0**-8)
    stem = f"audit-{preset}"
    res.write(args.out, stem, args.format)
    if "svg" in args.format:
        from .plotting import plot_audit

        plot_audit(res, args.out / f"{stem}.svg")
    label = "published manifold refuted" if preset == "cong" and res.verdict == "non-invariant" else res.verdict
    print(f"{preset}: {label}")
    for k, v in res.metrics.items():
        print(f"  {k} = {v}")
    if res.blowup:
        print(f"blow-up: {res.message}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


def cmd_ml(args) -> int:
    try:
        z = complex(args.z.replace(" ", ""))
    except ValueError:
        raise InputError(f"cannot parse z = {args.z!r}") from None
    zz = z.real if z.imag == 0 else z
    try:
        v = ml(args.alpha, args.beta, zz, args.method)
    except MLDomainError as err:
        raise InputError(str(err)) from None
    v = complex(v)
    text = repr(v.real) if v.imag == 0 else f"{v.real!r}{v.imag:+.17g}j"
    print(text)
    if "json" in args.format:
        write_json(args.out / "ml.json", {"alpha": args.alpha, "beta": args.beta, "z": [z.real, z.imag],
                                          "method": args.method, "value": [v.real, v.imag]})
    return EXIT_OK


def cmd_field(args) -> int:
    from .plotting import plot_field, quiver_grid

    spec = _load(args.system)
    box, steps = args.grid
    try:
        x, y, u, v = quiver_grid(spec.field, *box, steps)
    except ValueError as err:
        raise InputError(str(err)) from None
    stem = _stem(spec.name or Path(args.system).stem)
    if "csv" in args.format:
        rows = ([float(a), float(b), float(c), float(d)] for a, b, c, d in zip(x, y, u, v))
        write_csv(args.out / f"{stem}-field.csv", ["x", "y", "dx", "dy"], rows)
    rep = None if args.no_overlay else analyze(spec.field, spec.reference_curves)
    if "svg" in args.format:
        plot_field(spec.field, box, steps, args.out / f"{stem}-field.svg", rep, title=spec.name)
    if "json" in args.format and rep is not None:
        write_json(args.out / f"{stem}-field-curves.json", rep.to_dict())
    _sidecar(args.out, f"{stem}-field", {"command": "field", "system": dump_system(spec),
                                         "grid": [*box, steps], "overlay": rep is not None})
    print(f"{len(x)} grid points written")
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "audit": cmd_audit,
            "ml": cmd_ml, "field": cmd_field}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except SystemFileError as err:
        print(f"fracinv: malformed system file at {err.pointer}: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, FileNotFoundError) as err:
        print(f"fracinv: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
