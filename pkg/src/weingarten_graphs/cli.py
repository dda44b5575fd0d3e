"""Command-line interface.

Subcommands: ``construct``, ``sweep``, ``verify``, ``thresholds``,
``families`` and ``export``.  Exit codes: 0 on success, 1 on domain
errors, 2 on I/O or schema errors.
"""

import argparse
import csv
import io as _stdio
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

from . import __version__
from .ambient import FamilyKind, load_family, make_family
from .constructions import (annuli_threshold, build_annulus, build_hyperbolic, build_parabolic,
                            build_rotational, build_rotational_csc, hyperbolic_threshold)
from .errors import DegenerateHyperplane, DomainError, NotElliptic, SchemaError, StepSizeUnderflow
from .io import dumps, export_profiles, fmt, model_to_dict, write_model_json, write_revolution_obj
from .rho_solver import frak_c, initial_slope
from .verify import verify_model
from .weingarten import PairConfig, check_ellipticity, resolve_weingarten

FORMAT_VERSION = 1
DEFAULT_SEED = 0

STANDARD_FAMILIES = ("spheres", "horospheres", "equidistants")


@dataclass
class RunConfig:
    family: str = "spheres"
    n: int = 3
    eps: int = 1
    W: str = "WS"
    c: float = None
    lam: float = None
    variant: str = "SymmetricBiGraph"
    method: str = "numeric"
    s_max: float = None
    samples: int = 1000
    seed: int = DEFAULT_SEED

    def validate(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise SchemaError(f"n must be an integer >= 2, got {self.n!r}")
        if self.eps not in (1, -1):
            raise SchemaError(f"eps must be 1 or -1, got {self.eps!r}")
        if self.c is None or not math.isfinite(self.c):
            raise SchemaError("a finite --c is required")
        if self.lam is not None and not math.isfinite(self.lam):
            raise SchemaError("lambda must be finite")
        if self.method not in ("numeric", "closed"):
            raise SchemaError(f"method must be numeric or closed, got {self.method!r}")
        if self.variant not in ("SymmetricBiGraph", "EntireConstant"):
            raise SchemaError(f"unknown variant {self.variant!r}")
        if self.s_max is not None and not self.s_max > 0:
            raise SchemaError("s_max must be positive")
        if self.samples < 1:
            raise SchemaError("samples must be >= 1")
        if self.family not in STANDARD_FAMILIES and not self.family.endswith(".json"):
            raise SchemaError(f"family must be one of {STANDARD_FAMILIES} or a JSON path")
        return self


def _config_from_args(args, c=None, lam=None):
    base = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{args.config}: not valid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise SchemaError("config must be a JSON object")
        doc = dict(doc)
        version = doc.pop("format_version", FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise SchemaError(f"unsupported config format_version {version}")
        known = {f.name for f in fields(RunConfig)}
        unknown = set(doc) - known
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        base.update(doc)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            base[f.name] = v
    if c is not None:
        base["c"] = c
    if lam is not None:
        base["lam"] = lam
    env_seed = os.environ.get("WEINGARTEN_SEED")
    if env_seed is not None:
        try:
            base["seed"] = int(env_seed)
        except ValueError:
            raise SchemaError(f"WEINGARTEN_SEED must be an integer, got {env_seed!r}") from None
    try:
        cfg = RunConfig(**base)
    except TypeError as exc:
        raise SchemaError(str(exc)) from None
    if isinstance(cfg.c, int):
        cfg.c = float(cfg.c)
    return cfg.validate()


def _family(cfg):
    if cfg.family.endswith(".json"):
        fam = load_family(cfg.family)
        if fam.n != cfg.n:
            cfg.n = fam.n
        return fam
    return make_family(cfg.family, cfg.n, cfg.eps)


def _is_ws(cfg):
    return cfg.W in ("WS", "scalarWS")


def build_model(cfg):
    """Dispatch a validated config to the matching builder."""
    fam = _family(cfg)
    W = resolve_weingarten(cfg.W, fam.n, fam.epsilon)
    report = check_ellipticity(W, samples=cfg.samples, seed=cfg.seed)
    if not report.passed:
        raise NotElliptic(f"{W.name} fails the ellipticity audit (min partial {report.min_partial:.3g})")
    kind = fam.kind
    if kind is FamilyKind.HOROSPHERES:
        _require_ws(cfg, "parabolic")
        return build_parabolic(cfg.n, cfg.c, cfg.variant, method=cfg.method)
    if kind is FamilyKind.EQUIDISTANTS:
        _require_ws(cfg, "hyperbolic")
        if cfg.lam is None:
            raise SchemaError("the hyperbolic construction needs --lam")
        return build_hyperbolic(cfg.n, cfg.c, cfg.lam, method=cfg.method)
    if cfg.lam is not None:
        _require_ws(cfg, "annulus")
        return build_annulus(cfg.n, cfg.eps, cfg.c, cfg.lam, s_max=cfg.s_max)
    if kind is FamilyKind.GEODESIC_SPHERES and _is_ws(cfg):
        # reports a missing origin root before the range check of the closed form
        if initial_slope(PairConfig(cfg.c, W, fam)) == 0.0:
            raise DegenerateHyperplane(f"W(0, ..., 0, 1) = c = {cfg.c}: horizontal slice")
        return build_rotational_csc(cfg.n, cfg.eps, cfg.c, cfg.method, s_max=cfg.s_max)
    return build_rotational(W, fam, cfg.c, s_max=cfg.s_max)


def _require_ws(cfg, what):
    if not _is_ws(cfg):
        raise SchemaError(f"the {what} construction is defined for W = WS only")


def _summary(model, report):
    m = model.meta
    return {
        "format_version": FORMAT_VERSION,
        "topology": model.topology.value,
        "convexity": model.convexity.value,
        "classification": m.get("classification"),
        "period": model.period,
        "verification_passed": report.passed,
    }


# -- subcommands ---------------------------------------------------------------------------

def cmd_construct(args):
    cfg = _config_from_args(args)
    model = build_model(cfg)
    report = verify_model(model)
    if args.out:
        write_model_json(model, args.out, report)
    if args.csv:
        export_profiles(model, args.csv)
    sys.stdout.write(dumps(_summary(model, report)))
    return 0


def cmd_verify(args):
    cfg = _config_from_args(args)
    model = build_model(cfg)
    report = verify_model(model)
    text = report.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    if not report.passed:
        failed = ", ".join(c.name for c in report.checks if not c.passed)
        print(f"verification failed: {failed}", file=sys.stderr)
        return 1
    return 0


def cmd_export(args):
    cfg = _config_from_args(args)
    model = build_model(cfg)
    if args.format == "profile-csv":
        paths = export_profiles(model, args.out)
    elif args.format == "model-json":
        write_model_json(model, args.out, verify_model(model))
        paths = [args.out]
    else:
        write_revolution_obj(model, args.out, segments=args.segments)
        paths = [args.out]
    for p in paths:
        print(p)
    return 0


def cmd_thresholds(args):
    n, eps, c = args.n, args.eps, float(args.c)
    fc = frak_c(n, eps, c)
    out = {"format_version": FORMAT_VERSION, "n": n, "eps": eps, "c": c, "frak_C": fc}
    if fc > 0:
        from .ambient import arctan_eps

        out["delta"] = arctan_eps(1.0 / math.sqrt(fc), eps)
    else:
        out["delta"] = None
    try:
        out["annuli_threshold"] = annuli_threshold(n, eps, c)
    except DomainError:
        out["annuli_threshold"] = None
    if eps == -1 and -n * (n - 1) <= c < 0:
        out["hyperbolic_threshold"] = hyperbolic_threshold(n, c)
        out["hyperbolic_threshold_tight"] = hyperbolic_threshold(n, c, tight=True)
    sys.stdout.write(dumps(out))
    return 0


def cmd_families(args):
    if args.n is None:
        rows = [{"name": name, "epsilon": [1, -1] if name == "spheres" else [-1]}
                for name in STANDARD_FAMILIES]
        sys.stdout.write(dumps({"format_version": FORMAT_VERSION, "families": rows}))
        return 0
    if args.family.endswith(".json"):
        fam = load_family(args.family)
    else:
        fam = make_family(args.family, args.n, args.eps)
    doc = fam.describe()
    doc["format_version"] = FORMAT_VERSION
    sys.stdout.write(dumps(doc))
    return 0


SWEEP_COLUMNS = ("c", "lam", "terminal", "delta", "C1", "C2", "C3", "topology", "error")


def _parse_values(text):
    """``"1,2,3"`` or ``"start:stop:step"`` (stop inclusive)."""
    if text is None:
        return [None]
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] == 0:
            raise SchemaError(f"range must be start:stop:step, got {text!r}")
        a, b, h = parts
        count = int(math.floor((b - a) / h + 1e-9)) + 1
        return [a + k * h for k in range(max(count, 0))]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise SchemaError(f"bad value list {text!r}") from None


def sweep_cell(cfg_dict):
    """One row of the phase table; errors are recorded, never raised."""
    cfg = RunConfig(**cfg_dict)
    row = {"c": cfg.c, "lam": cfg.lam, "terminal": "", "delta": None, "C1": None, "C2": None,
           "C3": None, "topology": "", "error": ""}
    try:
        model = build_model(cfg)
    except DegenerateHyperplane as exc:
        row.update(terminal="Degenerate", error=str(exc))
        return row
    except (DomainError, StepSizeUnderflow) as exc:
        row.update(terminal="Error", error=f"{type(exc).__name__}: {exc}")
        return row
    sol = model.pieces[0].profile.solution
    row["topology"] = model.topology.value
    row["terminal"] = model.meta.get("classification") or sol.terminal.kind.value
    row["delta"] = sol.delta
    adm = sol.admissible
    row.update(C1=adm.C1, C2=adm.C2, C3=adm.C3)
    return row


def _cell_text(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def cmd_sweep(args):
    base = _config_from_args(args, c=0.0)
    cs = _parse_values(args.c_values)
    lams = _parse_values(args.lam_values)
    cells = []
    for c in cs:
        for lam in lams:
            d = asdict(base)
            d.update(c=float(c), lam=lam)
            RunConfig(**d).validate()
            cells.append(d)
    if args.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(sweep_cell, cells))
    else:
        rows = [sweep_cell(d) for d in cells]
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([_cell_text(row[k]) for k in SWEEP_COLUMNS])
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# -- parser ----------------------------------------------------------------------------------

def _add_run_options(p, need_c=True):
    p.add_argument("--config", help="JSON run configuration; flags override its entries")
    p.add_argument("--family", help="spheres, horospheres, equidistants or a family JSON path")
    p.add_argument("--n", type=int)
    p.add_argument("--eps", type=int, choices=(1, -1))
    p.add_argument("--W", help="Hr:<r>, normA, WS, an expression or a JSON path")
    if need_c:
        p.add_argument("--c", type=float)
    p.add_argument("--lam", type=float, help="launch radius for annuli and hyperbolic bigraphs")
    p.add_argument("--variant", choices=("SymmetricBiGraph", "EntireConstant"))
    p.add_argument("--method", choices=("numeric", "closed"))
    p.add_argument("--s-max", dest="s_max", type=float)
    p.add_argument("--samples", type=int, help="ellipticity audit samples")
    p.add_argument("--seed", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="weingarten-graphs",
                                     description="Construct and verify elliptic Weingarten graphs.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a model and print a summary")
    _add_run_options(p)
    p.add_argument("--out", help="write the model JSON here")
    p.add_argument("--csv", help="also write per-piece CSV files with this stem")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="build a model and print its verification report")
    _add_run_options(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="write a model as CSV, JSON or OBJ")
    _add_run_options(p)
    p.add_argument("--format", required=True, choices=("profile-csv", "model-json", "revolution-obj"))
    p.add_argument("--out", required=True, help="output path (file stem for profile-csv)")
    p.add_argument("--segments", type=int, default=48)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("sweep", help="phase table over a grid of c (and lambda)")
    _add_run_options(p, need_c=False)
    p.add_argument("--c", dest="c_values", required=True, help="list a,b,c or range start:stop:step")
    p.add_argument("--lam-values", dest="lam_values")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("thresholds", help="critical radii for given (n, eps, c)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=int, choices=(1, -1), required=True)
    p.add_argument("--c", type=float, required=True)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("families", help="list or describe ambient families")
    p.add_argument("--family", default="spheres")
    p.add_argument("--n", type=int)
    p.add_argument("--eps", type=int, choices=(1, -1), default=1)
    p.set_defaults(func=cmd_families)
    return parser


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, StepSizeUnderflow) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
