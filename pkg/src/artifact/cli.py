"""Batch front-end.

Exit codes: 0 ok, 2 input error, 3 admission rejected, 4 solver
non-convergence, 5 verification failure.  Structured results go to stdout
(or --out) as JSON with sorted keys; error bodies go to stderr as JSON.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .leaf import PeriodicField, Profile, ProfiledSeries
from .plane import GridField, SolverError, WindowError, normalize_fix01inf, solve_normal
from .renorm import mode_filter, ren_norm
from .series import PontryaginSeries, constant
from .solenoid import ChainS

EXIT_OK, EXIT_INPUT, EXIT_ADMISSION, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4, 5
GRID_ENV = "ARTIFACT_GRID"


class InputError(ValueError):
    pass


def default_grid() -> int:
    raw = os.environ.get(GRID_ENV, "512")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"{GRID_ENV} must be an integer, got {raw!r}") from None
    if n < 8:
        raise InputError(f"{GRID_ENV} must be >= 8")
    return n


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def parse_chain(spec: str, depth: int) -> ChainS:
    """p=2, factorial, or custom=1,2,6."""
    if depth < 1:
        raise InputError("depth must be positive")
    key, _, val = spec.partition("=")
    try:
        if key == "p":
            return ChainS.padic(int(val), depth)
        if key == "factorial":
            return ChainS.factorial(depth)
        if key == "custom":
            return ChainS.custom([int(v) for v in val.split(",")]).truncate(depth)
    except ValueError as exc:
        raise InputError(f"bad chain {spec!r}: {exc}") from None
    raise InputError(f"unknown chain {spec!r} (use p=<prime>, factorial, custom=n1,n2,...)")


def _fixture_args(text: str) -> dict:
    out = {}
    for part in filter(None, text.split(",")):
        k, _, v = part.partition("=")
        out[k] = v
    return out


def load_coefficient(text: str):
    """Inline JSON, a JSON file, or a named fixture (constant:c, counterexample:N=6)."""
    if text.startswith("constant:"):
        try:
            c = complex(text.split(":", 1)[1])
            return constant(c.real if c.imag == 0 else c)
        except ValueError:
            raise InputError(f"bad constant fixture {text!r}") from None
    if text.startswith("counterexample:"):
        from .teich import counterexample_mu
        args = _fixture_args(text.split(":", 1)[1])
        try:
            return counterexample_mu(int(args.get("N", 6)))
        except ValueError as exc:
            raise InputError(str(exc)) from None
    if text.lstrip().startswith("{"):
        raw = text
    else:
        path = Path(text)
        if not path.is_file():
            raise InputError(f"no such file or fixture: {text!r}")
        raw = path.read_text()
    try:
        obj = json.loads(raw)
        if any("profile" in t for t in obj.get("terms", [])):
            return ProfiledSeries.from_json(obj)
        return PontryaginSeries.from_json(obj)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot parse coefficient: {exc}") from None


def as_profiled(mu) -> ProfiledSeries:
    if isinstance(mu, ProfiledSeries):
        return mu
    if isinstance(mu, PontryaginSeries):
        return ProfiledSeries(tuple((q, a, Profile("flat")) for q, a in mu))
    raise InputError("a profiled series is required here")


def write_out(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------

def cmd_filter(args) -> int:
    mu = load_coefficient(args.mu)
    if isinstance(mu, PeriodicField):
        raise InputError("filter works on series input")
    write_out(dumps(mode_filter(mu, args.n).to_json()), args.out)
    return EXIT_OK


def cmd_norm(args) -> int:
    mu = load_coefficient(args.mu)
    chain = parse_chain(args.chain, args.depth)
    try:
        rep = ren_norm(mu, chain, samples=args.samples)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    body = rep.to_json()
    body.update({"chain": chain.to_json(), "residual": rep.residual, "certified": rep.certified,
                 "head_lower": rep.head_lower, "terms_lower": rep.terms_lower})
    write_out(dumps(body), args.out)
    return EXIT_OK


def _disk_fixture(text: str, R: float, N: int) -> GridField:
    args = _fixture_args(text.split(":", 1)[1])
    k = complex(args.get("k", "0.3"))
    r = float(args.get("r", "1"))
    return GridField.from_function(lambda w: k * (np.abs(w) < r), R, N, support_radius=r,
                                   supersample=int(args.get("supersample", "4")))


def cmd_solve_level(args) -> int:
    N = args.grid or default_grid()
    if args.mu.startswith("disk:"):
        field = _disk_fixture(args.mu, args.R, N)
        level = None
    else:
        from .tower import AdelicBeltrami, level_coefficient
        chain = parse_chain(args.chain, args.depth)
        mu = AdelicBeltrami(as_profiled(load_coefficient(args.mu)), chain)
        level = args.level if args.level else chain.levels[0]
        chain.index(level)
        field = level_coefficient(mu, level, args.R, N)
    f = normalize_fix01inf(solve_normal(field, args.tol, args.max_iter))
    if args.dump:
        values = GridField(field.R, field.N, f.grid_values(), field.support_radius)
        Path(args.dump).write_bytes(values.to_bytes())
    if args.csv:
        with open(args.csv, "w") as fh:
            GridField(field.R, field.N, f.grid_values(), field.support_radius).to_csv(fh, args.stride)
    body = {"level": level, "R": field.R, "N": field.N, "residual": f.residual,
            "beltrami_residual": f.beltrami_residual(), "iterations": f.iterations,
            "update_norm": f.update_norm, "mu_sup": field.sup(),
            "normalization": f.normalization, "f(2)": complex(f(np.array([2.0 + 0j]))[0])}
    write_out(dumps(body), args.out)
    return EXIT_OK


def cmd_tower(args) -> int:
    from .tower import AdelicBeltrami, Tower
    chain = parse_chain(args.chain, args.levels)
    if chain.depth < 2:
        raise InputError("tower runs need at least two levels")
    raw = load_coefficient(args.mu)
    mu = AdelicBeltrami(raw if isinstance(raw, PeriodicField) else as_profiled(raw), chain)
    tower = Tower(mu, args.R, args.grid or default_grid(), args.tol, args.max_iter,
                  reuse_periodic=not args.no_reuse)
    diag = tower.cauchy_diagnostics()
    body = diag.to_json()
    body.update({"chain": chain.to_json(), "admission": mu.admission.to_json(),
                 "leaf_offsets": [complex(v) for v in tower.leaf_offsets()]})
    write_out(dumps(body), args.out)
    csv_path = args.csv or (str(Path(args.out).with_suffix(".csv")) if args.out else None)
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "n_i", "n_next", "d_i", "bound_term", "band_sup"])
            for i, (d, b, s) in enumerate(zip(diag.diffs, diag.bound_terms, diag.band_sups)):
                w.writerow([i, diag.levels[i], diag.levels[i + 1], repr(d), repr(b), repr(s)])
    return EXIT_OK


def _load_diffeo(args):
    from .teich import SolenoidDiffeo
    h = load_coefficient(args.h)
    if not isinstance(h, PontryaginSeries):
        raise InputError("h must be a plain series")
    try:
        return SolenoidDiffeo(h, parse_chain(args.chain, args.depth))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _sample_plane(args):
    x = np.linspace(args.x0, args.x1, args.nx)
    y = np.linspace(args.y0, args.y1, args.ny)
    return np.meshgrid(x, y)


def _write_samples(path, X, Y, V) -> None:
    with (open(path, "w", newline="") if path else _StdoutHandle()) as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "re", "im"])
        for xi, yi, vi in zip(X.ravel(), Y.ravel(), V.ravel()):
            w.writerow([repr(float(xi)), repr(float(yi)), repr(float(vi.real)), repr(float(vi.imag))])


class _StdoutHandle:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        return False


def cmd_extend(args) -> int:
    from .teich import ab_extension
    f = _load_diffeo(args)
    X, Y = _sample_plane(args)
    _write_samples(args.out, X, Y, ab_extension(f, X + 1j * Y))
    return EXIT_OK


def cmd_nvmu(args) -> int:
    from .teich import DenominatorError, nag_verjovsky_mu
    f = _load_diffeo(args)
    try:
        nv = nag_verjovsky_mu(f)
    except DenominatorError as exc:
        sys.stderr.write(dumps({"error": "admission", "message": str(exc)}))
        return EXIT_ADMISSION
    X, Y = _sample_plane(args)
    V = nv(X, Y)
    if args.csv:
        _write_samples(args.csv, X, Y, V)
    body = {"denominator_margin": nv.denominator_margin, "bound": nv.bound, "d_c2": nv.d_c2,
            "sampled_sup": float(np.max(np.abs(V))),
            "bound_holds": bool(np.max(np.abs(V)) <= nv.bound + 1e-12) if math.isfinite(nv.bound) else None}
    write_out(dumps(body), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SUITES
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if any(n not in SUITES for n in names):
        raise InputError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)} or all")
    checks = []
    for name in names:
        if name == "counterexample":
            checks += SUITES[name](args.N)
        elif name == "solver":
            checks += SUITES[name](args.grid or default_grid())
        elif name in ("filter", "norm", "vertical"):
            checks += SUITES[name](seed=args.seed)
        else:
            checks += SUITES[name]()
    ok = all(c.passed for c in checks)
    write_out(dumps({"passed": ok, "checks": [c.to_json() for c in checks]}), args.out)
    return EXIT_OK if ok else EXIT_VERIFY


# -- argument parsing ------------------------------------------------------------

def _add_plane_sampling(p):
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--x1", type=float, default=2 * math.pi)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--y1", type=float, default=2.0)
    p.add_argument("--nx", type=int, default=64)
    p.add_argument("--ny", type=int, default=16)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="mode filter I_n of a series")
    p.add_argument("--mu", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("norm", help="renormalized norm report")
    p.add_argument("--mu", required=True)
    p.add_argument("--chain", default="p=2")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--samples", type=int, default=2048)
    p.add_argument("--out")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("solve-level", help="normalized planar solution at one level")
    p.add_argument("--mu", required=True, help="series JSON/file, or disk:k=0.3")
    p.add_argument("--chain", default="p=2")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--level", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--R", type=float, default=4.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--dump", help="binary grid dump of f at the cell centres")
    p.add_argument("--csv")
    p.add_argument("--stride", type=int, default=8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve_level)

    p = sub.add_parser("tower", help="tower solve and Cauchy diagnostics")
    p.add_argument("--mu", required=True)
    p.add_argument("--chain", default="p=2")
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--grid", type=int)
    p.add_argument("--R", type=float, default=4.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--no-reuse", action="store_true",
                   help="solve every level even when its filtered coefficient is unchanged")
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_tower)

    for name, fn, helptext in (("extend", cmd_extend, "sampled AB extension (CSV)"),
                               ("nvmu", cmd_nvmu, "NV coefficient and its bound")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--h", required=True, help="real series h with f(x) = x + h(x)")
        p.add_argument("--chain", default="p=2")
        p.add_argument("--depth", type=int, default=6)
        _add_plane_sampling(p)
        p.add_argument("--out")
        if name == "nvmu":
            p.add_argument("--csv")
        p.set_defaults(func=fn)

    p = sub.add_parser("verify", help="run self-check suites")
    p.add_argument("--suite", default="all")
    p.add_argument("--N", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    from .solenoid import DepthError
    from .tower import AdmissionError, BranchError
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except AdmissionError as exc:
        sys.stderr.write(dumps({"error": "admission", "message": str(exc),
                                "report": exc.report.to_json()}))
        return EXIT_ADMISSION
    except (SolverError, BranchError) as exc:
        body = {"error": "solver", "message": str(exc)}
        if isinstance(exc, SolverError):
            body.update({"residual": exc.residual, "iterations": exc.iterations})
        sys.stderr.write(dumps(body))
        return EXIT_SOLVER
    except (InputError, DepthError, WindowError, ValueError, OSError) as exc:
        sys.stderr.write(dumps({"error": "input", "message": str(exc)}))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
