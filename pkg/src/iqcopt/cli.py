"""Command-line front end.

Machine results are JSON with an embedded run manifest; sweeps and
sampling runs emit CSV with the manifest in '#'-prefixed header lines.
Exit codes: 0 success, 2 usage error, 3 not certifiable / infeasible,
4 solver error.
"""

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .algorithms import (SectorBounds, load_algorithm, make_named,
                         save_algorithm, to_json_dict)
from .engines import (BisectionConfig, certify_h2, certify_rate,
                      fundamental_lower_bound, synthesize_bmi, synthesize_convex)
from .errors import IqcError, NotCertifiable, SolverError
from .multipliers import ZamesFalbStructure
from .sampling import sample_function, simulate_h2
from .sdp import SolverOptions

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_CERTIFIABLE = 3
EXIT_SOLVER = 4


def _solver_options() -> SolverOptions:
    opts = SolverOptions()
    tol = os.environ.get("IQC_SOLVER_TOL")
    if tol:
        opts.tol_abs = opts.tol_rel = float(tol)
    return opts


def _params(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _manifest(command: str, params: dict, seconds: float, solver_opts: SolverOptions) -> dict:
    return {
        "command": command,
        "parameters": params,
        "tool_version": __version__,
        "solver_options": {"tol_abs": solver_opts.tol_abs,
                           "tol_rel": solver_opts.tol_rel,
                           "max_iters": solver_opts.max_iters},
        "seconds": round(seconds, 6),
    }


def _emit_json(payload: dict, path=None):
    text = json.dumps(payload, indent=1, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _emit_csv(manifest: dict, header, rows, path=None):
    # CSV reruns must be byte-identical, so volatile fields stay out
    manifest = dict(manifest)
    manifest.pop("seconds", None)
    if isinstance(manifest.get("parameters"), dict):
        manifest["parameters"] = {k: v for k, v in manifest["parameters"].items()
                                  if k != "output"}
    lines = [f"# {k}={json.dumps(v, sort_keys=True)}" for k, v in sorted(manifest.items())]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(str(c) for c in row))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def _load_algo(spec: str, bounds: SectorBounds, p: int):
    if spec.startswith("file:"):
        return load_algorithm(spec[5:])
    return make_named(spec, bounds, p)


def _structure(args, rho=1.0) -> ZamesFalbStructure:
    return ZamesFalbStructure(args.lc, args.la, getattr(args, "p", 1),
                              getattr(args, "klass", "unstructured"), rho)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_analyze_rate(args) -> int:
    opts = _solver_options()
    bounds = SectorBounds(args.m, args.L)
    algo = _load_algo(args.algo, bounds, args.p)
    t0 = time.time()
    res = certify_rate(algo, bounds, _structure(args),
                       BisectionConfig(tol=args.tol), opts)
    cert = res.certificate
    payload = {
        "manifest": _manifest("analyze-rate", _params(args), time.time() - t0, opts),
        "result": {
            "rho": res.value,
            "certificate_digest": _digest({"P": np.round(cert.P, 12).tolist(),
                                           "M": [Mi.tolist() for Mi in cert.zf.M]}),
            "solves": res.solves,
            "seconds": res.seconds,
            "bracket": list(res.bracket),
        },
    }
    _emit_json(payload, args.output)
    return EXIT_OK


def cmd_analyze_h2(args) -> int:
    opts = _solver_options()
    bounds = SectorBounds(args.m, args.L)
    algo = _load_algo(args.algo, bounds, args.p)
    t0 = time.time()
    res = certify_h2(algo, bounds, _structure(args), options=opts)
    payload = {
        "manifest": _manifest("analyze-h2", _params(args), time.time() - t0, opts),
        "result": {"gamma": res.value, "solves": res.solves, "seconds": res.seconds},
    }
    _emit_json(payload, args.output)
    return EXIT_OK


def cmd_synth_convex(args) -> int:
    opts = _solver_options()
    bounds = SectorBounds(args.m, args.L)
    t0 = time.time()
    st = ZamesFalbStructure(args.lc, args.la, args.p, "unstructured", args.rho)
    res = synthesize_convex(args.n, args.p, bounds, args.rho,
                            with_perf=args.perf, structure=st, options=opts)
    if args.out:
        save_algorithm(res.algo, args.out)
    payload = {
        "manifest": _manifest("synth-convex", _params(args), time.time() - t0, opts),
        "result": {
            "rho": res.rho,
            "gamma": res.gamma,
            "algorithm": to_json_dict(res.algo),
        },
    }
    _emit_json(payload, args.output)
    return EXIT_OK


def cmd_synth_bmi(args) -> int:
    opts = _solver_options()
    bounds = SectorBounds(args.m, args.L)
    t0 = time.time()
    st = ZamesFalbStructure(args.lc, args.la, args.p, "unstructured", args.target_rho)
    res = synthesize_bmi(args.n, args.p, bounds, args.target_rho,
                         optimize=args.optimize, structure=st, options=opts)
    if args.out:
        save_algorithm(res.algo, args.out)
    payload = {
        "manifest": _manifest("synth-bmi", _params(args), time.time() - t0, opts),
        "result": {
            "rho": res.rho,
            "gamma": res.gamma,
            "initializer_rho": res.initializer_rho,
            "iterations": [[tag, r, g] for tag, r, g in res.iterations],
            "solves": res.solves,
            "algorithm": to_json_dict(res.algo),
        },
    }
    _emit_json(payload, args.output)
    return EXIT_OK


def cmd_sample_h2(args) -> int:
    opts = _solver_options()
    bounds = SectorBounds(args.m, args.L)
    algo = _load_algo(args.algo, bounds, args.p)
    t0 = time.time()
    rows = []
    for i in range(args.runs):
        seed = args.seed + i
        rng = np.random.default_rng(np.random.PCG64(seed))
        spec = sample_function(bounds, args.p, args.kind, rng)
        run = simulate_h2(algo, spec, args.steps, args.realizations, seed)
        rows.append([args.algo, args.kind, args.m, args.L, seed, args.steps,
                     args.realizations, repr(run.estimate)])
    manifest = _manifest("sample-h2", _params(args), time.time() - t0, opts)
    _emit_csv(manifest, ["algo", "kind", "m", "L", "seed", "k_max", "N", "estimate"],
              rows, args.output)
    return EXIT_OK


def _parse_grid(spec: str):
    kind, lo, hi, num = spec.split(":")
    lo, hi, num = float(lo), float(hi), int(num)
    if kind == "log":
        return np.geomspace(lo, hi, num)
    if kind == "lin":
        return np.linspace(lo, hi, num)
    raise argparse.ArgumentTypeError(f"unknown grid kind {kind!r}")


def cmd_sweep(args) -> int:
    opts = _solver_options()
    grid = _parse_grid(args.kappa_grid)
    algos = args.algos.split(",")
    t0 = time.time()
    rows = []
    for kappa in grid:
        bounds = SectorBounds(args.m, args.m * float(kappa))
        for name in algos:
            algo = make_named(name, bounds, args.p)
            st = _structure(args)
            if args.mode == "rate":
                try:
                    res = certify_rate(algo, bounds, st,
                                       BisectionConfig(tol=args.tol), opts)
                    value = res.value
                except NotCertifiable:
                    value = float("nan")
            else:
                try:
                    value = certify_h2(algo, bounds, st, options=opts).value
                except (NotCertifiable, SolverError):
                    value = float("nan")
            rows.append([f"{kappa:.6g}", name, args.mode, repr(value),
                         f"{fundamental_lower_bound(bounds):.12g}"])
    manifest = _manifest("sweep", _params(args), time.time() - t0, opts)
    _emit_csv(manifest, ["kappa", "algo", "mode", "value", "lower_bound"],
              rows, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="iqcopt",
                                 description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, algo=True, mult=True):
        if algo:
            p.add_argument("--algo", required=True,
                           help="gd|nm|nm-mod|tmm|hb|file:<path>")
        p.add_argument("--m", type=float, required=True)
        p.add_argument("--L", type=float, required=True)
        p.add_argument("--p", type=int, default=1)
        if mult:
            p.add_argument("--lc", type=int, default=1)
            p.add_argument("--la", type=int, default=0)
            p.add_argument("--klass", default="unstructured",
                           choices=["unstructured", "repeated", "nonrepeated"])
        p.add_argument("-o", "--output", default=None, help="also write to file")

    p = sub.add_parser("analyze-rate", help="certify the smallest decay rate")
    common(p)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_analyze_rate)

    p = sub.add_parser("analyze-h2", help="certify a noise-amplification level")
    common(p)
    p.set_defaults(func=cmd_analyze_h2)

    p = sub.add_parser("synth-convex", help="convex algorithm design")
    common(p, algo=False)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--perf", action="store_true",
                   help="also minimize the noise-amplification level")
    p.add_argument("--out", default=None, help="write the algorithm JSON here")
    p.set_defaults(func=cmd_synth_convex)

    p = sub.add_parser("synth-bmi", help="alternating BMI design")
    common(p, algo=False)
    p.add_argument("--target-rho", type=float, required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--optimize", choices=["rate", "h2"], default="h2")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synth_bmi)

    p = sub.add_parser("sample-h2", help="empirical lower bounds by simulation")
    common(p, mult=False)
    p.add_argument("--runs", type=int, default=10, help="number of sampled objectives")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--realizations", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=["quadratic", "cosine"], default="cosine")
    p.set_defaults(func=cmd_sample_h2)

    p = sub.add_parser("sweep", help="grid sweeps over the condition ratio")
    p.add_argument("--mode", choices=["rate", "h2"], default="rate")
    p.add_argument("--algos", default="gd,nm,tmm")
    p.add_argument("--kappa-grid", default="log:1.02:1000:25")
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--lc", type=int, default=1)
    p.add_argument("--la", type=int, default=0)
    p.add_argument("--klass", default="unstructured",
                   choices=["unstructured", "repeated", "nonrepeated"])
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0,) else 0
    try:
        return args.func(args)
    except NotCertifiable as e:
        print(json.dumps({"error": "not-certifiable", "detail": str(e)}))
        return EXIT_NOT_CERTIFIABLE
    except SolverError as e:
        print(json.dumps({"error": "solver", "detail": str(e)}))
        return EXIT_SOLVER
    except IqcError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
