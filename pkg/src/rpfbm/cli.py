"""Command-line front end.

Exit codes: 0 success (or PSD/ND verdict), 1 negative verdict or failed
verification, 2 usage error.  Output is one JSON object per line, or RFC 4180
CSV for matrices with ``--output csv``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import definiteness as dfn
from . import rkhs, spectral
from .errors import JitterExceededError, NotNDError, NotPSDError, RPFBMError
from .kernels import FAMILIES, KernelSpec, fbm, fbm_normalized, fbm_scaling_checks
from .projline import INF, MoebiusMap, as_point, involution
from .sampling import sample

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
_DEFAULTS = {"tol": None, "seed": None, "output": "json", "jobs": 1}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers


def _point(text: str):
    try:
        return as_point(text)
    except (ValueError, RPFBMError) as exc:
        raise argparse.ArgumentTypeError(f"not a projective point: {text!r}") from exc


def _points(text: str) -> list:
    return [_point(p) for p in text.split(",") if p.strip()]


def _floats(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from exc


def _json_out(v):
    if v is INF:
        return "inf"
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _emit(obj: dict, out):
    out.write(json.dumps({k: _json_out(v) for k, v in obj.items()}) + "\n")


def _emit_matrix(m: np.ndarray, args, out, key: str = "matrix", extra: dict | None = None):
    if args.output == "csv":
        w = csv.writer(out, lineterminator="\r\n")
        for row in np.atleast_2d(m):
            w.writerow([repr(float(v)) for v in row])
    else:
        obj = dict(extra or {})
        obj[key] = np.asarray(m).tolist()
        _emit(obj, out)


def _read_matrix(path: str) -> np.ndarray:
    fh = sys.stdin if path == "-" else open(path, newline="")
    try:
        rows = [[float(x) for x in r] for r in csv.reader(fh) if r]
    finally:
        if fh is not sys.stdin:
            fh.close()
    return np.array(rows, dtype=float)


def _kernel_from_args(args) -> KernelSpec:
    if getattr(args, "kernel_json", None):
        return KernelSpec.from_json(args.kernel_json)
    fam = args.family
    if fam is None:
        raise UsageError("--family (or --kernel-json) is required")
    names = {
        "fbm": ("H",),
        "bifractional": ("H", "K"),
        "moebius_fbm": ("H", "alpha", "beta", "gamma"),
        "normalized_fbm": ("H", "alpha", "gamma"),
        "bridge": ("alpha", "gamma"),
        "pinned_bridge": ("alpha", "gamma"),
        "ou": ("H",),
        "highdim_fbm": ("H", "d"),
        "min": ("c",),
    }[fam]
    params = {}
    for n in names:
        v = getattr(args, n)
        if v is None:
            raise UsageError(f"family {fam} needs --{n}")
        params[n] = v
    return KernelSpec(fam, params)


def _add_kernel_args(p: argparse.ArgumentParser):
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--kernel-json", help='descriptor {"family": ..., "params": {...}}')
    p.add_argument("--H", type=float)
    p.add_argument("--K", type=float)
    p.add_argument("--alpha", type=_point)
    p.add_argument("--beta", type=_point)
    p.add_argument("--gamma", type=_point)
    p.add_argument("--c", type=float)
    p.add_argument("--d", type=int)


def _spec_points(spec: KernelSpec, text: str) -> list:
    if spec.family == "highdim_fbm":
        return [np.array(_floats(chunk)) for chunk in text.split(";") if chunk.strip()]
    return _points(text)


def _tol(args, default: float) -> float:
    return default if args.tol is None else args.tol


# ---------------------------------------------------------------------------
# subcommands


def cmd_kernel(args, out) -> int:
    spec = _kernel_from_args(args)
    if spec.family == "highdim_fbm":
        s, t = np.array(_floats(args.s)), np.array(_floats(args.t))
        val = spec(s, t)
        _emit({"kernel": spec.to_dict(), "s": s.tolist(), "t": t.tolist(), "value": val}, out)
    else:
        s, t = _point(args.s), _point(args.t)
        val = spec(s, t)
        if args.output == "csv":
            out.write(f"value\r\n{val!r}\r\n")
        else:
            _emit({"kernel": spec.to_dict(), "s": s, "t": t, "value": val}, out)
    return EXIT_OK


def cmd_gram(args, out) -> int:
    spec = _kernel_from_args(args)
    m = dfn.gram(spec, _spec_points(spec, args.points))
    _emit_matrix(m, args, out)
    return EXIT_OK


def _matrix_source(args) -> np.ndarray:
    if args.matrix:
        return _read_matrix(args.matrix)
    if getattr(args, "power", None) is not None:
        pts = np.array(_floats(args.points))
        return np.abs(pts[:, None] - pts[None, :]) ** args.power
    if args.family or args.kernel_json:
        spec = _kernel_from_args(args)
        return dfn.gram(spec, _spec_points(spec, args.points))
    raise UsageError("give --matrix, or a kernel with --points")


def _report_exit(rep: dfn.GramReport, out, **extra) -> int:
    obj = dict(extra)
    obj.update(rep.to_dict())
    _emit(obj, out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_check_pd(args, out) -> int:
    return _report_exit(dfn.check_pd(_matrix_source(args), _tol(args, dfn.DEFAULT_TOL)), out)


def cmd_check_nd(args, out) -> int:
    return _report_exit(dfn.check_nd(_matrix_source(args), _tol(args, dfn.DEFAULT_TOL)), out)


def _parse_tau(args):
    if args.involution:
        a, b, c = _points(args.involution)
        return involution(a, b, c)
    if args.tau:
        vals = _floats(args.tau)
        if len(vals) != 4:
            raise UsageError("--tau needs four matrix entries a,b,c,d")
        return MoebiusMap(*vals)
    raise UsageError("give --involution alpha,beta,gamma or --tau a,b,c,d")


def cmd_check_rp(args, out) -> int:
    spec = _kernel_from_args(args)
    tau = _parse_tau(args)
    setup = dfn.ReflectionSetup.from_positive(_points(args.positive), tau)
    res = dfn.check_reflection_positive(spec, setup, _tol(args, dfn.DEFAULT_TOL))
    _emit({"part": "full", **res.full.to_dict()}, out)
    _emit({"part": "twisted", **res.twisted.to_dict()}, out)
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_check_rn(args, out) -> int:
    p = args.power
    psi = lambda x: abs(x) ** p  # noqa: E731
    res = dfn.check_reflection_negative(psi, _floats(args.points_g), _floats(args.points_s), _tol(args, dfn.DEFAULT_TOL))
    _emit({"part": "group", **res.full.to_dict()}, out)
    _emit({"part": "semigroup", **res.twisted.to_dict()}, out)
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_scan_h(args, out) -> int:
    n_steps = int(round((args.to - args.from_) / args.step))
    hs = [round(args.from_ + k * args.step, 10) for k in range(n_steps + 1)]
    tol = _tol(args, dfn.DEFAULT_TOL)
    if args.setup:
        triple = tuple(_points(args.setup))
        if len(triple) != 3:
            raise UsageError("--setup needs three points alpha,beta,gamma")
        if args.seed is None:
            u = np.cos((2 * np.arange(1, args.points + 1) - 1) * np.pi / (2 * args.points))
            u = np.where(np.abs(u) < 0.02, 0.02, u)
            rs = dfn.projective_setup(*triple, u)
            rows = []
            for H in hs:
                spec = KernelSpec.of("normalized_fbm", H=H, alpha=triple[0], gamma=triple[2])
                res = dfn.check_reflection_positive(spec, rs, tol)
                ok = res.ok
                bad = dfn.Verdict.NOT_PSD in (res.full.verdict, res.twisted.verdict)
                rows.append(dfn.ScanRow(H, int(ok), int(bad), int(not ok and not bad),
                                        res.twisted.min_eigenvalue / res.twisted.scale))
        else:
            rows = dfn.threshold_scan(hs, args.setups, args.points, args.seed, tol, setup=triple)
    else:
        if args.seed is None:
            raise UsageError("scan-H with random setups requires --seed")
        rows = dfn.threshold_scan(hs, args.setups, args.points, args.seed, tol)
    for r in rows:
        _emit(r.to_dict(), out)
    return EXIT_OK


def cmd_mu(args, out) -> int:
    coeffs = dfn.mu_coefficients(args.H, args.terms)
    if args.output == "csv":
        w = csv.writer(out, lineterminator="\r\n")
        w.writerow(["support", "weight"])
        for x, wt in coeffs:
            w.writerow([repr(x), repr(wt)])
    else:
        for x, wt in coeffs:
            _emit({"support": x, "weight": wt}, out)
    return EXIT_OK


def cmd_sample(args, out) -> int:
    if args.seed is None:
        raise UsageError("sample requires --seed")
    spec = _kernel_from_args(args)
    batch = sample(spec, _spec_points(spec, args.points), args.paths, args.seed, args.jobs, _tol(args, 1e-9))
    if args.out:
        side = batch.write(args.out)
        _emit({"csv": args.out, "sidecar": side, **batch.sidecar()}, sys.stderr if args.output == "csv" else out)
    elif args.output == "csv":
        out.write(batch.to_csv())
    else:
        _emit({**batch.sidecar(), "paths": batch.paths.tolist()}, out)
    return EXIT_OK


def cmd_spectral(args, out) -> int:
    tol = _tol(args, spectral.DEFAULT_TOL)
    val, _ = spectral.spectral_integral(args.H, args.s, args.t, tol)
    ker = fbm(args.H, args.s, args.t)
    resid = abs(val - ker)
    _emit({"H": args.H, "s": args.s, "t": args.t, "integral": val, "kernel": ker, "residual": resid}, out)
    return EXIT_OK if resid <= tol else EXIT_FAIL


def _verify_rkhs(args, out) -> int:
    tol = _tol(args, 1e-12)
    if args.a and args.b:
        a, b = rkhs.AtomicElement.from_json(args.a), rkhs.AtomicElement.from_json(args.b)
        _emit({"H": args.H, "inner": rkhs.inner_atomic(args.H, a, b)}, out)
        return EXIT_OK
    pts = _floats(args.points)
    spec = KernelSpec.of("fbm", H=args.H)
    elems = [rkhs.bH(t) for t in pts]
    g1 = np.array([[rkhs.inner_atomic(args.H, x, y) for y in elems] for x in elems])
    resid = float(np.max(np.abs(g1 - dfn.gram(spec, pts))))
    _emit({"check": "realization", "H": args.H, "residual": resid, "ok": resid <= tol}, out)
    return EXIT_OK if resid <= tol else EXIT_FAIL


def _verify_takenaka(args, out) -> int:
    tol = _tol(args, 1e-10)
    g = MoebiusMap(*_floats(args.g))
    if args.combo:
        x = rkhs.KernelCombo.from_json(args.combo)
    else:
        if args.seed is None:
            raise UsageError("verify takenaka without --combo requires --seed")
        rng = np.random.default_rng(args.seed)
        x = rkhs.KernelCombo(tuple(zip(rng.normal(size=4), rng.normal(scale=2, size=4))))
    y = rkhs.takenaka_transform(g, x)
    n0 = rkhs.kernel_combo_inner(x, x)
    n1 = rkhs.kernel_combo_inner(y, y)
    resid = abs(n1 - n0)
    _emit({"input": [list(p) for p in x.terms], "output": [list(p) for p in y.terms],
           "norm_residual": resid, "ok": resid <= tol * max(1.0, n0)}, out)
    return EXIT_OK if resid <= tol * max(1.0, n0) else EXIT_FAIL


def _verify_identities(args, out) -> int:
    if args.seed is None:
        raise UsageError("verify identities requires --seed")
    rng = np.random.default_rng(args.seed)
    results = []
    # scaling and time inversion of C^H
    worst = 0.0
    for _ in range(50):
        H = rng.uniform(0.05, 0.95)
        lam, s, t = rng.uniform(0.2, 3, 3) * rng.choice([-1, 1], 3)
        worst = max(worst, *map(abs, fbm_scaling_checks(H, lam, s, t)))
    results.append(("scaling", worst, 1e-12))
    # closed-form inner products of f_t against the normalized kernel
    worst = 0.0
    for _ in range(50):
        H = rng.uniform(0.05, 0.95)
        a, c, s, t = rng.normal(scale=2, size=4)
        try:
            worst = max(worst, abs(rkhs.f_inner(H, a, c, s, t) - fbm_normalized(H, a, c, s, t)))
        except RPFBMError:
            continue
    results.append(("f_inner", worst, 1e-10))
    # gamma integral identity
    worst = max(abs(spectral.gamma_identity_check(a)) for a in (0.2, 0.5, 1.0, 1.5, 1.8))
    results.append(("gamma_identity", worst, 1e-6))
    mu = dfn.mu_measure(0.5, 10)
    results.append(("mu_half", abs(mu.get(1.0, 0.0) - 2.0) + (len(mu) - 1), 0.0))
    ok_all = True
    for name, resid, tol in results:
        ok = resid <= tol
        ok_all &= ok
        _emit({"check": name, "residual": resid, "tol": tol, "ok": ok}, out)
    return EXIT_OK if ok_all else EXIT_FAIL


def cmd_verify(args, out) -> int:
    return {"rkhs": _verify_rkhs, "takenaka": _verify_takenaka, "identities": _verify_identities}[args.what](args, out)


def cmd_helix(args, out) -> int:
    d = _read_matrix(args.matrix)
    coords = dfn.helix_embed(d, args.base, _tol(args, 1e-12))
    resid = dfn.embedding_residual(coords, d)
    _emit_matrix(coords, args, out, key="coordinates", extra={"residual": resid})
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--output", choices=("json", "csv"), default=argparse.SUPPRESS)
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="rpfbm", parents=[common], description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    p = add("kernel", cmd_kernel, "evaluate a kernel at (s, t)")
    _add_kernel_args(p)
    p.add_argument("--s", required=True)
    p.add_argument("--t", required=True)

    p = add("gram", cmd_gram, "Gram matrix on a point list")
    _add_kernel_args(p)
    p.add_argument("--points", required=True, help="comma separated; ';' separates vectors for highdim_fbm")

    for name, func, help_ in (("check-pd", cmd_check_pd, "positive definiteness"),
                              ("check-nd", cmd_check_nd, "negative definiteness")):
        p = add(name, func, help_)
        _add_kernel_args(p)
        p.add_argument("--matrix", help="CSV file, '-' for stdin")
        p.add_argument("--points")
        p.add_argument("--power", type=float, help="use |t_i - t_j|^power on --points")

    p = add("check-rp", cmd_check_rp, "reflection positivity of a kernel")
    _add_kernel_args(p)
    p.add_argument("--positive", required=True, help="points of X+")
    p.add_argument("--involution", help="alpha,beta,gamma of the three-point involution")
    p.add_argument("--tau", help="matrix entries a,b,c,d of the involution")

    p = add("check-rn", cmd_check_rn, "reflection negativity of psi(t) = |t|^power")
    p.add_argument("--power", type=float, required=True)
    p.add_argument("--points-g", required=True)
    p.add_argument("--points-s", required=True)

    p = add("scan-H", cmd_scan_h, "reflection-positivity threshold scan over H")
    p.add_argument("--setup", help="fixed alpha,beta,gamma (random setups otherwise)")
    p.add_argument("--setups", type=int, default=20)
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--from", dest="from_", type=float, default=0.05)
    p.add_argument("--to", type=float, default=0.95)
    p.add_argument("--step", type=float, default=0.05)

    p = add("mu", cmd_mu, "atoms of the measure mu")
    p.add_argument("--H", type=float, required=True)
    p.add_argument("--terms", type=int, required=True)

    p = add("sample", cmd_sample, "sample Gaussian paths")
    _add_kernel_args(p)
    p.add_argument("--points", required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--out", help="CSV path; a JSON sidecar is written next to it")

    p = add("spectral", cmd_spectral, "spectral representation of C^H(s, t)")
    p.add_argument("--H", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--t", type=float, required=True)

    p = add("verify", cmd_verify, "identity checks")
    p.add_argument("what", choices=("rkhs", "takenaka", "identities"))
    p.add_argument("--H", type=float, default=0.3)
    p.add_argument("--points", default="-2,-1,-0.5,0.5,1,2,3")
    p.add_argument("--a", help="atomic element as JSON pairs")
    p.add_argument("--b", help="atomic element as JSON pairs")
    p.add_argument("--g", default="0,-1,1,0", help="matrix entries a,b,c,d")
    p.add_argument("--combo", help="kernel combination as JSON [coef, time] pairs")

    p = add("helix", cmd_helix, "isometric embedding of a negative definite distance matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--base", type=int, default=0)
    return parser


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    for k, v in _DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    if args.jobs < 1:
        err.write("rpfbm: --jobs must be at least 1\n")
        return EXIT_USAGE
    try:
        return args.func(args, out)
    except (NotPSDError, NotNDError, JitterExceededError) as exc:
        err.write(f"rpfbm: {exc}\n")
        return EXIT_FAIL
    except (UsageError, RPFBMError, argparse.ArgumentTypeError, OSError, ValueError) as exc:
        err.write(f"rpfbm: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
