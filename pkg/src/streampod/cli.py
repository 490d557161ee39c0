"""Command-line interface: ``streampod {run,compare,oracle,gen}``.

Exit codes: 0 success, 1 I/O or validation failure, 2 equivalence failure
(``compare`` only). Set ``STREAMPOD_LOG`` to ``quiet``, ``info`` or
``debug`` to control diagnostics on stderr.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .exceptions import StreamPODError
from .incremental import IncrementalConfig, Variant, run_stream
from .io import (
    generate_heat_fem_data,
    read_mass_matrix,
    read_results,
    read_snapshots,
    write_dataset,
    write_results,
)
from .oracle import batch_core_svd_one_weight, batch_core_svd_two_weight, verify_core_svd
from .pod import modes_from_svd, temporal_functions

logger = logging.getLogger("streampod")

EXIT_OK, EXIT_IO, EXIT_MISMATCH = 0, 1, 2
LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


def _configure_logging():
    level = LOG_LEVELS.get(os.environ.get("STREAMPOD_LOG", "quiet").lower(), logging.ERROR)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.setLevel(level)


def _load(args):
    M = read_mass_matrix(args.mass)
    ds = read_snapshots(args.snapshots, args.times, M)
    logger.info("dataset m=%d s=%d", ds.m, ds.s)
    return M, ds


def _config(args, track_right=True):
    return IncrementalConfig(tol=args.tol, tol_sv=args.tol_sv, track_right_vectors=track_right,
                             reproject=not args.single_pass)


def cmd_run(args):
    M, ds = _load(args)
    cfg = _config(args, track_right=not args.no_right_vectors)
    state, counts = run_stream(ds.snapshots(prefetch=args.prefetch), M, cfg, args.variant)
    basis = modes_from_svd(state, M)
    temps = temporal_functions(state, ds.grid) if cfg.track_right_vectors else None
    write_results(basis, temps, state, args.out, tol=cfg.tol, tol_sv=cfg.tol_sv,
                  branches=counts, extra={"reproject": cfg.reproject})
    print(f"k={state.k} m={state.m} s={state.ell} branches={counts}")
    return EXIT_OK


def _orth(G):
    return float(np.abs(G - np.eye(G.shape[0])).max()) if G.size else 0.0


def _sigma_rel_error(S, S_ref, floor):
    """Max relative error over leading singular values with ``S_ref >= floor``."""
    n = min(S.shape[0], S_ref.shape[0])
    keep = S_ref[:n] >= floor
    if not keep.any():
        return 0.0, 0
    err = np.abs(S[:n][keep] - S_ref[:n][keep]) / S_ref[:n][keep]
    return float(err.max()), int(keep.sum())


def resolution_floor(S_ref, tol, s, check_tol, sv_floor):
    """Smallest singular value the incremental run is expected to match to ``check_tol``.

    Dropping a residual row of size below ``tol`` moves ``sigma_i^2`` by at
    most ``tol^2``, so after ``s`` updates the relative error of ``sigma_i`` is
    bounded by about ``s tol^2 / sigma_i^2``. Values below
    ``sv_floor * sigma_1`` are also excluded as unresolvable in double
    precision.
    """
    top = float(S_ref[0]) if S_ref.size else 0.0
    return max(sv_floor * top, tol * np.sqrt(s / check_tol))


def compare_checks(U, M, grid, cfg, check_tol=1e-8, sv_floor=1e-10, against=None):
    """Run both incremental variants and the oracle; return ``{name: (value, gating)}``.

    Oracle agreement only gates when no singular-value truncation was
    requested (``tol_sv == 0``) and only over resolvable singular values
    (see :func:`resolution_floor`); the error over every common value is
    reported alongside for information.
    """
    d = grid.deltas
    cols = list(zip(U.T, d))
    one, counts_one = run_stream(cols, M, cfg, Variant.ONE_WEIGHT)
    two, counts_two = run_stream(cols, M, cfg, Variant.TWO_WEIGHT)
    ref = batch_core_svd_two_weight(U, M, grid)
    floor = resolution_floor(ref.S, cfg.tol, grid.n_steps, check_tol, sv_floor)
    gate_oracle = cfg.tol_sv == 0
    checks = {}
    for name, st in (("one-weight", one), ("two-weight", two)):
        err, n_cmp = _sigma_rel_error(st.S, ref.S, floor)
        checks[f"sigma_vs_oracle[{name}]"] = (err, gate_oracle)
        checks[f"sigma_vs_oracle_all[{name}]"] = (_sigma_rel_error(st.S, ref.S, 0.0)[0], False)
    same_k = one.k == two.k
    checks["rank_one_vs_two"] = (0.0 if same_k else float(abs(one.k - two.k)), True)
    if same_k:
        scale = max(float(one.S[0]), np.finfo(float).tiny)
        checks["S_one_vs_two"] = (float(np.abs(one.S - two.S).max()) / scale, True)
        checks["V_one_vs_two"] = (float(np.abs(one.V - two.V).max()), True)
        if one.W is not None:
            checks["W_one_vs_sqrtDelta_W_two"] = (
                float(np.abs(one.W - np.sqrt(d)[:, None] * two.W).max()), True)
    checks["orth_defect_V[one-weight]"] = (_orth(one.V.T @ (M @ one.V)), True)
    checks["orth_defect_V[two-weight]"] = (_orth(two.V.T @ (M @ two.V)), True)
    if one.W is not None:
        checks["orth_defect_W[one-weight]"] = (_orth(one.W.T @ one.W), True)
        checks["orth_defect_W[two-weight]"] = (_orth(two.W.T @ (two.W * d[:, None])), True)
    if against is not None:
        checks.update(_against_checks(against, one, d))
    info = {"k_one": one.k, "k_two": two.k, "k_oracle": ref.k, "floor": floor,
            "n_compared": n_cmp,
            "branches_one": counts_one, "branches_two": counts_two}
    return checks, info


def _against_checks(res, one, d):
    """Compare a stored results directory with a fresh one-weight run."""
    out = {}
    sigma, modes, temporal = res["sigma"], res["modes"], res["temporal"]
    if sigma.shape[0] != one.k:
        out["stored_rank"] = (float(abs(sigma.shape[0] - one.k)), True)
        return out
    out["stored_sigma"] = (float(np.abs(sigma - one.S).max()) / float(one.S[0]), True)
    out["stored_modes"] = (float(np.abs(modes - one.V).max()), True)
    if temporal is not None and one.W is not None:
        if temporal.shape != one.W.shape:
            out["stored_temporal_shape"] = (float("inf"), True)
        else:
            out["stored_temporal"] = (
                float(np.abs(one.W - np.sqrt(d)[:, None] * temporal).max()), True)
    return out


def cmd_compare(args):
    M, ds = _load(args)
    against = None
    if args.against:
        against = read_results(args.against)
        summ = against["summary"]
        if summ.get("tol") is not None:
            args.tol = summ["tol"]
        if summ.get("tol_sv") is not None:
            args.tol_sv = summ["tol_sv"]
        if summ.get("reproject") is False:
            args.single_pass = True
    cfg = _config(args)
    checks, info = compare_checks(ds.matrix(), M, ds.grid, cfg, args.check_tol, args.sv_floor,
                                  against)
    failed = []
    print(f"{'check':<34} {'value':>12}  status")
    for name, (value, gating) in checks.items():
        ok = value <= args.check_tol
        status = "ok" if ok else ("FAIL" if gating else "info")
        if gating and not ok:
            failed.append(name)
        print(f"{name:<34} {value:12.3e}  {status}")
    print(f"k: one-weight={info['k_one']} two-weight={info['k_two']} oracle={info['k_oracle']}; "
          f"{info['n_compared']} singular values >= {info['floor']:.3e} gated against the oracle")
    if failed:
        print(f"equivalence check failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_oracle(args):
    M, ds = _load(args)
    U, grid = ds.matrix(), ds.grid
    if args.variant == Variant.TWO_WEIGHT.value:
        svd = batch_core_svd_two_weight(U, M, grid)
        report = verify_core_svd(U * grid.deltas, M, grid, svd, args.check_tol)
    else:
        svd = batch_core_svd_one_weight(U, M, grid)
        report = verify_core_svd(U * np.sqrt(grid.deltas), M, None, svd, args.check_tol)
    basis = modes_from_svd(svd, M)
    temps = temporal_functions(svd, grid)
    write_results(basis, temps, svd, args.out, extra={"source": "oracle",
                                                     "variant": args.variant,
                                                     "verify": report.as_dict()})
    (Path(args.out) / "verify.json").write_text(
        json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8")
    print(f"k={svd.k} verify={'pass' if report.passed else 'FAIL ' + ','.join(report.failures)}")
    return EXIT_OK if report.passed else EXIT_IO


def cmd_gen(args):
    ds = generate_heat_fem_data(args.n, args.steps, T=args.T, diffusivity=args.diffusivity,
                                seed=args.seed, grid=args.grid, ratio=args.ratio)
    paths = write_dataset(args.out, ds.mass, ds.matrix(), ds.grid, fmt=args.format)
    print(" ".join(str(p) for p in paths.values()))
    return EXIT_OK


def _add_dataset_args(p):
    p.add_argument("--mass", required=True, help="Matrix Market mass matrix")
    p.add_argument("--snapshots", required=True, help="snapshot CSV or .bin file")
    p.add_argument("--times", required=True, help="time points, one per line")


def _add_tol_args(p):
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--tol-sv", dest="tol_sv", type=float, default=0.0)
    p.add_argument("--single-pass", action="store_true",
                   help="measure the new residual with one projection pass")


def build_parser():
    parser = _Parser(prog="streampod", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    variants = [v.value for v in Variant]

    p = sub.add_parser("run", help="stream snapshots through an incremental SVD")
    _add_dataset_args(p)
    _add_tol_args(p)
    p.add_argument("--variant", choices=variants, default=Variant.ONE_WEIGHT.value)
    p.add_argument("--no-right-vectors", action="store_true")
    p.add_argument("--prefetch", type=int, default=0,
                   help="read snapshots on a producer thread with this queue size")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="check both variants against each other and the oracle")
    _add_dataset_args(p)
    _add_tol_args(p)
    p.add_argument("--check-tol", type=float, default=1e-8)
    p.add_argument("--sv-floor", type=float, default=1e-10,
                   help="never gate singular values below sv_floor * sigma_1 against the oracle")
    p.add_argument("--against", help="results directory written by 'run' to check")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="exact batch core SVD")
    _add_dataset_args(p)
    p.add_argument("--variant", choices=variants, default=Variant.TWO_WEIGHT.value)
    p.add_argument("--check-tol", type=float, default=1e-9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="generate a 1-D heat equation FEM dataset")
    p.add_argument("--n", type=int, default=32, help="number of elements")
    p.add_argument("--steps", type=int, default=64)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--diffusivity", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", choices=["uniform", "geometric"], default="uniform")
    p.add_argument("--ratio", type=float, default=1.05, help="geometric step ratio")
    p.add_argument("--format", choices=["csv", "bin"], default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (StreamPODError, OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"streampod {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
