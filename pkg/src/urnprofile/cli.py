"""Command-line entry point.

Subcommands: ``estimate`` (fit a profile from a sampled urn), ``modulus``
(evaluate one modulus program), ``witness`` (witness norms, or
``witness certify`` for the certified lower bound), ``risk-sweep`` (Monte
Carlo risk grid from a JSON config), ``impossibility`` (labeled-
distribution lower bound).

Every run writes a manifest JSON recording the full parameter set, the
master seed, the package version, wall-clock timings, and a sha256 digest
of each output file; outputs are written atomically (temp file + rename)
and all floating-point values are serialized as decimal strings that
round-trip exactly.  Exit codes: 0 success, 1 usage error, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import time
from datetime import datetime, timezone


from . import __version__
from .estimator import min_distance_estimate
from .modulus import default_truncation, signed_l1_modulus, tv_modulus
from .population import (
    fingerprint,
    profile_to_json,
    sample_bernoulli,
    urn_from_json,
)
from .risk_lab import ExperimentConfig, labeled_distribution_risk_bound, run_risk_sweep
from .witness import build_witness, certified_l1_modulus_lower

__all__ = ["main", "dispatch"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="urnprofile", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="fit a profile from a sampled urn")
    est.add_argument("--urn", required=True, help="urn JSON file")
    est.add_argument("--p", type=float, required=True)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--support-cap", default="auto")
    est.add_argument("--out", default="report.json")

    mod = sub.add_parser("modulus", help="evaluate a modulus-of-continuity program")
    mod.add_argument("--program", choices=("tv", "star"), required=True)
    mod.add_argument("--t", type=float, required=True)
    mod.add_argument("--p", type=float, required=True)
    mod.add_argument("--M", default="auto")
    mod.add_argument("--out", default="modulus.csv")

    wit = sub.add_parser("witness", help="witness norms / certified lower bound")
    wit.add_argument("mode", nargs="?", choices=("certify",), default=None)
    wit.add_argument("--beta", type=float)
    wit.add_argument("--tau", type=float, default=None)
    wit.add_argument("--t", type=float)
    wit.add_argument("--p", type=float, required=True)
    wit.add_argument("--out", default="witness.csv")

    sweep = sub.add_parser("risk-sweep", help="Monte Carlo risk sweep from a config")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--seed", type=int, default=None, help="override master seed")
    sweep.add_argument("--threads", type=int, default=None)
    sweep.add_argument("--out", default="results.csv")

    imp = sub.add_parser("impossibility", help="labeled-distribution risk lower bound")
    imp.add_argument("--k", type=int, required=True)
    imp.add_argument("--p", type=float, required=True)
    imp.add_argument("--out", default=None)

    return parser


def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".urnprofile-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _write_manifest(command: str, params: dict, seed, outputs: list, started: float,
                    out_path: str | None) -> None:
    manifest = {
        "subcommand": command,
        "parameters": params,
        "master_seed": seed,
        "version": __version__,
        "started_utc": datetime.fromtimestamp(started, tz=timezone.utc).isoformat(),
        "wall_clock_s": repr(time.time() - started),
        "outputs": {p: _digest(p) for p in outputs},
    }
    path = f"{out_path}.manifest.json" if out_path else f"urnprofile-{command}.manifest.json"
    _atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _cmd_estimate(args) -> int:
    try:
        with open(args.urn) as fh:
            urn = urn_from_json(json.load(fh))
    except FileNotFoundError:
        raise UsageError(f"urn file not found: {args.urn}")
    cap = args.support_cap if args.support_cap == "auto" else int(args.support_cap)
    observed = sample_bernoulli(urn, args.p, args.seed)
    report = min_distance_estimate(fingerprint(observed), args.p, cap)
    payload = {
        "estimate": profile_to_json(report.profile),
        "objective": repr(report.objective),
        "p": repr(report.p),
        "k": report.k,
        "seed": args.seed,
        "support_cap": report.support_cap,
        "requested_cap": report.requested_cap,
        "timings_ms": {"solve": repr(report.diagnostics["solve_ms"])},
        "lp_iterations": report.diagnostics["lp_iterations"],
    }
    _atomic_write(args.out, json.dumps(payload, indent=2) + "\n")
    return 0


def _cmd_modulus(args) -> int:
    M = None if args.M == "auto" else int(args.M)
    solver = tv_modulus if args.program == "tv" else signed_l1_modulus
    res = solver(args.t, args.p, M)
    text = _csv_text(
        ("t", "p", "M", "value_lower", "value_upper", "solve_ms"),
        [(res.t, res.p, res.M, res.value_lower, res.value_upper,
          res.diagnostics["solve_ms"])],
    )
    _atomic_write(args.out, text)
    return 0


def _cmd_witness(args) -> int:
    header = ("beta", "tau", "t", "norm_a", "weighted", "image", "certified_bound")
    if args.mode == "certify":
        if args.t is None:
            raise UsageError("witness certify requires --t")
        bound = certified_l1_modulus_lower(args.t, args.p, details=True)
        w = build_witness(bound.beta, args.p)
        rows = [(w.beta, w.tau, bound.t, w.norm_a, w.weighted_norm, w.image_norm,
                 bound.value)]
    else:
        if args.beta is None:
            raise UsageError("witness requires --beta (or the certify mode)")
        w = build_witness(args.beta, args.p, args.tau)
        rows = [(w.beta, w.tau, "", w.norm_a, w.weighted_norm, w.image_norm, "")]
    _atomic_write(args.out, _csv_text(header, rows))
    return 0


def _cmd_risk_sweep(args) -> int:
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {args.config}")
    if args.seed is not None:
        raw["master_seed"] = args.seed
    config = ExperimentConfig(
        k_grid=tuple(raw["k_grid"]),
        p_grid=tuple(raw["p_grid"]),
        seeds_per_cell=int(raw.get("seeds_per_cell", 50)),
        families=tuple(raw.get("families", ("uniform_singletons",))),
        estimators=tuple(raw.get("estimators", ("min_distance",))),
        master_seed=int(raw.get("master_seed", 0)),
        support_cap=raw.get("support_cap", "auto"),
    )
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("PROFILE_LP_THREADS", "1"))
    rows = run_risk_sweep(config, threads=threads)
    text = _csv_text(
        ("k", "p", "family", "estimator", "mean_tv", "stderr_tv", "mean_w1",
         "mean_runtime_s", "n_seeds", "error"),
        [(r.k, r.p, r.family, r.estimator, r.mean_tv, r.stderr_tv, r.mean_w1,
          r.mean_runtime_s, r.n_seeds, r.error) for r in rows],
    )
    _atomic_write(args.out, text)
    return 0


def _cmd_impossibility(args) -> int:
    value = labeled_distribution_risk_bound(args.k, args.p)
    print(repr(value))
    if args.out:
        payload = {"k": args.k, "p": repr(args.p), "lower_bound": repr(value)}
        _atomic_write(args.out, json.dumps(payload, indent=2) + "\n")
    return 0


_COMMANDS = {
    "estimate": _cmd_estimate,
    "modulus": _cmd_modulus,
    "witness": _cmd_witness,
    "risk-sweep": _cmd_risk_sweep,
    "impossibility": _cmd_impossibility,
}


def dispatch(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    started = time.time()
    params = {key: value for key, value in sorted(vars(args).items())
              if key != "command"}
    try:
        code = _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    if code == 0:
        out = getattr(args, "out", None)
        outputs = [out] if out and os.path.exists(out) else []
        _write_manifest(args.command, {k: repr(v) if isinstance(v, float) else v
                                       for k, v in params.items()},
                        getattr(args, "seed", None), outputs, started, out)
    return code


def main(argv=None) -> int:
    try:
        return dispatch(argv)
    except SystemExit as exc:  # argparse --help exits with code 0
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
