"""Command-line front end.

Subcommands: simulate, correlate, analytic, fit rabi, cavity-check, calibrate.
All outputs are CSV or JSON; plotting is left to external tools.  Exit codes:
0 success, 1 validation/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analytic, cavity, estimator, fit, traceio, trajectory
from .errors import QubitCorrError, TraceFormatError
from .model import load_config, require_valid


class _UsageError(Exception):
    def __init__(self, message: str, parser: argparse.ArgumentParser):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse hook
        raise _UsageError(message, self)


def _pair_list(text: str) -> list[tuple[str, str]]:
    pairs = []
    for name in text.split(","):
        pair = traceio.NAME_PAIRS.get(name.strip())
        if pair is None:
            raise ValueError(f"unknown pair {name!r}; use zz,zphi,phiz,phiphi")
        pairs.append(pair)
    return pairs


def _float_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError("expected two comma-separated numbers")
    return float(parts[0]), float(parts[1])


def _build_parser() -> _Parser:
    parser = _Parser(prog="qubitcorr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a trace ensemble", parents=[])
    p.add_argument("--config", required=True, help="setup/config JSON")
    p.add_argument("--out", required=True, help="output QTRC file")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: QUBITCORR_THREADS or all cores)")

    p = sub.add_parser("correlate", help="estimate correlators from traces")
    p.add_argument("--traces", required=True, help="input QTRC file")
    p.add_argument("--window", type=_float_pair, required=True, metavar="T_A,T_B")
    p.add_argument("--max-lag", type=float, required=True)
    p.add_argument("--calibration", default="identity",
                   help="'identity' or a calibration JSON file")
    p.add_argument("--pairs", type=_pair_list, default=_pair_list("zz,zphi,phiz,phiphi"))
    p.add_argument("--resamples", type=int, default=100, help="bootstrap resamples")
    p.add_argument("--stderr-seed", type=int, default=0)
    p.add_argument("--compare", default=None,
                   help="analytic curve CSV; prints per-pair max |z| over positive lags")
    p.add_argument("--out", required=True, help="output correlator CSV")

    p = sub.add_parser("analytic", help="closed-form correlator curves")
    p.add_argument("--config", required=True)
    p.add_argument("--pairs", type=_pair_list, default=_pair_list("zz,zphi,phiz,phiphi"))
    p.add_argument("--max-lag", type=float, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="parameter fits from correlator curves")
    fit_sub = p.add_subparsers(dest="fit_what", required=True)
    pr = fit_sub.add_parser("rabi", help="residual Rabi rate from K_zphi - K_phiz")
    pr.add_argument("--curve", required=True, help="correlator CSV with zphi and phiz columns")
    pr.add_argument("--config", required=True, help="setup JSON (mismatch ignored)")
    pr.add_argument("--lag-range", type=_float_pair, default=None, metavar="LO,HI")
    pr.add_argument("--out", required=True, help="output JSON")

    p = sub.add_parser("cavity-check", help="resonator output-noise cancellation")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--kappa-out", type=float, required=True)
    p.add_argument("--detuning", type=float, default=0.0)
    p.add_argument("--max-lag", type=float, default=None, help="default 10/kappa")
    p.add_argument("--n-lags", type=int, default=200)
    p.add_argument("--out", required=True, help="CSV: tau,K2,K3,K2_plus_K3")
    p.add_argument("--noise-out", default=None, help="optional CSV of simulated t,ReF")
    p.add_argument("--dt", type=float, default=None, help="noise sim step (default 0.01/kappa)")
    p.add_argument("--duration", type=float, default=None,
                   help="noise sim duration (default 1000/kappa)")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("calibrate", help="responses and offsets from +-z ensembles")
    p.add_argument("--plus", required=True, help="QTRC of traces started at +1")
    p.add_argument("--minus", required=True, help="QTRC of traces started at -1")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output JSON")

    return parser


def _cmd_simulate(args) -> int:
    setup, config = load_config(args.config)
    require_valid(setup, config)
    with traceio.TraceWriter(args.out, setup, config) as writer:
        trajectory.simulate_ensemble(setup, config, writer, threads=args.threads)
    print(f"wrote {config.n_traces} traces to {args.out}")
    return 0


def _cmd_correlate(args) -> int:
    records, _setup, _config = traceio.read_traces(args.traces)
    t_a, t_b = args.window
    window = estimator.EstimatorWindow(t_a=t_a, t_b=t_b, max_lag=args.max_lag)
    if args.calibration == "identity":
        calibration = estimator.Calibration.identity()
    else:
        calibration = traceio.load_calibration(args.calibration)
    curves = estimator.estimate_all_pairs(
        records, window, calibration, pairs=args.pairs,
        stderr_resamples=args.resamples, stderr_seed=args.stderr_seed,
    )
    traceio.write_correlators_csv(args.out, curves)
    print(f"wrote correlators ({len(records)} traces) to {args.out}")
    if args.compare is not None:
        reference = traceio.read_correlators_csv(args.compare)
        worst = 0.0
        for pair, curve in curves.items():
            if pair not in reference:
                continue
            ref = reference[pair]
            mask = curve.lags > 0
            ref_vals = np.interp(curve.lags[mask], ref.lags, ref.values)
            z = np.abs(curve.values[mask] - ref_vals) / curve.stderr[mask]
            k = int(np.argmax(z))
            name = traceio.PAIR_NAMES[pair]
            print(f"compare {name}: max |z| = {z[k]:.3f} at tau = {curve.lags[mask][k]:.6g}")
            worst = max(worst, float(z[k]))
        print(f"compare overall: max |z| = {worst:.3f}")
    return 0


def _cmd_analytic(args) -> int:
    setup, config = load_config(args.config)
    require_valid(setup, config)
    curves = analytic.analytic_curves(setup, args.max_lag, config.dt, pairs=tuple(args.pairs))
    traceio.write_correlators_csv(args.out, curves)
    print(f"wrote analytic correlators to {args.out}")
    return 0


def _cmd_fit_rabi(args) -> int:
    curves = traceio.read_correlators_csv(args.curve)
    if ("z", "phi") not in curves or ("phi", "z") not in curves:
        raise TraceFormatError("curve CSV must contain K_zphi and K_phiz columns")
    kzp = curves[("z", "phi")]
    kpz = curves[("phi", "z")]
    stderr = None
    if kzp.stderr is not None and kpz.stderr is not None:
        stderr = np.sqrt(np.square(kzp.stderr) + np.square(kpz.stderr))
    antisym = analytic.CorrelatorCurve(
        lags=kzp.lags, values=kzp.values - kpz.values, stderr=stderr, labels=("z", "phi")
    )
    setup, _config = load_config(args.config)
    result = fit.fit_rabi_mismatch(antisym, setup, lag_range=args.lag_range)
    traceio.dump_fit_result(args.out, "rabi_mismatch", result)
    print(f"rabi_mismatch = {result.value:.6g} +- {result.stderr:.3g} rad/us "
          f"({result.n_points} lags)")
    return 0


def _cmd_cavity_check(args) -> int:
    params = cavity.ResonatorParams(
        kappa=args.kappa, kappa_out=args.kappa_out, detuning=args.detuning
    )
    max_lag = args.max_lag if args.max_lag is not None else 10.0 / params.kappa
    taus = np.linspace(max_lag / args.n_lags, max_lag, args.n_lags)
    import csv as _csv

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["tau", "K2", "K3", "K2_plus_K3"])
        for tau in taus:
            k2, k3 = cavity.analytic_noise_terms(params, float(tau))
            writer.writerow([repr(float(tau)), repr(k2), repr(k3), repr(k2 + k3)])
    print(f"wrote cancellation check to {args.out}")

    if args.noise_out is not None:
        dt = args.dt if args.dt is not None else 0.01 / params.kappa
        duration = args.duration if args.duration is not None else 1000.0 / params.kappa
        samples = cavity.simulate_output_noise(params, dt, duration, args.seed)
        with open(args.noise_out, "w", newline="", encoding="utf-8") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["t", "ReF"])
            for n, value in enumerate(samples):
                writer.writerow([repr(n * dt), repr(float(value))])
        print(f"wrote {samples.size} noise samples to {args.noise_out}")
    return 0


def _cmd_calibrate(args) -> int:
    plus, _s1, _c1 = traceio.read_traces(args.plus)
    minus, _s2, _c2 = traceio.read_traces(args.minus)
    setup, _config = load_config(args.config)
    responses = estimator.calibrate_response(plus, minus, setup)
    offsets = estimator.estimate_offsets(plus, minus)
    doc = {
        "response_z": responses.response_z,
        "response_phi": responses.response_phi,
        "offset_z": offsets.offset_z,
        "offset_phi": offsets.offset_phi,
        "residual_norm_z": responses.residual_norm_z,
        "residual_norm_phi": responses.residual_norm_phi,
        "offset_stderr_z": offsets.stderr_z,
        "offset_stderr_phi": offsets.stderr_phi,
        "offset_variation_z": offsets.variation_z,
        "offset_variation_phi": offsets.variation_phi,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"responses ({responses.response_z:.4g}, {responses.response_phi:.4g}), "
          f"offsets ({offsets.offset_z:+.4g}, {offsets.offset_phi:+.4g}) -> {args.out}")
    return 0


_DISPATCH = {
    "simulate": _cmd_simulate,
    "correlate": _cmd_correlate,
    "analytic": _cmd_analytic,
    "cavity-check": _cmd_cavity_check,
    "calibrate": _cmd_calibrate,
}


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        if args.command == "fit":
            return _cmd_fit_rabi(args)
        return _DISPATCH[args.command](args)
    except TraceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (QubitCorrError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
