"""Command-line interface.

Subcommands
    estimate   watermark-proportion report for a pivotal-sample file
    sweep      Monte Carlo MAE sweep over a grid of true proportions
    mle-bias   regularized-MLE bias demonstration for binary mixtures
    simulate   keyed autoregressive token-stream generation (plus edits)
    verify     recompute pivotal statistics from tokens and estimate
    keygen     create a verifier key file

Exit codes: 0 success; 2 parse or validation failure; 3 degenerate
statistics (non-identifiable or non-convergent); 4 I/O failure.
Randomized subcommands refuse to run without --seed unless --entropy is
passed, in which case the chosen seed is reported on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import secrets
import sys

import numpy as np

from .errors import (ConvergenceError, DegenerateDenominator, DomainError,
                     EmptyDataset, ParseError)
from .estimators import EstimatorConfig, estimate_report, format_delta
from .fileio import (StreamRecord, generate_key, load_key, read_pivots,
                     read_streams, save_key, write_streams)
from .mle_bias import BinaryMixtureParams, run_mle_bias
from .rng import derive_key
from .simulate import (EditSpec, NtpSimConfig, apply_edits,
                       simulate_token_stream, simulate_watermarked_pivots)
from .sweep import SweepConfig, run_sweep, write_sweep_csv
from .verifier import TokenRecord, VerifierKey, pivotal_sequence
from .watermarks import Scheme

_S_EDIT = 13
_S_VREF = 17
_DEFAULT_DELTAS = (0.1, 0.01, 0.001)


def _add_scheme_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", choices=("gumbel", "inverse", "greenred"),
                   default="gumbel")
    p.add_argument("--gamma", type=float, default=0.5,
                   help="green-list fraction (greenred only)")
    p.add_argument("--delta-gr", type=float, default=2.0,
                   help="green-list logit boost (greenred only)")
    p.add_argument("--vocab", type=int, default=1000)
    p.add_argument("--delta-dom", type=float, default=0.1,
                   help="dominance parameter: largest NTP probability stays "
                        "below 1 minus this")


def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta", type=float, action="append", default=None,
                   help="CDF cutoff for the INI/RFN estimators (repeatable; "
                        "default 0.1 0.01 0.001)")
    p.add_argument("--eps-min", type=float, default=1e-3)
    p.add_argument("--bins", type=int, default=500)
    p.add_argument("--mc-parity", action="store_true",
                   help="evaluate null integrals by Monte Carlo instead of "
                        "the closed form")


def _add_seed_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--entropy", action="store_true",
                   help="allow running without --seed by drawing one")


def _scheme_from(args) -> Scheme:
    if args.scheme == "gumbel":
        return Scheme.gumbel_max()
    if args.scheme == "inverse":
        return Scheme.inverse_transform()
    return Scheme.green_red(args.gamma, args.delta_gr)


def _est_cfg(args) -> EstimatorConfig:
    deltas = tuple(args.delta) if args.delta else _DEFAULT_DELTAS
    return EstimatorConfig(deltas=deltas, eps_min=args.eps_min,
                           bins=args.bins, mc_parity=args.mc_parity)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    if not args.entropy:
        raise DomainError(
            "this subcommand is randomized: pass --seed for reproducible "
            "output, or --entropy to draw a seed")
    seed = secrets.randbits(63)
    print(f"drew seed {seed}", file=sys.stderr)
    return seed


def _fmt(v: float) -> str:
    return np.format_float_positional(v, unique=True, trim="0")


def _cmd_estimate(args) -> int:
    data = read_pivots(args.data)
    ref = read_pivots(args.reference)
    report = estimate_report(data, ref, _est_cfg(args))
    json.dump(report.to_json_dict(), sys.stdout, indent=2)
    print()
    return 0


def _cmd_sweep(args) -> int:
    seed = _resolve_seed(args)
    cfg = SweepConfig(scheme=_scheme_from(args), eps_grid=args.eps_grid,
                      n=args.n, trials=args.trials, delta_dom=args.delta_dom,
                      vocab=args.vocab, seed=seed, est=_est_cfg(args))
    result = run_sweep(cfg)
    write_sweep_csv(args.out, result)
    print(f"wrote {len(result.rows)} rows and {len(result.summaries)} "
          f"summary rows to {args.out}", file=sys.stderr)
    return 0


def _cmd_mle_bias(args) -> int:
    seed = _resolve_seed(args)
    params = BinaryMixtureParams(gamma=args.gamma, mu=args.mu, eps=0.0,
                                 n=args.n, lam=args.lam)
    rows = run_mle_bias(params, np.linspace(0.0, 1.0, args.eps_grid), seed)
    with open(args.out, "w", encoding="ascii", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("true_eps", "e_hat", "mle_eps", "mle_mu",
                    "limit_eps", "limit_mu"))
        for r in rows:
            w.writerow((_fmt(r.true_eps), _fmt(r.e_hat), _fmt(r.mle_eps),
                        _fmt(r.mle_mu), _fmt(r.limit_eps), _fmt(r.limit_mu)))
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
    return 0


def _cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    scheme = _scheme_from(args)
    key = VerifierKey(load_key(args.key_file), m=args.m)
    cfg = NtpSimConfig(vocab=args.vocab, delta_dom=args.delta_dom, seed=seed)
    stream = simulate_token_stream(args.eps, args.n, scheme, cfg, key,
                                   masking=args.masking)
    if args.edit is not None:
        outcome = apply_edits(stream, EditSpec(args.edit, args.edit_rate,
                                               seed=derive_key(seed, _S_EDIT)),
                              args.vocab, args.m)
        stream, true_eps = outcome.stream, outcome.true_eps
    else:
        length = len(stream)
        tail = stream.wm_flags[args.m:] if length > args.m else stream.wm_flags[:0]
        true_eps = float(tail.mean()) if tail.size else 0.0
    write_streams(args.out, [StreamRecord(stream.tokens, stream.wm_flags,
                                          true_eps)])
    print(f"wrote 1 stream of {len(stream)} tokens to {args.out} "
          f"(true_eps {true_eps:.4f})", file=sys.stderr)
    return 0


def _cmd_verify(args) -> int:
    seed = _resolve_seed(args)
    scheme = _scheme_from(args)
    key = VerifierKey(load_key(args.key_file), m=args.m)
    records = read_streams(args.streams)
    ref = simulate_watermarked_pivots(
        scheme, NtpSimConfig(vocab=args.vocab, delta_dom=args.delta_dom,
                             seed=derive_key(seed, _S_VREF)), args.ref_n)
    cfg = _est_cfg(args)
    out = []
    for idx, rec in enumerate(records):
        pivots = pivotal_sequence(TokenRecord(rec.tokens, args.vocab), key, scheme)
        report = estimate_report(pivots, ref, cfg)
        out.append({"stream_index": idx, "n_pivots": int(pivots.size),
                    "true_eps": rec.true_eps, "estimate": report.to_json_dict()})
    json.dump(out, sys.stdout, indent=2)
    print()
    return 0


def _cmd_keygen(args) -> int:
    if args.seed is None and not args.entropy:
        raise DomainError(
            "keygen is randomized: pass --seed for a reproducible test key, "
            "or --entropy for a fresh secret")
    key = generate_key(args.seed)
    save_key(args.out, key)
    print(f"wrote key to {args.out}", file=sys.stderr)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wmprop",
        description="Estimate the watermarked proportion of mixed-source "
                    "pivotal-statistic streams.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="report for a pivotal-sample file")
    p.add_argument("data", help="pivotal sample file ('y' header)")
    p.add_argument("reference", help="purely watermarked pivotal sample file")
    _add_estimator_flags(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("sweep", help="Monte Carlo MAE sweep to CSV")
    _add_scheme_flags(p)
    _add_estimator_flags(p)
    _add_seed_flags(p)
    p.add_argument("--eps-grid", type=int, default=200,
                   help="number of uniformly spaced true proportions in [0,1]")
    p.add_argument("--n", type=int, default=100_000,
                   help="samples per dataset")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("mle-bias", help="regularized-MLE bias CSV")
    _add_seed_flags(p)
    p.add_argument("--gamma", type=float, default=0.3)
    p.add_argument("--mu", type=float, default=0.9)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-2)
    p.add_argument("--eps-grid", type=int, default=21)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mle_bias)

    p = sub.add_parser("simulate", help="keyed token-stream generation")
    _add_scheme_flags(p)
    _add_seed_flags(p)
    p.add_argument("--eps", type=float, required=True,
                   help="per-step probability of using the watermark decoder")
    p.add_argument("--n", type=int, default=5000, help="stream length")
    p.add_argument("--m", type=int, default=4, help="context window length")
    p.add_argument("--key-file", required=True)
    p.add_argument("--masking", action="store_true",
                   help="skip the watermark on repeated m-token contexts")
    p.add_argument("--edit", choices=("substitution", "deletion", "insertion"),
                   default=None)
    p.add_argument("--edit-rate", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="recompute pivotal statistics and estimate")
    p.add_argument("streams", help="JSONL token streams")
    _add_scheme_flags(p)
    _add_estimator_flags(p)
    _add_seed_flags(p)
    p.add_argument("--m", type=int, default=4, help="context window length")
    p.add_argument("--key-file", required=True)
    p.add_argument("--ref-n", type=int, default=100_000,
                   help="synthetic watermarked reference sample size")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("keygen", help="create a verifier key file")
    _add_seed_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_keygen)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        where = f" (line {exc.line})" if exc.line is not None else ""
        print(f"error: {exc}{where}", file=sys.stderr)
        return 2
    except (DomainError, EmptyDataset) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DegenerateDenominator, ConvergenceError) as exc:
        print(f"error: degenerate statistics: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
