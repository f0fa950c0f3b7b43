"""Command-line interface.

Subcommands: ``stats``, ``score``, ``propagate``, ``classify``, ``demo``.
Every report is JSON with a ``config`` header echoing the tolerances and
seed that produced it, full-precision values, and a two-decimal
half-even ``display`` block for table comparisons.  Stochastic
subcommands require ``--seed`` and are byte-identical on rerun.

Exit codes: 0 success, 2 parse/usage error, 3 validation error,
4 numerical error.  ``NOMINAL_UQ_THREADS`` caps row-level parallelism
(default 1); output ordering never depends on it.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

import numpy as np

from . import __version__
from .bayes import BayesianQDA, synth_gaussian_dataset
from .dispersion import STATISTIC_NAMES, report_all, summarize
from .errors import (
    EmptyInputError,
    NumericalError,
    ParseError,
    ValidationError,
)
from .formats import (
    read_feature_table,
    read_labeled_probs,
    read_model_spec,
    read_pmf_rows,
    write_feature_table_csv,
    write_json_report,
    write_labeled_probs_csv,
)
from .pmf import EPS_MODE, EPS_NORM, Pmf
from .propagate import ConditionalQuantModel, analytic_mean, analytic_variance, mc_propagate
from .scoring import EPS_CLIP, LabeledProbabilities, confusion, ebs, exe

DEFAULT_HISTOGRAM_BINS = 64


def display_round(value):
    """Two-decimal display value, ties rounded half-even."""
    return str(Decimal(repr(float(value))).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def thread_count():
    raw = os.environ.get("NOMINAL_UQ_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(
            f"NOMINAL_UQ_THREADS={raw!r} is not an integer") from None


def _map_ordered(fn, items):
    """Map preserving input order, optionally across threads."""
    workers = thread_count()
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _config_block(args, **extra):
    block = {
        "subcommand": args.subcommand,
        "eps_norm": args.eps_norm,
        "eps_mode": args.eps_mode,
        "eps_clip": args.eps_clip,
        "alpha": args.alpha,
        "histogram_bins": getattr(args, "histogram_bins", DEFAULT_HISTOGRAM_BINS),
        "seed": getattr(args, "seed", None),
        "tie_rule": getattr(args, "tie_rule", "lowest-index"),
    }
    block.update(extra)
    return block


def _stats_payload(rows, args):
    """Per-row uncertainty reports plus per-statistic summaries."""
    if not rows:
        raise EmptyInputError("input holds no PMF rows")

    def one(indexed):
        i, values = indexed
        try:
            pmf = Pmf(values, eps_norm=args.eps_norm)
            return report_all(pmf, alpha=args.alpha, eps_mode=args.eps_mode)
        except ValidationError as err:
            raise ValidationError(f"row {i + 1}: {err}") from None

    reports = _map_ordered(one, list(enumerate(rows)))
    row_blocks = []
    for i, report in enumerate(reports):
        values = report.as_dict()
        row_blocks.append({
            "row": i + 1,
            "values": values,
            "display": {k: display_round(v) for k, v in values.items()},
        })
    summary = {}
    for name in STATISTIC_NAMES:
        s = summarize([getattr(r, name) for r in reports], statistic=name)
        summary[name] = s.as_dict()
    return row_blocks, summary


def cmd_stats(args):
    rows, class_names = read_pmf_rows(args.input, args.format)
    row_blocks, summary = _stats_payload(rows, args)
    report = {
        "config": _config_block(args, input=str(args.input)),
        "n_rows": len(row_blocks),
        "class_names": class_names,
        "statistics": list(STATISTIC_NAMES),
        "rows": row_blocks,
        "summary": summary,
    }
    write_json_report(args.output, report)
    return 0


def _score_payload(data, args):
    matrix = confusion(data, tie_rule=args.tie_rule, eps_mode=args.eps_mode)
    values = {
        "classification_loss": matrix.classification_loss,
        "exe": exe(data, eps_clip=args.eps_clip),
        "ebs": ebs(data),
    }
    return {
        "n_observations": data.n_observations,
        "n_classes": data.n_classes,
        **values,
        "display": {k: display_round(v) for k, v in values.items()},
        "confusion": matrix.as_dict(),
    }


def cmd_score(args):
    data = read_labeled_probs(args.input, args.format, eps_norm=args.eps_norm)
    report = {"config": _config_block(args, input=str(args.input))}
    report.update(_score_payload(data, args))
    write_json_report(args.output, report)
    return 0


def cmd_propagate(args):
    model = ConditionalQuantModel.from_spec(read_model_spec(args.model))
    rows, _ = read_pmf_rows(args.input, args.format)
    if len(rows) != 1:
        raise ValidationError(
            f"propagate expects exactly one PMF row, got {len(rows)}")
    pmf = Pmf(rows[0], eps_norm=args.eps_norm)
    analytic = {
        "mean": analytic_mean(pmf, model),
        "variance": analytic_variance(pmf, model),
    }
    mc_block = None
    if args.mc_samples is not None:
        if args.seed is None:
            raise ValidationError("--mc-samples needs --seed for reproducibility")
        rng = np.random.default_rng(args.seed)
        result = mc_propagate(pmf, model, args.mc_samples, rng,
                              histogram_bins=args.histogram_bins)
        mc_block = result.as_dict()
    report = {
        "config": _config_block(args, input=str(args.input), model=str(args.model),
                                mc_samples=args.mc_samples),
        "regimes": {
            "names": list(model.names) if model.names else None,
            "means": model.means.tolist(),
            "sds": model.sds.tolist() if model.sds is not None else None,
        },
        "pmf": pmf.probs.tolist(),
        "analytic": analytic,
        "display": {k: display_round(v) for k, v in analytic.items()},
        "monte_carlo": mc_block,
    }
    write_json_report(args.output, report)
    return 0


def _classify_chain(train_X, train_y, test_X, test_y, out_dir, args):
    """Fit, predict the test set, and emit predictions + chained reports."""
    if args.method == "mc" and args.seed is None:
        raise ValidationError("--method mc needs --seed for reproducibility")
    estimator = BayesianQDA(
        method=args.method,
        posterior_samples=args.posterior_samples,
        random_state=args.seed,
    ).fit(train_X, train_y)
    probs = estimator.predict_proba(test_X)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    predictions_path = out_dir / "predictions.csv"
    internal_labels = np.searchsorted(estimator.classes_, test_y)
    write_labeled_probs_csv(predictions_path, probs, internal_labels)

    row_blocks, summary = _stats_payload([row.tolist() for row in probs], args)
    stats_report = {
        "config": _config_block(args, predictions=predictions_path.name,
                                method=args.method,
                                posterior_samples=args.posterior_samples),
        "n_rows": len(row_blocks),
        "class_names": None,
        "statistics": list(STATISTIC_NAMES),
        "rows": row_blocks,
        "summary": summary,
    }
    write_json_report(out_dir / "stats_report.json", stats_report)

    data = LabeledProbabilities(probs, internal_labels, eps_norm=args.eps_norm)
    score_report = {
        "config": _config_block(args, predictions=predictions_path.name,
                                method=args.method,
                                posterior_samples=args.posterior_samples),
    }
    score_report.update(_score_payload(data, args))
    write_json_report(out_dir / "score_report.json", score_report)
    return 0


def cmd_classify(args):
    train_X, train_y = read_feature_table(args.train, args.format)
    test_X, test_y = read_feature_table(args.test, args.format)
    if set(np.unique(test_y)) - set(np.unique(train_y)):
        raise ValidationError("test set holds labels never seen in training")
    return _classify_chain(train_X, train_y, test_X, test_y,
                           args.output_dir, args)


def cmd_demo(args):
    """Synthesize a K-class Gaussian dataset, then run the classify chain.

    Class means sit on a ring with chord spacing ``--separation`` (in
    units of the common unit covariance), so small separations overlap
    heavily and large ones give a confident classifier.
    """
    if args.seed is None:
        raise ValidationError("demo is stochastic; --seed is required")
    K, d = args.classes, args.dim
    if K < 2 or d < 1:
        raise ValidationError("need --classes >= 2 and --dim >= 1")
    angles = 2.0 * np.pi * np.arange(K) / K
    # chord between adjacent means equals --separation
    radius = args.separation / (2.0 * np.sin(np.pi / K)) if K > 1 else 0.0
    means = np.zeros((K, d))
    means[:, 0] = radius * np.cos(angles)
    if d > 1:
        means[:, 1] = radius * np.sin(angles)
    covs = np.stack([np.eye(d)] * K)
    weights = np.full(K, 1.0 / K)
    rng = np.random.default_rng(args.seed)
    train = synth_gaussian_dataset(means, covs, weights, args.train_size, rng)
    test = synth_gaussian_dataset(means, covs, weights, args.test_size, rng)

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_feature_table_csv(out_dir / "train.csv", train.inputs, train.labels)
    write_feature_table_csv(out_dir / "test.csv", test.inputs, test.labels)
    return _classify_chain(train.inputs, train.labels, test.inputs, test.labels,
                           out_dir, args)


def _add_common(parser, *, seed_help="seed for stochastic paths"):
    parser.add_argument("--eps-norm", type=float, default=EPS_NORM,
                        help="tolerance on each PMF sum (default %(default)g)")
    parser.add_argument("--eps-mode", type=float, default=EPS_MODE,
                        help="relative mode-tie tolerance (default %(default)g)")
    parser.add_argument("--eps-clip", type=float, default=EPS_CLIP,
                        help="cross-entropy probability clip (default %(default)g)")
    parser.add_argument("--alpha", type=float, default=1.0,
                        help="quadratic-entropy order in (0,1] (default %(default)s)")
    parser.add_argument("--seed", type=int, default=None, help=seed_help)
    parser.add_argument("--tie-rule", choices=("lowest-index", "error"),
                        default="lowest-index",
                        help="argmax tie handling (default %(default)s)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nominal-uq",
        description="Uncertainty evaluation for nominal properties.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("stats", help="dispersion statistics of PMF rows")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--format", choices=("csv", "json"), default=None,
                   help="input format (default: from file suffix)")
    _add_common(p)
    p.set_defaults(run=cmd_stats)

    p = sub.add_parser("score", help="proper scores and confusion matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--format", choices=("csv", "json"), default=None)
    _add_common(p)
    p.set_defaults(run=cmd_score)

    p = sub.add_parser("propagate",
                       help="propagate a PMF through a conditional model")
    p.add_argument("--model", required=True, help="model spec JSON")
    p.add_argument("--input", required=True, help="single-row PMF table")
    p.add_argument("--output", required=True)
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--mc-samples", type=int, default=None,
                   help="Monte Carlo draws (also requires --seed)")
    p.add_argument("--histogram-bins", type=int, default=DEFAULT_HISTOGRAM_BINS,
                   help="bins for the MC output histogram (default %(default)s)")
    _add_common(p)
    p.set_defaults(run=cmd_propagate)

    p = sub.add_parser("classify",
                       help="fit Bayesian QDA, emit predictive PMFs + reports")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--method", choices=("closed-form", "mc", "plug-in"),
                   default="closed-form")
    p.add_argument("--posterior-samples", type=int, default=1000,
                   help="parameter draws for --method mc (default %(default)s)")
    _add_common(p)
    p.set_defaults(run=cmd_classify)

    p = sub.add_parser("demo",
                       help="synthetic end-to-end run (generate, fit, report)")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--separation", type=float, default=6.0,
                   help="spacing between adjacent class means (default %(default)s)")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--train-size", type=int, default=600)
    p.add_argument("--test-size", type=int, default=1000)
    p.add_argument("--method", choices=("closed-form", "mc", "plug-in"),
                   default="closed-form")
    p.add_argument("--posterior-samples", type=int, default=1000)
    _add_common(p, seed_help="seed for data synthesis (required)")
    p.set_defaults(run=cmd_demo)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except ParseError as err:
        print(f"nominal-uq: parse error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"nominal-uq: i/o error: {err}", file=sys.stderr)
        return 2
    except ValidationError as err:
        print(f"nominal-uq: validation error: {err}", file=sys.stderr)
        return 3
    except NumericalError as err:
        print(f"nominal-uq: numerical error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
