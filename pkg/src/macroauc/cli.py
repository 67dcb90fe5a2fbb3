"""Command-line driver: ``macroauc <command> [options]``.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure,
4 model/dataset shape mismatch.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .bounds import (BoundQuery, ModelConstants, analytic_rademacher_bound, bound,
                     bound_corollary, estimate_model_constants, write_bounds_csv)
from .dataset import (FORMATS, SCALINGS, DatasetError, DegenerateLabelWarning, emit_imbalance_profile,
                      label_stats, load_dataset, split, stats_from_counts)
from .depgraph import mc_fractional_rademacher
from .experiment import LAMBDA_GRID, cross_validate, evaluate, fit_model
from .loss import CLI_NAMES
from .optim import TrainConfig, TrainingDivergedError
from .risk import (LinearModel, ShapeMismatchError, empirical_risk_pa, empirical_risk_u1,
                   empirical_risk_u2)
from .verify import SUITES, run_suites

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_SHAPE = 0, 2, 3, 4

PA_LARGE_N = 5000

# option defaults; kept out of argparse so a config file can fill the gaps
DEFAULTS = {
    "format": "svmlight-multilabel",
    "algo": "u2",
    "loss": "logistic2",
    "lambda": 1e-2,
    "lambda_grid": ",".join(f"{g:g}" for g in LAMBDA_GRID),
    "folds": 3,
    "reps": 5,
    "test_frac": 1 / 3,
    "seed": 0,
    "delta": 0.01,
    "epochs": 30,
    "inner": None,
    "eta0": None,
    "tol": 1e-6,
    "variant": "imb2",
    "out": "macroauc-out",
    "scale": "standardize",
    "jobs": 1,
    "suite": "all",
    "max_pq": 30,
    "radius": 1.0,
    "draws": 2000,
    "labels": None,
    "losses": "hinge,logistic2",
}

COMMAND_DEFAULTS = {"cv": {"algo": "pa,u1,u2"}, "train": {"test_frac": None}}


class UsageError(Exception):
    pass


def _floats(text):
    try:
        vals = [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _algos(text):
    vals = [t.strip() for t in str(text).split(",") if t.strip()]
    bad = [v for v in vals if v not in ("pa", "u1", "u2")]
    if bad or not vals:
        raise argparse.ArgumentTypeError(f"algorithms must be drawn from pa,u1,u2; got {text!r}")
    return vals


def _losses(text):
    vals = [t.strip() for t in str(text).split(",") if t.strip()]
    known = set(CLI_NAMES.values())
    bad = [v for v in vals if v not in known]
    if bad or not vals:
        raise argparse.ArgumentTypeError(f"losses must be drawn from {','.join(sorted(known))}; got {text!r}")
    return vals


def _ints(text):
    return [int(t) for t in str(text).split(",") if t.strip()]


def read_config(path) -> dict:
    """Flat ``key=value`` file; ``#`` starts a comment, dashes and underscores are interchangeable."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value")
                key, val = (s.strip() for s in line.split("=", 1))
                out[key.replace("-", "_")] = val
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="macroauc", description="Macro-AUC learning toolkit for multi-label data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--config", help="key=value file; command-line flags take precedence")
        if data:
            p.add_argument("--data", required=False, help="dataset file")
            p.add_argument("--format", choices=FORMATS)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")

    def training(p):
        p.add_argument("--loss", choices=sorted(set(CLI_NAMES.values())))
        p.add_argument("--epochs", type=int)
        p.add_argument("--inner", type=int, help="inner iterations per epoch (default 2n)")
        p.add_argument("--eta0", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--scale", choices=SCALINGS)

    p = sub.add_parser("stats", help="label-wise imbalance statistics")
    common(p)

    p = sub.add_parser("train", help="train one model")
    common(p)
    training(p)
    p.add_argument("--algo", choices=("pa", "u1", "u2"))
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--test-frac", type=float, help="hold out this fraction before training")

    p = sub.add_parser("eval", help="Macro-AUC of a saved model")
    common(p)
    p.add_argument("--model", required=True)

    p = sub.add_parser("bounds", help="generalization-bound values for saved models")
    common(p)
    p.add_argument("--model", required=True, nargs="+")
    p.add_argument("--delta", type=float)
    p.add_argument("--variant", choices=("imb2", "imb1"))

    p = sub.add_parser("cv", help="repeated split + k-fold lambda search")
    common(p)
    training(p)
    p.add_argument("--algo", type=_algos, help="comma-separated subset of pa,u1,u2")
    p.add_argument("--lambda-grid", type=_floats)
    p.add_argument("--folds", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--test-frac", type=float)
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("verify", help="run the property suites")
    common(p, data=False)
    p.add_argument("--suite", choices=("all",) + SUITES)
    p.add_argument("--max-pq", type=int)
    p.add_argument("--inject-bug", action="store_true", help="flip one chain inequality (self-test)")
    p.add_argument("--losses", type=_losses, help="comma-separated base losses for the chain suite")

    p = sub.add_parser("rademacher", help="Monte-Carlo fractional Rademacher estimate")
    common(p)
    p.add_argument("--radius", type=float, help="weight-norm radius Lambda")
    p.add_argument("--draws", type=int)
    p.add_argument("--labels", type=_ints, help="comma-separated 0-based label indices")
    return parser


def resolve(parser, argv):
    """Parse ``argv``, then fill unset options from ``--config`` and the defaults."""
    args = parser.parse_args(argv)
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    types = {k: a.type for k, a in actions.items()}
    for key, val in cfg.items():
        if key not in types or key == "config":
            raise UsageError(f"unknown config key {key!r} for '{args.command}'")
        if getattr(args, key) is None:
            conv = types[key]
            try:
                val = conv(val) if conv else val
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {key}: {exc}") from None
            if actions[key].choices is not None and val not in actions[key].choices:
                raise UsageError(f"config key {key}: {val!r} is not one of {sorted(actions[key].choices)}")
            setattr(args, key, val)
    defaults = {**DEFAULTS, **COMMAND_DEFAULTS.get(args.command, {})}
    for key, val in defaults.items():
        if hasattr(args, key) and getattr(args, key) is None:
            conv = types.get(key)
            setattr(args, key, conv(val) if (conv and isinstance(val, str)) else val)
    return args


def config_header(args) -> str:
    lines = [f"macroauc {__version__} {args.command}"]
    for key in sorted(vars(args)):
        if key in ("command", "config"):
            continue
        val = getattr(args, key)
        if isinstance(val, list):
            val = ",".join(str(v) for v in val)
        lines.append(f"{key}={val}")
    return "\n".join(lines)


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _load(args):
    if not args.data:
        raise UsageError("--data is required")
    if not os.path.exists(args.data):
        raise UsageError(f"dataset not found: {args.data}")
    return load_dataset(args.data, format=args.format)


def _train_config(args):
    return TrainConfig(epochs=args.epochs, inner=args.inner, eta0=args.eta0, seed=args.seed, tol=args.tol)


# ---------------------------------------------------------------------------
# commands


def cmd_stats(args):
    ds = _load(args)
    st = label_stats(ds)
    print(f"dataset={ds.name} n={ds.n} d={ds.d} K={ds.K} usable={st.usable.size}")
    print(f"Imb1={st.imb1:.1f} Imb2={st.imb2:.1f} Imb3={st.imb3:.1f} Imb4={st.imb4:.1f}")
    print(f"exact: Imb1={st.imb1!r} Imb2={st.imb2!r} Imb3={st.imb3!r} Imb4={st.imb4!r}")
    path = os.path.join(_outdir(args), "imbalance_profile.csv")
    emit_imbalance_profile(st, path, config_header(args))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_train(args):
    ds = _load(args)
    if args.test_frac is not None:
        ds, _ = split(ds, args.test_frac, args.seed)
    if args.algo == "pa" and ds.n > PA_LARGE_N:
        print(f"warning: pairwise training at this scale is expensive (n={ds.n})", file=sys.stderr)
    report = fit_model(ds, args.algo, args.loss, getattr(args, "lambda"), _train_config(args), args.scale)
    out = _outdir(args)
    head = config_header(args)
    report.model.save(os.path.join(out, "model.txt"), head)
    report.to_csv(os.path.join(out, "train_report.csv"), head)
    print(f"epochs={report.epochs_run} converged={report.converged} "
          f"objective={report.objectives[0]:.6g}->{report.final_objective:.6g} backend={report.backend}")
    print(f"wrote {os.path.join(out, 'model.txt')}")
    return EXIT_OK


def _load_model(path):
    if not os.path.exists(path):
        raise UsageError(f"model not found: {path}")
    return LinearModel.load(path)


def cmd_eval(args):
    ds = _load(args)
    model = _load_model(args.model)
    model.check_shape(ds)
    rep = evaluate(model, ds)
    path = os.path.join(_outdir(args), "auc.csv")
    rep.to_csv(path, config_header(args))
    print(f"macro_auc={rep.macro_auc:.6f} labels={len(rep.per_label)} skipped={len(rep.skipped)}")
    print(f"wrote {path}")
    return EXIT_OK


_RISKS = {"pa": empirical_risk_pa, "u1": empirical_risk_u1, "u2": empirical_risk_u2}


def cmd_bounds(args):
    if not 0.0 < args.delta < 1.0:
        raise UsageError(f"--delta must lie in (0, 1), got {args.delta}")
    ds = _load(args)
    st = label_stats(ds)
    rows = []
    for path in args.model:
        model = _load_model(path)
        model.check_shape(ds)
        data = model.preprocess.transform(ds) if model.preprocess is not None else ds
        const = estimate_model_constants(model, data)
        risk = _RISKS[model.algorithm](model, data)
        q = BoundQuery(model.algorithm, args.delta, ds.n, st, const, risk, args.variant)
        rep = bound(q)
        rows.append((ds.name, rep))
        print(f"{model.algorithm}: total={rep.total:.4f} risk={rep.risk_term:.4f} "
              f"complexity={rep.complexity_term:.4f} deviation={rep.deviation_term:.4f} "
              f"Lambda={const.Lambda:.4g} r={const.r:.4g} B={const.B:.4g}")
        for case in ("balanced", "extreme"):
            try:
                cor = bound_corollary(case, model.algorithm, q)
            except ValueError:
                continue
            agree = abs(cor.total - rep.total) <= 1e-12 * max(1.0, abs(rep.total))
            print(f"  {case} corollary total={cor.total:.6g} agrees_with_theorem={agree}")
            rows.append((ds.name, cor))
    path = os.path.join(_outdir(args), "bounds.csv")
    write_bounds_csv(rows, path, config_header(args))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_cv(args):
    ds = _load(args)
    if args.folds < 2:
        raise UsageError("--folds must be >= 2")
    if "pa" in args.algo and ds.n > PA_LARGE_N:
        print(f"warning: pairwise training at this scale is expensive (n={ds.n})", file=sys.stderr)
    res = cross_validate(ds, tuple(args.algo), args.loss, args.lambda_grid, args.folds, args.reps,
                         args.test_frac, args.seed, _train_config(args), args.scale, args.jobs)
    out = _outdir(args)
    head = "\n".join(f"# {ln}" for ln in config_header(args).splitlines()) + "\n"
    with open(os.path.join(out, "cv_folds.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(head + "rep,algorithm,lambda,fold,val_macro_auc\n")
        for (r, a, lam, f), v in sorted(res.fold_scores.items()):
            fh.write(f"{r},{a},{lam!r},{f},{v!r}\n")
    with open(os.path.join(out, "cv_summary.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(head + "rep,algorithm,best_lambda,test_macro_auc\n")
        for (r, a), v in sorted(res.test_auc.items()):
            fh.write(f"{r},{a},{res.best_lambda[(r, a)]!r},{v!r}\n")
    summary = res.summary(args.algo)
    with open(os.path.join(out, "comparison.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(head + "algorithm,mean_macro_auc,std_macro_auc,reps\n")
        for a, (m, s, k) in summary.items():
            fh.write(f"{a},{m!r},{s!r},{k}\n")
            print(f"{a}: Macro-AUC {m:.4f} +- {s:.4f} over {k} reps")
    for (r, a), model in sorted(res.models.items()):
        model.save(os.path.join(out, f"model_{a}_rep{r}.txt"), config_header(args))
    print(f"wrote results to {out}")
    return EXIT_OK


def cmd_verify(args):
    names = SUITES if args.suite == "all" else (args.suite,)
    results = run_suites(names, seed=args.seed, max_pq=args.max_pq, inject_bug=args.inject_bug,
                         chain_losses=args.losses)
    path = os.path.join(_outdir(args), "verify.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(f"# {ln}" for ln in config_header(args).splitlines()) + "\n")
        fh.write("suite,status,checks,failures,first_failure\n")
        for r in results:
            first = r.failures[0].replace(",", ";") if r.failures else ""
            fh.write(f"{r.name},{'pass' if r.ok else 'fail'},{r.checked},{len(r.failures)},{first}\n")
    for r in results:
        print(r.summary)
    return EXIT_OK if all(r.ok for r in results) else EXIT_NUMERIC


def cmd_rademacher(args):
    ds = _load(args)
    if not (math.isfinite(args.radius) and args.radius >= 0):
        raise UsageError("--radius must be finite and >= 0")
    labels = args.labels if args.labels else [int(k) for k in ds.usable_labels]
    est = mc_fractional_rademacher(ds, labels, args.radius, args.draws, args.seed)
    r = float(np.linalg.norm(ds.dense_features(), axis=1).max())
    const = ModelConstants(args.radius, r, 1.0, 1.0)
    st = stats_from_counts(ds.pos_counts[labels], ds.n)
    analytic = analytic_rademacher_bound("pa", st, const, ds.n)
    path = os.path.join(_outdir(args), "rademacher.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(f"# {ln}" for ln in config_header(args).splitlines()) + "\n")
        fh.write("draws,mean,standard_error,seed,Lambda,r,analytic_pa_bound\n")
        fh.write(f"{est.draws},{est.mean!r},{est.standard_error!r},{est.seed},{args.radius!r},{r!r},{analytic!r}\n")
    print(f"estimate={est.mean:.6g} se={est.standard_error:.3g} analytic_pa_bound={analytic:.6g}")
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "stats": cmd_stats,
    "train": cmd_train,
    "eval": cmd_eval,
    "bounds": cmd_bounds,
    "cv": cmd_cv,
    "verify": cmd_verify,
    "rademacher": cmd_rademacher,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = resolve(parser, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    warnings.simplefilter("always", DegenerateLabelWarning)
    try:
        with np.errstate(over="ignore", under="ignore"):
            return COMMANDS[args.command](args)
    except ShapeMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except (TrainingDivergedError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, DatasetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
