"""Command-line interface: ``countpred <subcommand> [options]``.

Exit status is 0 on success, 1 on a runtime failure and 2 on bad usage.
Numbers printed to the terminal carry 6 significant digits; CSV files keep
full precision.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from .asymptotic import delta_ci_param, nonparam_ci
from .bootstrap import NONPARAMETRIC, BootstrapScenario, run_bootstrap
from .estimation import fit_cml
from .exceptions import CountPredError
from .experiments import ExperimentConfig, read_experiment_config, run_experiment
from .models import FAMILIES, get_family, model_from_config, read_model_config
from .prediction import predictive_prob_nonparam, predictive_prob_param
from .series import PredictionSet, load_series, summary, write_series

__all__ = ["main", "build_parser"]

_MODEL_PARAMS = {"alpha": "alpha", "lam": "lambda", "N": "N", "pi": "pi", "beta": "beta"}
_PREDICTORS = list(FAMILIES) + [NONPARAMETRIC]


def _fmt(v) -> str:
    return f"{v:.6g}"


def _write_text(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


# ------------------------------------------------------------------ options


def _add_seed(p, default=0):
    p.add_argument("--seed", type=int, default=default, help="master random seed")


def _add_data(p):
    p.add_argument("--data", required=True, help="CSV file holding the count series")
    p.add_argument("--column", default="0", help="column index or header name (default 0)")


def _add_set(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--set", dest="set_list", metavar="LIST",
                   help="finite prediction set, e.g. 1,2")
    g.add_argument("--set-ray", dest="set_ray", type=int, metavar="A",
                   help="prediction set {x : x >= A}")


def _add_xn(p):
    p.add_argument("--x-n", dest="x_n", type=int, default=None,
                   help="conditioning value (default: last observation)")


def _add_model_params(p):
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--N", dest="N", type=float, help="negative-binomial size")
    p.add_argument("--pi", type=float, help="negative-binomial/geometric probability")
    p.add_argument("--beta", type=float)


def _prediction_set(args) -> PredictionSet:
    if args.set_ray is not None:
        return PredictionSet.ray(args.set_ray)
    return PredictionSet.parse(args.set_list)


def _load(args):
    column = int(args.column) if str(args.column).lstrip("-").isdigit() else args.column
    return load_series(args.data, column=column)


def _model_from_args(parser, args, family_attr="model"):
    family = getattr(args, family_attr)
    if getattr(args, "config", None):
        return read_model_config(args.config)
    if family is None:
        parser.error(f"--{family_attr.replace('_', '-')} is required")
    fam = get_family(family)
    cfg = {"family": fam.name}
    for attr, key in _MODEL_PARAMS.items():
        if getattr(args, attr) is not None:
            cfg[key] = getattr(args, attr)
    for name in fam.param_names:
        if name not in cfg:
            flag = {"lambda": "--lambda", "N": "--N"}.get(name, f"--{name}")
            parser.error(f"{fam.name} requires {flag}")
    return model_from_config(cfg)


# ----------------------------------------------------------------- commands


def cmd_simulate(parser, args) -> int:
    model = _model_from_args(parser, args)
    rng = np.random.default_rng(args.seed)
    series = model.simulate(args.n, rng=rng)
    params = ", ".join(f"{k}={_fmt(v)}" for k, v in model.params().items())
    print(f"simulated {args.n} observations from {model.family} ({params})", file=sys.stderr)
    if args.out:
        write_series(series, args.out)
    else:
        sys.stdout.write("count\n" + "".join(f"{v}\n" for v in series.values.tolist()))
    return 0


def cmd_fit(parser, args) -> int:
    series = _load(args)
    fit = fit_cml(args.model, series, multistarts=args.multistarts, seed=args.seed)
    print(f"{fit.family} fit on n = {fit.n_used} (converged: {'yes' if fit.converged else 'no'})")
    for k, v in fit.params.items():
        print(f"  {k:<8s} {_fmt(v)}")
    print(f"  loglik   {_fmt(fit.loglik)}")
    if args.out:
        _write_text(_csv_text([{k: repr(v) if isinstance(v, float) else v
                                for k, v in fit.to_dict().items()}]), args.out)
    return 0 if fit.converged else 1


def _point(args, series, S, x_n):
    if args.model == NONPARAMETRIC:
        return predictive_prob_nonparam(series, x_n, S), None
    fit = fit_cml(args.model, series, multistarts=args.multistarts, seed=args.seed)
    if not fit.converged:
        raise CountPredError(f"{fit.family} fit did not converge")
    return predictive_prob_param(fit.family, fit.theta, x_n, S), fit


def cmd_predict(parser, args) -> int:
    series = _load(args)
    S = _prediction_set(args)
    x_n = series.last if args.x_n is None else args.x_n
    est, _ = _point(args, series, S, x_n)
    print(f"P(X_n+1 in {S} | X_n = {x_n}) = {_fmt(est.value)}  [{args.model}]")
    if not est.support_flag:
        print(f"warning: x_n = {x_n} never occurs before the last observation", file=sys.stderr)
    if args.out:
        _write_text(_csv_text([{"model": args.model, "x_n": x_n, "S": S.to_token(),
                                "point": repr(float(est.value)),
                                "support": int(est.support_flag)}]), args.out)
    return 0


def _ci_row(label, generator, x_n, S, point, ci) -> dict:
    return {"estimator": label, "generator": generator, "ci_method": ci.method, "x_n": x_n,
            "S": S.to_token(), "point": repr(float(point)), "lower": repr(ci.lower),
            "upper": repr(ci.upper), "level": repr(ci.level)}


def _print_ci_table(rows: list[dict]) -> None:
    print(f"{'estimator':<10s} {'generator':<10s} {'method':<26s} "
          f"{'point':>10s} {'lower':>10s} {'upper':>10s}")
    for r in rows:
        print(f"{r['estimator']:<10s} {r['generator'] or '-':<10s} {r['ci_method']:<26s} "
              f"{_fmt(float(r['point'])):>10s} {_fmt(float(r['lower'])):>10s} "
              f"{_fmt(float(r['upper'])):>10s}")


def _asymptotic_row(args, series, S, x_n) -> dict:
    if args.model == NONPARAMETRIC:
        ci = nonparam_ci(series, x_n, S, args.delta)
        point = predictive_prob_nonparam(series, x_n, S).value
    else:
        est, fit = _point(args, series, S, x_n)
        ci, _ = delta_ci_param(fit, x_n, S, args.delta)
        point = est.value
    return _ci_row(args.model, "", x_n, S, point, ci)


def cmd_ci_asymptotic(parser, args) -> int:
    series = _load(args)
    S = _prediction_set(args)
    x_n = series.last if args.x_n is None else args.x_n
    row = _asymptotic_row(args, series, S, x_n)
    print(f"x_n = {x_n}, S = {S}")
    _print_ci_table([row])
    if args.out:
        _write_text(_csv_text([row]), args.out)
    return 0


def _bootstrap_rows(args, series, S, x_n):
    generator = args.generator or args.model
    scenario = BootstrapScenario(generator, args.model)
    res = run_bootstrap(series, scenario, S, x_n, B=args.B, delta=args.delta,
                        seed=args.seed, n_jobs=args.threads)
    if res.refit_failures:
        print(f"note: {res.refit_failures} of {res.B} refits failed and were dropped",
              file=sys.stderr)
    rows = [_ci_row(args.model, scenario.generator, x_n, S, res.point.value, ci)
            for ci in (res.ci_basic, res.ci_percentile)]
    return res, rows


def cmd_ci_bootstrap(parser, args) -> int:
    series = _load(args)
    S = _prediction_set(args)
    x_n = series.last if args.x_n is None else args.x_n
    res, _ = _bootstrap_rows(args, series, S, x_n)
    print(f"x_n = {x_n}, S = {S}, scenario {res.scenario.label}, B = {res.B}")
    print(f"point      {_fmt(res.point.value)}")
    print(f"basic      [{_fmt(res.ci_basic.lower)}, {_fmt(res.ci_basic.upper)}]")
    print(f"percentile [{_fmt(res.ci_percentile.lower)}, {_fmt(res.ci_percentile.upper)}]")
    if args.out:
        _write_text(res.to_csv(), args.out)
    if args.dump_replicates:
        _write_text("".join(f"{v!r}\n" for v in res.replicates.tolist()), args.dump_replicates)
    return 0


def cmd_mc_experiment(parser, args) -> int:
    if args.config:
        config = read_experiment_config(args.config)
    else:
        dgp = _model_from_args(parser, args, "dgp")
        S = _prediction_set(args) if (args.set_list or args.set_ray is not None) \
            else PredictionSet.finite([1, 2])
        config = ExperimentConfig(
            dgp=dgp, prediction=args.prediction, ci_method=args.ci_method,
            n_list=tuple(int(v) for v in args.n.split(",")), K=args.K, S=S,
            delta=args.delta, seed=args.seed, B=args.B, generator=args.generator,
            target=args.target)
    report = run_experiment(config, n_jobs=args.threads, cache_dir=args.cache_dir,
                            progress=True)
    print(f"{'ci_method':<32s} {'n':>6s} {'coverage':>9s} {'mean_length':>12s} {'K_eff':>6s}")
    for r in report.rows:
        print(f"{r.ci_method:<32s} {r.n:>6d} {_fmt(r.coverage):>9s} "
              f"{_fmt(r.mean_length):>12s} {r.K_effective:>6d}")
    if args.out:
        _write_text(report.to_csv(), args.out)
    return 0


def cmd_analyze(parser, args) -> int:
    series = _load(args)
    S = _prediction_set(args)
    x_n = series.last if args.x_n is None else args.x_n
    try:
        print(summary(series, max_lag=min(10, len(series) - 2)).to_text())
    except CountPredError as exc:
        print(f"summary unavailable: {exc}", file=sys.stderr)
    print()
    print(f"x_n = {x_n}, S = {S}, level = {_fmt(1 - args.delta)}")
    rows = []
    if args.asymptotic:
        rows.append(_asymptotic_row(args, series, S, x_n))
    _, boot_rows = _bootstrap_rows(args, series, S, x_n)
    rows += boot_rows
    _print_ci_table(rows)
    if args.out:
        _write_text(_csv_text(rows), args.out)
    return 0


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="countpred",
        description="Predictive probabilities and confidence intervals for count time series.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", help="simulate an INAR(1) or INARCH(1) series")
    p.add_argument("--model", choices=list(FAMILIES))
    p.add_argument("--config", help="model config file ([model] section)")
    _add_model_params(p)
    p.add_argument("--n", type=int, required=True)
    _add_seed(p)
    p.add_argument("--out", help="output CSV (default: standard output)")
    p.set_defaults(func=cmd_simulate, subparser=p)

    p = sub.add_parser("fit", help="conditional maximum-likelihood fit")
    _add_data(p)
    p.add_argument("--model", choices=list(FAMILIES), required=True)
    p.add_argument("--multistarts", type=int, default=5)
    _add_seed(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit, subparser=p)

    def predictive(name, help_text):
        q = sub.add_parser(name, help=help_text)
        _add_data(q)
        q.add_argument("--model", choices=_PREDICTORS, required=True,
                       help="parametric family or npara")
        q.add_argument("--multistarts", type=int, default=5)
        _add_xn(q)
        _add_set(q)
        _add_seed(q)
        q.add_argument("--out")
        return q

    p = predictive("predict", "point estimate of a predictive probability")
    p.set_defaults(func=cmd_predict, subparser=p)

    p = predictive("ci-asymptotic", "asymptotic confidence interval")
    p.add_argument("--delta", type=float, default=0.05)
    p.set_defaults(func=cmd_ci_asymptotic, subparser=p)

    def boot_opts(q):
        q.add_argument("--generator", choices=_PREDICTORS,
                       help="pseudo-series generator (default: same as --model)")
        q.add_argument("--B", type=int, default=500)
        q.add_argument("--delta", type=float, default=0.05)
        q.add_argument("--threads", type=int, default=1)

    p = predictive("ci-bootstrap", "basic and percentile bootstrap intervals")
    boot_opts(p)
    p.add_argument("--dump-replicates", metavar="PATH",
                   help="write bootstrap replicates, one per line")
    p.set_defaults(func=cmd_ci_bootstrap, subparser=p)

    p = predictive("analyze", "summary statistics plus point estimate and intervals")
    boot_opts(p)
    p.add_argument("--asymptotic", action="store_true",
                   help="also report the asymptotic interval")
    p.set_defaults(func=cmd_analyze, subparser=p)

    p = sub.add_parser("mc-experiment", help="Monte Carlo coverage study")
    p.add_argument("--config", help="experiment config file ([dgp] and [experiment])")
    p.add_argument("--dgp", choices=list(FAMILIES))
    _add_model_params(p)
    p.add_argument("--prediction", choices=_PREDICTORS, default="poi-inar")
    p.add_argument("--ci-method", choices=["asymptotic", "bootstrap"], default="asymptotic")
    p.add_argument("--generator", choices=_PREDICTORS)
    p.add_argument("--target", choices=["auto", "exact", "pseudo-true"], default="auto")
    p.add_argument("--n", default="500", help="comma-separated sample sizes")
    p.add_argument("--K", type=int, default=200)
    p.add_argument("--B", type=int, default=200)
    p.add_argument("--delta", type=float, default=0.05)
    _add_set(p, required=False)
    _add_seed(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--cache-dir", help="directory for cached pseudo-true parameters")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc_experiment, subparser=p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub_parser = getattr(args, "subparser", parser)
    try:
        return args.func(sub_parser, args)
    except (CountPredError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
