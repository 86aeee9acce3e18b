"""Command-line interface.

Settings are layered: built-in defaults, then a flat ``key = value``
config file (``--config``), then explicit flags.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from types import SimpleNamespace

import numpy as np

from . import __version__
from ._format import fmt, to_json, write_json
from .diagnostics import format_table, rank_predictors
from .exceptions import ShapeError, UnsupportedFamilyError
from .model import (
    Family, Hyperparams, ModelSpec, destandardize_coef, deviance, load_dataset,
    read_matrix_csv, standardize, write_matrix_csv,
)
from .samplers import run_chain
from .samplers.io import write_samples, write_trace_csv
from .simulation import (
    SUMMARY_COLUMNS, config_from_mapping, read_config, run_experiment, simulate_replicate,
)

log = logging.getLogger("moshrink")

SUMMARY_FILE = "summary.json"


def positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {s}")
    return v


def positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def dl_a_value(s):
    return s if s in ("1/p", "inv_p") else positive_float(s)


def header_value(s):
    return {"auto": "auto", "yes": True, "true": True, "no": False, "false": False}[s.lower()]


def _truthy(s):
    if isinstance(s, bool):
        return s
    if str(s).lower() in ("1", "true", "yes", "on"):
        return True
    if str(s).lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


class Layered:
    """Register options whose defaults sit below the config file."""

    def __init__(self, parser):
        self.parser = parser
        self.defaults = {}
        self.casts = {}

    def add(self, *flags, default=None, type=str, help="", **kw):
        action = self.parser.add_argument(*flags, default=None, type=type, help=help + (
            f" (default: {default})" if default is not None else ""), **kw)
        self.defaults[action.dest] = default
        self.casts[action.dest] = type
        return action

    def flag(self, name, default, help=""):
        action = self.parser.add_argument(name, default=None, action=argparse.BooleanOptionalAction,
                                          help=f"{help} (default: {'on' if default else 'off'})")
        self.defaults[action.dest] = default
        self.casts[action.dest] = _truthy
        return action


def resolve(args, layered: Layered):
    """Merge defaults < config file < flags into ``args``."""
    conf = read_config(args.config) if getattr(args, "config", None) else {}
    for key, raw in conf.items():
        if key not in layered.defaults:
            raise ValueError(f"{args.config}: unknown setting {key!r} for '{args.command}'")
        if getattr(args, key) is None:
            try:
                setattr(args, key, layered.casts[key](raw))
            except (ValueError, KeyError, argparse.ArgumentTypeError) as exc:
                raise ValueError(f"{args.config}: bad value for {key!r}: {raw!r} ({exc})") from None
    for key, default in layered.defaults.items():
        if getattr(args, key) is None:
            setattr(args, key, default)
    return args


def _header(seed, **extra):
    bits = " ".join(f"{k}={v}" for k, v in extra.items())
    return f"moshrink {__version__} seed={seed}" + (f" {bits}" if bits else "")


def _meta(seed, **extra):
    return {"tool": "moshrink", "version": __version__, "seed": seed, **extra}


def _spec_from_args(a):
    return ModelSpec(a.family, Hyperparams(gamma_hc=a.gamma_hc, lambda_c=a.lambda_c, dl_a=a.dl_a))


def _require_file(path, what):
    if path is None:
        raise ValueError(f"missing {what} path")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"{what} file not found: {path}")


# -- fit ---------------------------------------------------------------------

def cmd_fit(a):
    _require_file(a.x, "X")
    if a.y is not None:
        _require_file(a.y, "Y")
    raw = load_dataset(a.x, a.y, a.n_responses, a.header)
    data = standardize(raw) if a.standardize else raw
    spec = _spec_from_args(a)
    hyper = spec.hyper.resolve(data.p, data.K)
    s = run_chain(data, spec, a.iterations, a.burn_in, a.thin, seed=a.seed)
    os.makedirs(a.out, exist_ok=True)

    B_raw = destandardize_coef(s.B_hat, data)
    x_names = data.x_names or [f"x{j + 1}" for j in range(data.p)]
    y_names = data.y_names or [f"y{k + 1}" for k in range(data.K)]
    summary = _meta(
        a.seed,
        family=spec.family.value,
        hyper={"gamma_hc": hyper.gamma_hc, "lambda_c": hyper.lambda_c, "dl_a": hyper.dl_a,
               "nu0": hyper.nu0, "noshrink_var": hyper.noshrink_var},
        iterations=a.iterations, burn_in=a.burn_in, thin=a.thin,
        n_post=s.n_post, n_retained=s.n_retained,
        data={"x": a.x, "y": a.y, "n_responses": a.n_responses, "header": a.header,
              "n": data.n, "p": data.p, "K": data.K},
        x_names=x_names, y_names=y_names,
        standardized=data.standardized,
        x_mean=data.x_mean, x_sd=data.x_sd, y_mean=data.y_mean, y_sd=data.y_sd,
        means={k: v for k, v in s.means.items()},
        coef_raw=B_raw,
        mean_deviance=s.mean_deviance,
        acceptance=s.acceptance,
    )
    write_json(os.path.join(a.out, SUMMARY_FILE), summary)
    write_samples(os.path.join(a.out, "samples.bin"), s)
    write_trace_csv(os.path.join(a.out, "trace.csv"), s)
    write_matrix_csv(os.path.join(a.out, "coef.csv"), B_raw, y_names,
                     comment=_header(a.seed, family=spec.family.value))
    rows = [{"predictor": n, **{y: B_raw[j, k] for k, y in enumerate(y_names)}}
            for j, n in enumerate(x_names)]
    print(format_table(rows, y_names, label="predictor"), end="")
    for k, v in s.acceptance.items():
        print(f"acceptance {k}: {np.array2string(np.atleast_1d(v), precision=3)}")
    return 0


def load_fit(path):
    f = os.path.join(path, SUMMARY_FILE) if os.path.isdir(path) else path
    _require_file(f, "fit summary")
    with open(f) as fh:
        return json.load(fh)


# -- predict / rank / dic ----------------------------------------------------

def cmd_predict(a):
    fit = load_fit(a.fit)
    _require_file(a.x, "X")
    X, _ = read_matrix_csv(a.x, a.header)
    B = np.asarray(fit["means"]["B"])
    if X.shape[1] != B.shape[0]:
        raise ShapeError(f"X has {X.shape[1]} columns, the fit expects {B.shape[0]}")
    if fit["standardized"] and a.raw_scale:
        Xs = (X - np.asarray(fit["x_mean"])) / np.asarray(fit["x_sd"])
        Yhat = Xs @ B * np.asarray(fit["y_sd"]) + np.asarray(fit["y_mean"])
    else:
        Yhat = X @ B
    write_matrix_csv(a.out, Yhat, fit["y_names"], comment=_header(fit["seed"], family=fit["family"]))
    return 0


def cmd_rank(a):
    fit = load_fit(a.fit)
    fam = Family.parse(fit["family"])
    if not fam.shared:
        raise UnsupportedFamilyError(f"ranking needs a shared-local family; this fit is {fam.value}")
    means = {k: np.asarray(v) for k, v in fit["means"].items()}
    ranks = rank_predictors(SimpleNamespace(family=fam.value, means=means), fam, fit["x_names"])
    quantity = "phi" if fam.prior == "DL" else "lambda"
    if a.out:
        with open(a.out, "w", newline="") as fh:
            fh.write(f"# {_header(fit['seed'], family=fam.value)}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rank", "predictor", "name", quantity, "selected"])
            for i, r in enumerate(ranks, 1):
                w.writerow([i, r.predictor + 1, r.name, fmt(r.value), int(r.selected)])
    width = max(len(r.name) for r in ranks + [SimpleNamespace(name="name")])
    print(f"rank  {'name':<{width}}  {quantity:>10}  selected")
    for i, r in enumerate(ranks, 1):
        print(f"{i:>4}  {r.name:<{width}}  {r.value:>10.3f}  {'yes' if r.selected else 'no'}")
    return 0


def cmd_dic(a):
    fit = load_fit(a.fit)
    d = fit["data"]
    x = a.x or d["x"]
    y = a.y if a.x else d["y"]
    _require_file(x, "training X")
    raw = load_dataset(x, y, d["n_responses"], d["header"])
    data = standardize(raw) if fit["standardized"] else raw
    D = deviance(data, np.asarray(fit["means"]["B"]), np.asarray(fit["means"]["Psi"]))
    p_d = fit["mean_deviance"] - D
    value = D + 2.0 * p_d
    if p_d < 0:
        log.warning("p_D is negative (%.3g); the posterior may not be log-concave", p_d)
    out = {"D": D, "p_D": p_d, "DIC": value}
    if a.format == "json":
        text = None
        if a.out:
            write_json(a.out, _meta(fit["seed"], family=fit["family"], **out))
        else:
            text = to_json(_meta(fit["seed"], family=fit["family"], **out)) + "\n"
    else:
        text = f"# {_header(fit['seed'], family=fit['family'])}\n" + "".join(
            f"{k} = {fmt(v)}\n" for k, v in out.items())
        if a.out:
            with open(a.out, "w") as fh:
                fh.write(text)
            text = None
    if text:
        print(text, end="")
    return 0


# -- simulate / experiment ---------------------------------------------------

SIM_KEYS = ("n", "n_test", "p", "K", "scenario", "psi_offdiag", "seed")


def _sim_config(a, keys):
    vals = {k: getattr(a, k) for k in keys}
    if getattr(a, "b_true", None):
        vals["scenario"] = "custom"
    cfg = config_from_mapping(vals)
    if getattr(a, "b_true", None):
        B, _ = read_matrix_csv(a.b_true)
        cfg.B_true = B
        cfg.p, cfg.K = B.shape
    return cfg


def cmd_simulate(a):
    cfg = _sim_config(a, SIM_KEYS)
    train, test, truth = simulate_replicate(cfg, a.replicate)
    os.makedirs(a.out, exist_ok=True)
    head = _header(cfg.seed, scenario=cfg.scenario, replicate=a.replicate)
    xn = [f"x{j + 1}" for j in range(cfg.p)]
    yn = [f"y{k + 1}" for k in range(cfg.K)]
    write_matrix_csv(os.path.join(a.out, "X.csv"), train.X, xn, head)
    write_matrix_csv(os.path.join(a.out, "Y.csv"), train.Y, yn, head)
    write_matrix_csv(os.path.join(a.out, "X_test.csv"), test.X, xn, head)
    write_matrix_csv(os.path.join(a.out, "Y_test.csv"), test.Y, yn, head)
    write_matrix_csv(os.path.join(a.out, "B_true.csv"), truth.B_true, yn, head)
    print(f"wrote train (n={cfg.n}) and test (n={cfg.n_test}) data to {a.out}")
    return 0


def cmd_experiment(a):
    keys = SIM_KEYS + ("replicates", "iterations", "burn_in", "thin", "families", "standardize")
    cfg = _sim_config(a, keys)
    os.makedirs(a.out, exist_ok=True)

    def progress(row):
        log.info("replicate %d %s: mspe=%.4f sse=%.4f", row["replicate"], row["model"], row["mspe"], row["sse_all"])

    res = run_experiment(cfg, workers=a.workers, progress=progress)
    head = _header(cfg.seed, scenario=cfg.scenario, replicates=cfg.replicates, iterations=cfg.iterations)
    with open(os.path.join(a.out, "table.csv"), "w", newline="") as fh:
        fh.write(f"# {head}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "replicates", *SUMMARY_COLUMNS])
        for r in res.table:
            w.writerow([r["model"], r["replicates"], *(fmt(r[c]) for c in SUMMARY_COLUMNS)])
    cols = [*SUMMARY_COLUMNS, "dic", "p_d"]
    with open(os.path.join(a.out, "replicates.csv"), "w", newline="") as fh:
        fh.write(f"# {head}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replicate", "model", *cols, "rank_order"])
        for r in res.replicates:
            order = ";".join(str(j + 1) for j in r["rank_order"]) if r["rank_order"] else ""
            w.writerow([r["replicate"], r["model"], *(fmt(r[c]) for c in cols), order])
    text = format_table(res.table, SUMMARY_COLUMNS)
    with open(os.path.join(a.out, "table.txt"), "w") as fh:
        fh.write(text)
    print(text, end="")
    return 0


# -- parser ------------------------------------------------------------------

def _fit_options(L: Layered):
    L.add("--family", default="MONG", type=str,
          help="MONG, MOHS, MODL, NaiveNG, NaiveHS, NaiveDL or NoShrinkage")
    L.add("--iterations", default=3000, type=positive_int, help="total MCMC iterations")
    L.add("--burn-in", default=1000, type=nonneg_int, help="discarded initial iterations")
    L.add("--thin", default=1, type=positive_int, help="keep every THIN-th draw")
    L.add("--gamma-hc", default=0.5, type=positive_float, help="half-Cauchy scale of the NG global")
    L.add("--lambda-c", default=0.5, type=positive_float, help="exponential rate on the NG shape c")
    L.add("--dl-a", default=0.5, type=dl_a_value, help="Dirichlet concentration (number or 1/p)")


def _sim_options(L: Layered):
    L.add("--n", default=500, type=positive_int, help="training rows")
    L.add("--n-test", default=500, type=positive_int, help="test rows")
    L.add("--p", default=20, type=positive_int, help="predictors")
    L.add("--K", default=10, type=positive_int, help="responses")
    L.add("--scenario", default="B0", type=str, help="B0 (sparse) or B1 (perturbed)")
    L.add("--psi-offdiag", default=0.5, type=float, help="off-diagonal of the equicorrelated error covariance")
    L.parser.add_argument("--b-true", help="CSV with a custom truth matrix (sets scenario=custom)")


def build_parser():
    parser = argparse.ArgumentParser(prog="moshrink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"moshrink {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    layers = {}

    def command(name, func, help):
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("--version", action="version", version=f"moshrink {__version__}")
        p.add_argument("--config", help="flat key = value settings file (flags take precedence)")
        p.add_argument("-v", "--verbose", action="count", default=0)
        p.set_defaults(func=func)
        L = Layered(p)
        L.add("--seed", default=0, type=nonneg_int, help="master random seed")
        layers[name] = L
        return p, L

    p, L = command("fit", cmd_fit, "fit a model and store posterior output")
    p.add_argument("--x", required=True, help="predictor CSV (or combined CSV with --n-responses)")
    p.add_argument("--y", help="response CSV")
    L.add("--n-responses", type=positive_int, help="leading response columns in a combined CSV")
    L.add("--header", default="auto", type=header_value, help="auto, yes or no")
    L.add("--out", default="fit", type=str, help="output directory")
    _fit_options(L)
    L.flag("--standardize", True, "center and scale X and Y before fitting")

    p, L = command("predict", cmd_predict, "predict responses for new predictor rows")
    p.add_argument("--fit", required=True, help="fit directory or summary.json")
    p.add_argument("--x", required=True, help="new predictor CSV")
    L.add("--header", default="auto", type=header_value, help="auto, yes or no")
    L.add("--out", default="predictions.csv", type=str, help="output CSV")
    L.flag("--raw-scale", True, "map predictions back to raw response units")

    p, L = command("rank", cmd_rank, "rank predictors by their shared local parameter")
    p.add_argument("--fit", required=True, help="fit directory or summary.json")
    L.add("--out", type=str, help="ranking CSV")

    p, L = command("dic", cmd_dic, "deviance information criterion of a fit")
    p.add_argument("--fit", required=True, help="fit directory or summary.json")
    p.add_argument("--x", help="training X (default: the path recorded at fit time)")
    p.add_argument("--y", help="training Y")
    L.add("--format", default="json", type=str, choices=("json", "text"), help="output format")
    L.add("--out", type=str, help="output file (default: stdout)")

    p, L = command("simulate", cmd_simulate, "generate a synthetic train/test dataset")
    _sim_options(L)
    L.add("--replicate", default=0, type=nonneg_int, help="replicate index")
    L.add("--out", default="sim", type=str, help="output directory")

    p, L = command("experiment", cmd_experiment, "run the replicate x family simulation grid")
    _sim_options(L)
    L.add("--replicates", default=10, type=positive_int, help="number of simulated datasets")
    L.add("--iterations", default=9000, type=positive_int, help="MCMC iterations per fit")
    L.add("--burn-in", default=1000, type=nonneg_int, help="burn-in per fit")
    L.add("--thin", default=10, type=positive_int, help="thinning of stored draws")
    L.add("--families", type=str, help="comma list, e.g. MONG,MODL:0.5,NaiveNG (default: all nine)")
    L.add("--workers", default=1, type=positive_int, help="parallel worker processes")
    L.add("--out", default="experiment", type=str, help="output directory")
    L.flag("--standardize", True, "fit on standardized data")
    return parser, layers


def main(argv=None):
    parser, layers = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        resolve(args, layers[args.command])
        return args.func(args)
    except (ValueError, ArithmeticError, RuntimeError, OSError, KeyError) as exc:
        print(f"moshrink {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
