"""Batch command-line front end: ``lvm <command> ...``.

Exit codes: 0 success, 1 numerical or convergence failure, 2 input or
parse error. Every flag can also come from ``--config C.json`` (keys are
the long flag names with dashes or underscores); command-line flags win.
"""
import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .deep import DlgmSpec  # noqa: F401  registers the "dlgm" model tag
from .distributions import Dirichlet
from .errors import ConvergenceError, DataError, NotPositiveDefiniteError, SpecError
from .estimators import (
    canonical_correlations,
    fit_airy_anova,
    fit_cca_mle,
    fit_dirichlet_categorical,
    fit_fa_em,
    fit_ppca_mle,
)
from .numerics import RngStream, empirical_covariance, principal_angles, rel_frobenius
from .zoo.base import load_spec
from .zoo.dataset import Dataset
from .zoo.io import SIDECAR_FILE, json_text, read_csv, write_json, write_sample
from .zoo.moments import implied_moments
from .zoo.reduction import check_reduction
from .zoo.sampling import sample_lvm

log = logging.getLogger("lvmzoo")

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT = 0, 1, 2

# estimator name -> (model tag used by `fit --model`, spec models it can be replicated on)
ESTIMATORS = {
    "ppca-mle": ("ppca", ("ppca",)),
    "fa-em": ("fa", ("fa", "ppca")),
    "cca-mle": ("cca", ("cca",)),
    "airy-anova": ("airy", ("airy",)),
    "dirichlet-categorical": ("dirichlet_categorical", ("dirichlet_categorical",)),
}
FIT_MODELS = {model: name for name, (model, _) in ESTIMATORS.items()}


class InputError(Exception):
    """Bad flags, missing files or incompatible choices (exit code 2)."""


def _supported_pairs():
    return "; ".join(f"{name}: {', '.join(models)}" for name, (_, models) in ESTIMATORS.items())


def _int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _emit(obj, out):
    """Write a JSON report to ``out`` (file path) or stdout."""
    if out:
        write_json(out, obj)
        print(out)
    else:
        sys.stdout.write(json_text(obj))


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise InputError(f"{args.command}: missing required {flags}")


def _path(p):
    if not Path(p).exists():
        raise InputError(f"no such file: {p}")
    return p


def _groups(args, data_path):
    """Column groups from ``--groups`` or the sibling ``sample.json`` sidecar."""
    if args.groups is not None:
        return tuple(_int_list(args.groups))
    sidecar = Path(data_path).with_name(SIDECAR_FILE)
    if sidecar.exists():
        dims = json.loads(sidecar.read_text()).get("meta", {}).get("view_dims")
        if dims:
            return tuple(dims)
    return None


def _run_estimator(name, dataset, args):
    if name == "ppca-mle":
        return fit_ppca_mle(dataset, args.latent_dim)
    if name == "fa-em":
        return fit_fa_em(dataset, args.latent_dim, max_iter=args.max_iter, tol=args.tol)
    if name == "cca-mle":
        return fit_cca_mle(dataset, args.latent_dim, regularize=args.regularize, gamma=args.gamma)
    if name == "airy-anova":
        return fit_airy_anova(dataset)
    if name == "dirichlet-categorical":
        return _fit_dirichlet(dataset, args)
    raise InputError(f"unknown estimator {name!r}; supported: {_supported_pairs()}")


def _fit_dirichlet(dataset, args):
    """One column holds labels in ``1..K``; K columns hold per-row category counts (pooled)."""
    data = dataset.observations
    if np.any(data < 0) or np.any(data != np.round(data)):
        raise InputError("dirichlet_categorical data must be nonnegative integers")
    prior = _float_list(args.prior) if args.prior is not None else None
    if data.shape[1] == 1:
        labels = data[:, 0].astype(int)
        if prior is None:
            prior = [1.0] * int(labels.max(initial=1))
    else:
        if prior is None:
            prior = [1.0] * data.shape[1]
        if len(prior) != data.shape[1]:
            raise InputError(f"--prior has {len(prior)} categories but the data has {data.shape[1]} count columns")
        pooled = data.sum(axis=0).astype(int)
        labels = np.repeat(np.arange(1, pooled.shape[0] + 1), pooled)
    return fit_dirichlet_categorical(Dirichlet(np.array(prior)), labels)


def _needs_latent_dim(name):
    return name in ("ppca-mle", "fa-em", "cca-mle")


def cmd_simulate(args):
    _require(args, "spec", "n", "seed", "out")
    spec = load_spec(_path(args.spec))
    batch = sample_lvm(spec, args.n, RngStream(args.seed))
    for p in write_sample(batch, args.out, spec):
        print(p)
    return EXIT_OK


def cmd_fit(args):
    _require(args, "data", "model")
    if args.model not in FIT_MODELS:
        raise InputError(f"no estimator for model {args.model!r}; supported pairs: {_supported_pairs()}")
    name = FIT_MODELS[args.model]
    if _needs_latent_dim(name):
        _require(args, "latent_dim")
    dataset = read_csv(_path(args.data), column_groups=_groups(args, args.data) if name == "cca-mle" else None)
    result = _run_estimator(name, dataset, args)
    _emit(result.to_dict(), str(Path(args.out) / "fit.json") if args.out else None)
    return EXIT_OK


def cmd_implied_moments(args):
    _require(args, "spec")
    spec = load_spec(_path(args.spec))
    _emit({"model": spec.model, "fingerprint": spec.fingerprint(), **implied_moments(spec).to_dict()}, args.output)
    return EXIT_OK


def cmd_check_reduction(args):
    _require(args, "from_spec", "to_spec")
    report = check_reduction(load_spec(_path(args.from_spec)), load_spec(_path(args.to_spec)))
    _emit(report.to_dict(), args.output)
    return EXIT_OK


def _rel(est, truth):
    return abs(est - truth) / abs(truth) if truth != 0 else abs(est)


def replication_metrics(name, spec, fit, observations):
    """Per-run estimation-error statistics against the generating spec."""
    if name == "ppca-mle":
        return {
            "sigma2_hat": fit.params["sigma2"],
            "sigma2_rel_error": _rel(fit.params["sigma2"], spec.sigma2),
            "max_principal_angle_deg": float(principal_angles(fit.params["W"], spec.W).max()),
        }
    if name == "fa-em":
        truth = implied_moments(spec).covariance
        fitted = fit.params["W"] @ fit.params["W"].T + np.diag(fit.params["sigma2"])
        return {
            "cov_rel_error_truth": rel_frobenius(fitted, truth),
            "cov_rel_error_sample": rel_frobenius(fitted, empirical_covariance(observations)),
            "iterations": fit.iterations,
            "min_loglik_step": float(np.min(np.diff(fit.loglik_trace))) if len(fit.loglik_trace) > 1 else 0.0,
        }
    if name == "cca-mle":
        pop = canonical_correlations(implied_moments(spec).covariance, spec.view_dims[0])[0]
        top = float(fit.diagnostics["canonical_correlations"][0])
        return {"top_correlation": top, "population_top_correlation": float(pop), "rel_error": _rel(top, pop)}
    if name == "airy-anova":
        out = {}
        for key in ("mu", "sigma2_z", "sigma2_eps"):
            est, truth = fit.params[key], getattr(spec, key)
            out[f"{key}_hat"] = est
            out[f"{key}_rel_error"] = _rel(est, truth)
        return out
    if name == "dirichlet-categorical":
        pred = fit.params["predictive"]
        return {"max_abs_error_vs_prior_mean": float(np.abs(pred - spec.alpha / spec.alpha.sum()).max())}
    raise InputError(f"unknown estimator {name!r}")


def _replicate_one(spec, name, args, r):
    seed = args.seed + r
    batch = sample_lvm(spec, args.n, RngStream(seed))
    groups = tuple(batch.meta["view_dims"]) if name == "cca-mle" else None
    dataset = Dataset(batch.observations, column_groups=groups)
    fit = _run_estimator(name, dataset, args)
    return {"seed": seed, **replication_metrics(name, spec, fit, batch.observations)}


def cmd_replicate(args):
    _require(args, "spec", "estimator", "reps", "seed", "n")
    if args.estimator not in ESTIMATORS:
        raise InputError(f"unknown estimator {args.estimator!r}; supported pairs: {_supported_pairs()}")
    if args.reps < 1:
        raise InputError("--reps must be >= 1")
    spec = load_spec(_path(args.spec))
    if spec.model not in ESTIMATORS[args.estimator][1]:
        raise InputError(
            f"estimator {args.estimator} does not fit model {spec.model!r}; supported pairs: {_supported_pairs()}"
        )
    if _needs_latent_dim(args.estimator) and args.latent_dim is None:
        args.latent_dim = spec.latent_dim
    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        runs = list(pool.map(lambda r: _replicate_one(spec, args.estimator, args, r), range(args.reps)))
    keys = [k for k in runs[0] if k != "seed"]
    table = np.array([[run[k] for k in keys] for run in runs], dtype=float)
    se = table.std(axis=0, ddof=1) / np.sqrt(len(runs)) if len(runs) > 1 else np.zeros(len(keys))
    report = {
        "model": spec.model,
        "fingerprint": spec.fingerprint(),
        "estimator": args.estimator,
        "reps": args.reps,
        "seed": args.seed,
        "n": args.n,
        "replications": runs,
        "mean": dict(zip(keys, table.mean(axis=0).tolist())),
        "standard_error": dict(zip(keys, se.tolist())),
    }
    _emit(report, str(Path(args.out) / "replicate.json") if args.out else None)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "implied-moments": cmd_implied_moments,
    "check-reduction": cmd_check_reduction,
    "replicate": cmd_replicate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="lvm", description="Latent variable model zoo: simulate, fit, verify.")
    parser.add_argument("--config", help="JSON file of flag values")
    sub = parser.add_subparsers(dest="command")
    parser.subcommands = sub.choices

    p = sub.add_parser("simulate", help="sample a spec to CSV plus a JSON sidecar")
    p.add_argument("--spec")
    p.add_argument("--n", type=int, help="rows (time steps for temporal specs)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("fit", help="fit an estimator to a CSV")
    p.add_argument("--data")
    p.add_argument("--model", help=f"one of {', '.join(FIT_MODELS)}")
    p.add_argument("--latent-dim", type=int)
    p.add_argument("--groups", help="view sizes for cca, e.g. 3,4")
    _estimator_flags(p)
    p.add_argument("--out", help="output directory (stdout if omitted)")

    p = sub.add_parser("implied-moments", help="closed-form mean and covariance of a spec")
    p.add_argument("--spec")
    p.add_argument("--output", help="JSON file (stdout if omitted)")

    p = sub.add_parser("check-reduction", help="check that one spec is a special case of another")
    p.add_argument("--from", dest="from_spec")
    p.add_argument("--to", dest="to_spec")
    p.add_argument("--output", help="JSON file (stdout if omitted)")

    p = sub.add_parser("replicate", help="repeat simulate+fit over seeds and aggregate errors")
    p.add_argument("--spec")
    p.add_argument("--estimator", help=f"one of {', '.join(ESTIMATORS)}")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--latent-dim", type=int, help="defaults to the spec's latent dim")
    p.add_argument("--workers", type=int, default=1)
    _estimator_flags(p)
    p.add_argument("--out", help="output directory (stdout if omitted)")
    return parser


def _estimator_flags(p):
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--regularize", action="store_true", default=False)
    p.add_argument("--gamma", type=float, default=1e-8)
    p.add_argument("--prior", help="Dirichlet prior, e.g. 1,1,1")


_RENAMES = {"from": "from_spec", "to": "to_spec"}
_PATH_KEYS = {"spec", "data", "from_spec", "to_spec", "out", "output"}


def _load_config(argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return {}
    try:
        config = json.loads(Path(known.config).read_text())
    except FileNotFoundError:
        raise InputError(f"no such config file: {known.config}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config {known.config}: invalid JSON ({exc})") from None
    if not isinstance(config, dict):
        raise InputError(f"config {known.config}: expected a JSON object")
    config = {_RENAMES.get(k, k.replace("-", "_")): v for k, v in config.items()}
    # paths inside a config are relative to the config file, not the working directory
    base = Path(known.config).resolve().parent
    for key in _PATH_KEYS & config.keys():
        if isinstance(config[key], str) and not Path(config[key]).is_absolute():
            config[key] = str(base / config[key])
    return config


def parse_args(argv):
    config = _load_config(argv)
    parser = build_parser()
    argv = list(argv)
    if not any(a in COMMANDS for a in argv) and "command" in config:
        # subcommand flags must follow the subcommand name
        head = []
        while argv and (argv[0] == "--config" or argv[0].startswith("--config=")):
            head += argv[:1] if "=" in argv[0] else argv[:2]
            argv = argv[1:] if "=" in argv[0] else argv[2:]
        argv = head + [str(config["command"])] + argv
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise InputError("a command is required")
    subparser = parser.subcommands[args.command]
    defaults = {a.dest: a.default for a in subparser._actions}
    for key, value in config.items():
        if key in ("command", "config"):
            continue
        if key not in defaults:
            raise InputError(f"config: unknown key {key!r} for {args.command}")
        if getattr(args, key) == defaults[key]:
            setattr(args, key, value)
    return args


def _setup_logging():
    level = os.environ.get("LVM_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv=None):
    _setup_logging()
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        log.debug("running %s with %s", args.command, vars(args))
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    except (NotPositiveDefiniteError, ConvergenceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"lvm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, SpecError, DataError, ValueError, TypeError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"lvm: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
