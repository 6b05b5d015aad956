"""Command-line front end.

Commands: train, eval, prune, interpret, benchmark, compare-activations,
list-equations.  Settings come from a sectioned key=value config file
(--config); unknown sections or keys are hard errors because silent typos in
hyperparameters are the dominant way reproductions go wrong.

Exit codes: 0 success, 1 IO problem, 2 config problem, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys
import time
import warnings

import numpy as np

from . import bspline, interpret, svgplot
from .data import (CSVFormatError, EQUATIONS, UNIVARIATE_ALIASES,
                   UNIVARIATE_TARGETS, DEFAULT_UNIVARIATE_RANGE, Dataset,
                   generate, generate_univariate, read_csv_rows,
                   resolve_univariate, target_scale, write_csv_rows)
from .dr import DEFAULT_TEMPLATE, SU2_TEMPLATE
from .network import (ModelFormatError, ModelVersionError, load_model,
                      network_forward, param_count, save_model, spec_from_shape)
from .train import TrainConfig, TrainingDivergedError, prune, rmse, train

PUBLISHED_RESULTS = os.path.join(os.path.dirname(__file__),
                                 "published_results.csv")


class ConfigError(Exception):
    """Bad config file or bad config-level command input -> exit 2."""


# --- config parsing ---------------------------------------------------------


def _p_int(v):
    return int(v)


def _p_float(v):
    return float(v)


def _p_bool(v):
    low = v.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _p_str(v):
    return v.strip()


def _p_int_list(v):
    return [int(t) for t in v.replace(",", " ").split()]


def _p_layers(v):
    """dr_layers: one int for every layer, or a comma list per layer."""
    items = _p_int_list(v)
    return items[0] if len(items) == 1 else items


def _p_batch(v):
    return None if v.strip().lower() == "full" else int(v)


def _p_template(v):
    name = v.strip().lower()
    if name == "default":
        return DEFAULT_TEMPLATE
    if name == "su2":
        return SU2_TEMPLATE
    raise ValueError(f"unknown template {v!r} (default | su2)")


# {section: {key: (parser, default)}}
SCHEMA = {
    "dataset": {
        "equation": (_p_str, None),
        "n_samples": (_p_int, 3000),
        "seed": (_p_int, 0),
        "split_seed": (_p_int, None),  # defaults to dataset seed
        "range_lo": (_p_float, DEFAULT_UNIVARIATE_RANGE[0]),
        "range_hi": (_p_float, DEFAULT_UNIVARIATE_RANGE[1]),
    },
    "model": {
        "shape": (_p_int_list, None),
        "hidden": (_p_int_list, [2, 1]),  # benchmark: shape = [arity] + hidden
        "dr_layers": (_p_layers, 3),
        "dense_head": (_p_bool, False),
        "bias_flag": (_p_int, 0),
        "qubits_per_edge": (_p_int, 1),
        "entangle": (_p_bool, False),
        "template": (_p_template, DEFAULT_TEMPLATE),
        "seed": (_p_int, 0),
    },
    "train": {
        "learning_rate": (_p_float, 0.01),
        "beta1": (_p_float, 0.9),
        "beta2": (_p_float, 0.999),
        "epsilon": (_p_float, 1e-8),
        "batch_size": (_p_batch, None),
        "max_steps": (_p_int, 2000),
        "seed": (_p_int, 0),
        "early_stop_patience": (_p_int, 500),
    },
    "prune": {
        "threshold": (_p_float, 0.05),
        "fine_tune_steps": (_p_int, 500),
    },
    "interpret": {
        "grid_size": (_p_int, interpret.DEFAULT_GRID_SIZE),
        "max_degree": (_p_int, interpret.DEFAULT_MAX_DEGREE),
        "r2_target": (_p_float, interpret.DEFAULT_R2_TARGET),
        "svg": (_p_bool, True),
    },
    "benchmark": {
        "include_published": (_p_bool, True),
    },
    "output": {
        "dir": (_p_str, "quirk-out"),
    },
}


def default_config() -> dict:
    return {sec: {k: d for k, (_, d) in keys.items()}
            for sec, keys in SCHEMA.items()}


def parse_config(path) -> dict:
    """Sectioned key=value text; '#' starts a comment; unknown keys fail."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    cfg = default_config()
    section = None
    for no, line in enumerate(raw.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(
                    f"{path}:{no}: unknown section [{section}]; known: "
                    + ", ".join(sorted(SCHEMA)))
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(f"{path}:{no}: key outside any [section]")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in SCHEMA[section]:
            raise ConfigError(
                f"{path}:{no}: unknown key {key!r} in [{section}]; known: "
                + ", ".join(sorted(SCHEMA[section])))
        parser, _ = SCHEMA[section][key]
        try:
            cfg[section][key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{no}: bad value for {key!r}: {exc}") from exc
    return cfg


def load_cli_config(args) -> dict:
    cfg = parse_config(args.config) if args.config else default_config()
    if getattr(args, "seed", None) is not None:
        # one flag pins every seed for a fully reproducible run
        cfg["dataset"]["seed"] = args.seed
        cfg["dataset"]["split_seed"] = args.seed
        cfg["model"]["seed"] = args.seed
        cfg["train"]["seed"] = args.seed
    if cfg["dataset"]["split_seed"] is None:
        cfg["dataset"]["split_seed"] = cfg["dataset"]["seed"]
    if getattr(args, "out", None):
        cfg["output"]["dir"] = args.out
    return cfg


def _outdir(cfg) -> str:
    path = cfg["output"]["dir"]
    os.makedirs(path, exist_ok=True)
    return path


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get("QUIRK_THREADS", "")
    if env.strip():
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"QUIRK_THREADS must be an integer, got {env!r}") \
                from exc
    return 1


# --- shared pieces ----------------------------------------------------------


def _load_dataset(cfg):
    d = cfg["dataset"]
    eq = d["equation"]
    if not eq:
        raise ConfigError("missing [dataset] key 'equation'")
    if eq in EQUATIONS:
        ds = generate(eq, d["n_samples"], seed=d["seed"])
    else:
        try:
            resolve_univariate(eq)
        except LookupError as exc:
            raise ConfigError(
                f"[dataset] equation {eq!r} is neither a registered equation "
                f"nor a univariate target: {exc}") from exc
        ds = generate_univariate(eq, d["n_samples"],
                                 x_range=(d["range_lo"], d["range_hi"]),
                                 seed=d["seed"])
    return ds.split(seed=d["split_seed"])


def _build_spec(cfg, input_dim: int):
    m = cfg["model"]
    shape = m["shape"]
    if shape is None:
        shape = [input_dim] + list(m["hidden"])
    if shape[0] != input_dim:
        raise ConfigError(
            f"[model] shape starts with {shape[0]} inputs but the dataset "
            f"has {input_dim} feature(s)")
    return spec_from_shape(shape, dr_layers=m["dr_layers"],
                           dense_head=m["dense_head"], bias_flag=m["bias_flag"],
                           seed=m["seed"], qubits_per_edge=m["qubits_per_edge"],
                           entangle=m["entangle"], template=m["template"])


def _train_config(cfg) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(learning_rate=t["learning_rate"], beta1=t["beta1"],
                       beta2=t["beta2"], epsilon=t["epsilon"],
                       batch_size=t["batch_size"], max_steps=t["max_steps"],
                       seed=t["seed"], early_stop_patience=t["early_stop_patience"],
                       prune_threshold=cfg["prune"]["threshold"])


def _test_rmse(model, ds) -> float:
    X, y = ds.part("test")
    return rmse(network_forward(X, model), y)


def _summary_line(eq: str, model, ds) -> str:
    return f"{eq} params={param_count(model)} test_rmse={_test_rmse(model, ds):.6e}"


# --- commands ---------------------------------------------------------------


def cmd_train(args) -> int:
    cfg = load_cli_config(args)
    ds = _load_dataset(cfg)
    spec = _build_spec(cfg, ds.input_dim)
    out = _outdir(cfg)
    model, history = train(ds, spec, _train_config(cfg))
    save_model(model, os.path.join(out, "model.txt"))
    history.save_csv(os.path.join(out, "history.csv"))
    line = _summary_line(cfg["dataset"]["equation"], model, ds)
    with open(os.path.join(out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(line + "\n")
    print(line)
    return 0


def cmd_eval(args) -> int:
    cfg = load_cli_config(args)
    model = load_model(args.model)
    ds = _load_dataset(cfg)
    if ds.input_dim != model.spec.input_dim:
        raise ConfigError(
            f"model expects {model.spec.input_dim} feature(s) but dataset "
            f"{cfg['dataset']['equation']!r} has {ds.input_dim}")
    print(_summary_line(cfg["dataset"]["equation"], model, ds))
    return 0


def cmd_prune(args) -> int:
    cfg = load_cli_config(args)
    model = load_model(args.model)
    ds = _load_dataset(cfg)
    if ds.input_dim != model.spec.input_dim:
        raise ConfigError(
            f"model expects {model.spec.input_dim} feature(s) but dataset "
            f"{cfg['dataset']['equation']!r} has {ds.input_dim}")
    out = _outdir(cfg)
    before = param_count(model)
    pruned = prune(model, ds, tau=cfg["prune"]["threshold"],
                   config=_train_config(cfg),
                   fine_tune_steps=cfg["prune"]["fine_tune_steps"])
    save_model(pruned, os.path.join(out, "model_pruned.txt"))
    line = (f"{cfg['dataset']['equation']} params={before}->"
            f"{param_count(pruned)} test_rmse={_test_rmse(pruned, ds):.6e}")
    print(line)
    return 0


def cmd_interpret(args) -> int:
    cfg = load_cli_config(args)
    model = load_model(args.model)
    ds = _load_dataset(cfg)
    if ds.input_dim != model.spec.input_dim:
        raise ConfigError(
            f"model expects {model.spec.input_dim} feature(s) but dataset "
            f"{cfg['dataset']['equation']!r} has {ds.input_dim}")
    out = _outdir(cfg)
    icfg = cfg["interpret"]
    rep = interpret.report(model, ds, grid_size=icfg["grid_size"],
                           max_degree=icfg["max_degree"],
                           r2_target=icfg["r2_target"])
    interpret.save_report(rep, os.path.join(out, "report.txt"))
    interpret.save_coeffs_csv(rep, os.path.join(out, "coefficients.csv"))
    if icfg["svg"]:
        for e in rep.edges:
            if not e.active:
                continue
            layer, i, u = e.edge_id
            s = interpret.sample_edge(model, e.edge_id, icfg["grid_size"])
            t = 2.0 * s.xs / np.pi - 1.0
            svgplot.save(
                os.path.join(out, f"edge_{layer}_{i}_{u}.svg"),
                [svgplot.Series(s.xs, s.ys, "edge output", points=True),
                 svgplot.Series(s.xs, e.fit(t),
                                f"degree-{e.fit.degree} fit")],
                title=f"edge ({layer}, {i}, {u})", xlabel="x (encoded)",
                ylabel="f(x)")
    print(f"surrogate_rmse={rep.surrogate_rmse:.6e} "
          f"model_rmse={rep.model_rmse:.6e}")
    print(rep.summary())
    return 0


def _unit_scale(ds: Dataset) -> Dataset:
    """Targets divided by max |y| over the training split.

    Benchmark RMSE numbers are reported on this scale; it also lets compact
    models without a dense head cover targets of any magnitude.
    """
    _, ytr = ds.part("train")
    return Dataset(ds.X, ds.y / target_scale(ytr), ds.columns, ds.splits,
                   ds.seed)


def _benchmark_one(eq: str, cfg, out: str):
    d = cfg["dataset"]
    ds = generate(eq, d["n_samples"], seed=d["seed"]).split(seed=d["split_seed"])
    ds = _unit_scale(ds)
    spec = _build_spec(cfg, ds.input_dim)
    model, _ = train(ds, spec, _train_config(cfg))
    pruned = prune(model, ds, tau=cfg["prune"]["threshold"],
                   config=_train_config(cfg),
                   fine_tune_steps=cfg["prune"]["fine_tune_steps"])
    row = [eq, _test_rmse(model, ds), param_count(model),
           _test_rmse(pruned, ds), param_count(pruned)]
    # atomic per-equation drop so a crash never leaves a half row
    tmp = os.path.join(out, f".bench_{eq}.tmp")
    write_csv_rows(tmp, ["equation", "rmse", "params", "pruned_rmse",
                         "pruned_params"], [row])
    os.replace(tmp, os.path.join(out, f"bench_{eq}.csv"))
    return row


def _published_columns():
    header, rows = read_csv_rows(PUBLISHED_RESULTS)
    table = {r[0]: r[1:] for r in rows}
    return header[1:], table


def cmd_benchmark(args) -> int:
    cfg = load_cli_config(args)
    known = [eq for eq in args.equations if eq in EQUATIONS]
    unknown = [eq for eq in args.equations if eq not in EQUATIONS]
    out = _outdir(cfg)
    rows = {}
    workers = _threads(args)
    if known:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_benchmark_one, eq, cfg, out): eq for eq in known}
            for fut in concurrent.futures.as_completed(futs):
                row = fut.result()
                rows[row[0]] = row
                print(f"{row[0]} rmse={row[1]:.6e} params={row[2]} "
                      f"pruned_rmse={row[3]:.6e} pruned_params={row[4]}")
    header = ["equation", "rmse", "params", "pruned_rmse", "pruned_params"]
    merged = [list(rows[eq]) for eq in known]
    if cfg["benchmark"]["include_published"]:
        pub_header, pub = _published_columns()
        header += ["published_" + h for h in pub_header]
        for row in merged:
            row += pub.get(row[0], [""] * len(pub_header))
    write_csv_rows(os.path.join(out, "benchmark.csv"), header, merged)
    if unknown:
        print("unknown equation id(s), skipped: " + ", ".join(unknown),
              file=sys.stderr)
        return 2
    return 0


def cmd_compare_activations(args) -> int:
    cfg = load_cli_config(args)
    d = cfg["dataset"]
    name, _ = resolve_univariate(args.target)  # LookupError -> exit 2 mapping
    ds = generate_univariate(args.target, d["n_samples"],
                             x_range=(d["range_lo"], d["range_hi"]),
                             seed=d["seed"]).split(seed=d["split_seed"])
    (Xtr, ytr), (Xte, yte) = ds.part("train"), ds.part("test")
    scale = target_scale(ytr)
    out = _outdir(cfg)
    smoothness = (1.0, 0.05)
    header = ["budget", "dr_rmse"] + [f"spline_s{s:g}_rmse" for s in smoothness]
    table = []
    for budget in args.budgets:
        L = budget // 2
        if budget % 2:
            warnings.warn(f"odd DR budget {budget} rounded down to {2 * L} "
                          f"parameters ({L} layers)", RuntimeWarning)
        if L < 1:
            raise ConfigError(f"budget {budget} leaves no DR layers")
        spec = spec_from_shape([1, 1], dr_layers=L, seed=cfg["model"]["seed"])
        scaled = Dataset(ds.X, ds.y / scale, ds.columns, ds.splits, ds.seed)
        model, _ = train(scaled, spec, _train_config(cfg))
        dr_err = rmse(network_forward(Xte, model), yte / scale)
        row = [budget, dr_err]
        fits = []
        for s in smoothness:
            m = bspline.fit((Xtr[:, 0], ytr / scale), budget, s)
            fits.append(m)
            row.append(rmse(m.predict(Xte[:, 0]), yte / scale))
        table.append(row)
        print(" ".join(f"{h}={v:.6e}" if isinstance(v, float) else f"{h}={v}"
                       for h, v in zip(header, row)))
        grid = np.linspace(ds.X[:, 0].min(), ds.X[:, 0].max(), 400)
        series = [
            svgplot.Series(Xte[:, 0], yte / scale, "target (test)", points=True),
            svgplot.Series(grid, network_forward(grid[:, None], model),
                           f"DR, {2 * L} params"),
        ]
        for s, m in zip(smoothness, fits):
            series.append(svgplot.Series(grid, m.predict(grid),
                                         f"spline S={s:g}, {budget} coeffs"))
        svgplot.save(os.path.join(out, f"compare_{name}_{budget}.svg"), series,
                     title=f"{name}: budget {budget}", xlabel="x",
                     ylabel="y (unit scale)")
    write_csv_rows(os.path.join(out, "compare_activations.csv"), header, table)
    return 0


def cmd_list_equations(args) -> int:
    print(f"{'id':<10} {'vars':<5} group      variables")
    for eq_id in sorted(EQUATIONS):
        eq = EQUATIONS[eq_id]
        names = ", ".join(v[0] for v in eq.variables)
        print(f"{eq_id:<10} {eq.arity:<5} {eq.group:<10} {names}")
    print("\nunivariate targets: " + ", ".join(sorted(UNIVARIATE_TARGETS)))
    aliases = ", ".join(f"{a} -> {t}" for a, t in sorted(UNIVARIATE_ALIASES.items()))
    print("aliases: " + aliases)
    return 0


# --- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="quirk",
        description="quantum re-uploading KAN regression toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model_arg=False):
        if model_arg:
            sp.add_argument("model", help="path to a saved model file")
        sp.add_argument("--config", help="sectioned key=value config file")
        sp.add_argument("--seed", type=int,
                        help="override every seed in the config")
        sp.add_argument("--out", help="output directory (overrides config)")
        sp.add_argument("--threads", type=int,
                        help="worker threads (or QUIRK_THREADS)")

    sp = sub.add_parser("train", help="train a model on a registered dataset")
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="test RMSE of a saved model")
    common(sp, model_arg=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("prune", help="prune a saved model and fine-tune")
    common(sp, model_arg=True)
    sp.set_defaults(func=cmd_prune)

    sp = sub.add_parser("interpret",
                        help="fit per-edge polynomials and report a surrogate")
    common(sp, model_arg=True)
    sp.set_defaults(func=cmd_interpret)

    sp = sub.add_parser("benchmark",
                        help="train + prune over a list of equations")
    sp.add_argument("equations", nargs="+", help="equation ids")
    common(sp)
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("compare-activations",
                        help="DR circuits vs B-splines at equal budgets")
    sp.add_argument("target", help="univariate target name or alias")
    sp.add_argument("--budgets", type=lambda v: [int(t) for t in v.split(",")],
                    default=[16, 22, 46],
                    help="comma-separated parameter budgets")
    common(sp)
    sp.set_defaults(func=cmd_compare_activations)

    sp = sub.add_parser("list-equations", help="show the dataset registry")
    sp.set_defaults(func=cmd_list_equations)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LookupError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TrainingDivergedError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ModelFormatError, ModelVersionError, CSVFormatError) as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
