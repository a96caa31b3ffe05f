"""Command-line entry point: ``snrgraph {sample,analyze,snr,bridge,benchmark}``.

Settings come from built-in defaults, then an optional flat ``key = value``
config file (``--config``), then command-line flags. Everything is
validated before any output is written. Exit codes: 0 ok, 2 config error,
3 data error, 4 numerical failure.
"""

import argparse
import configparser
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import benchmarks
from .bottleneck import bottleneck_scores, order_metrics
from .bridge import BridgeRewirer, SymmetricPermutation
from .classifier import GCNClassifier, random_split
from .ensemble import estimate_sbm, expected_order_metrics, planted_partition, sample_sbm
from .exceptions import ConfigError, GraphDataError, NumericalError
from .features import FeatureParams, local_noise_proportion, sample_features
from .graph import OPERATOR_KINDS, build_graph, canonical_kind, edge_homophily, shift_operator
from .io import read_graph, save_model, write_csv, write_edges, write_features, write_history, write_json, write_labels
from .reporting import SeedPlan, make_report, write_svg
from .sensitivity import gcn_jacobian_sensitivities, sgc_sensitivities
from .snr import empirical_snr, predict_snr, sensitivity_condition

COMMANDS = ("sample", "analyze", "snr", "bridge", "benchmark")
BENCHMARKS = ("homophily", "bridge", "snr", "condition")
EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _floats(text):
    return [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _ints(text):
    return [int(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _opt_float(text):
    return None if str(text).strip().lower() in ("", "none", "auto") else float(text)


def _opt_str(text):
    return None if str(text).strip().lower() in ("", "none", "auto") else str(text).strip()


# key, parser, default, help
OPTIONS = [
    ("seed", int, None, "master seed; required, no wall-clock seeding"),
    ("out", str, "out", "output directory"),
    ("edges", _opt_str, None, "edge-list file ('u v' per line)"),
    ("labels", _opt_str, None, "labels file (one integer per line)"),
    ("features", _opt_str, None, "features CSV (n rows, no header); sampled when absent"),
    ("n", int, 1000, "SBM node count"),
    ("k", int, 2, "SBM class count"),
    ("d", float, 10.0, "SBM mean degree"),
    ("h", _opt_float, None, "planted-partition edge homophily; setting it selects the SBM input"),
    ("operator", str, "sym", "shift operator: sym, sym-raw, rw, mean or a full kind name"),
    ("orders", _ints, [1, 2, 3], "comma-separated propagation orders"),
    ("d_in", int, 5, "feature dimension"),
    ("sigma2", _opt_float, None, "class-signal variance (auto: 1e-5, or 3e-3 for bridge runs)"),
    ("phi2", float, 1e-4, "global-shift variance"),
    ("psi2", float, 1e-4, "node-noise variance"),
    ("arch", str, "gcn2", "model: gcn2, sgc (depth = propagation order) or fnn"),
    ("hidden", int, 32, "GCN hidden width"),
    ("depth", int, 2, "SGC propagation depth"),
    ("lr", float, 0.5, "learning rate"),
    ("momentum", float, 0.9, "gradient-descent momentum"),
    ("weight_decay", float, 5e-4, "L2 coefficient"),
    ("epochs", int, 200, "training epochs"),
    ("optimizer", str, "gd", "gd or adam"),
    ("n_mu", int, 100, "Monte-Carlo class-mean draws (0 skips the empirical SNR)"),
    ("n_ge", int, 100, "Monte-Carlo global/noise draws"),
    ("n_iter", int, 10, "BRIDGE iterations"),
    ("permutation", _opt_str, None, "BRIDGE involution in cycle notation, e.g. (1 2); auto searches all"),
    ("mean_degree", _opt_float, None, "BRIDGE target mean degree (auto: input graph)"),
    ("retrain", str, "every", "BRIDGE retraining: every or paper"),
    ("benchmark", str, "homophily", "benchmark: homophily, bridge, snr or condition"),
    ("hs", _floats, [0.0, 0.25, 0.5, 0.75, 1.0], "comma-separated h grid for benchmark sweeps"),
    ("samples", int, 10, "benchmark replicates per grid point"),
    ("workers", int, 1, "parallel sweep workers"),
]
_PARSERS = {key: parse for key, parse, _, _ in OPTIONS}
_DEFAULTS = {key: default for key, _, default, _ in OPTIONS}


def read_config_file(path):
    """Parse a flat ``key = value`` file (``#`` comments, no sections)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[run]\n" + fh.read(), source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return dict(parser["run"])


def resolve_config(command, file_values, flag_values):
    """Merge defaults, file values and flags into a validated config dict."""
    cfg = dict(_DEFAULTS)
    for source in (file_values, flag_values):
        for key, raw in source.items():
            if raw is None:
                continue
            if key not in _PARSERS:
                raise ConfigError(f"unknown setting {key!r}")
            try:
                cfg[key] = _PARSERS[key](raw) if isinstance(raw, str) else raw
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
    cfg["command"] = command
    _validate(cfg)
    return cfg


def _validate(cfg):
    cmd = cfg["command"]
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    if cfg["seed"] is None:
        raise ConfigError("seed is required")
    if cfg["seed"] < 0:
        raise ConfigError("seed must be non-negative")
    paths = [cfg[k] for k in ("edges", "labels")]
    has_paths = any(p is not None for p in paths)
    has_sbm = cfg["h"] is not None
    if cmd == "sample" and not has_sbm:
        raise ConfigError("sample needs an SBM spec (set h)")
    if cmd in ("analyze", "snr", "bridge"):
        if has_paths == has_sbm:
            raise ConfigError("give exactly one of input paths (edges + labels) or an SBM spec (h)")
        if has_paths and None in paths:
            raise ConfigError("edges and labels must be given together")
    if cmd == "benchmark" and (has_paths or has_sbm):
        raise ConfigError("benchmark sweeps build their own graphs; drop edges/labels/h")
    if has_sbm:
        if not 0 <= cfg["h"] <= 1:
            raise ConfigError("h must lie in [0, 1]")
        if cfg["n"] < 2 or cfg["k"] < 2 or not cfg["d"] > 0:
            raise ConfigError("need n >= 2, k >= 2 and d > 0")
        if cfg["k"] * cfg["d"] > cfg["n"]:
            raise ConfigError("k * d exceeds n; the SBM would need edge probabilities above 1")
    try:
        cfg["operator"] = canonical_kind(cfg["operator"])
    except ValueError:
        raise ConfigError(f"operator must be one of {OPERATOR_KINDS} or an alias") from None
    if not cfg["orders"] or min(cfg["orders"]) < 0:
        raise ConfigError("orders must be non-negative integers")
    for key in ("d_in", "hidden", "epochs", "workers"):
        if cfg[key] < 1:
            raise ConfigError(f"{key} must be at least 1")
    for key in ("depth", "n_iter", "n_mu", "n_ge", "samples"):
        if cfg[key] < 0:
            raise ConfigError(f"{key} must be non-negative")
    for key in ("phi2", "psi2", "weight_decay", "momentum"):
        if not cfg[key] >= 0:
            raise ConfigError(f"{key} must be non-negative")
    if cfg["sigma2"] is not None and not cfg["sigma2"] >= 0:
        raise ConfigError("sigma2 must be non-negative")
    if not cfg["lr"] > 0:
        raise ConfigError("lr must be positive")
    if cfg["arch"] not in ("gcn2", "sgc", "fnn"):
        raise ConfigError("arch must be gcn2, sgc or fnn")
    if cfg["optimizer"] not in ("gd", "adam"):
        raise ConfigError("optimizer must be gd or adam")
    if cfg["retrain"] not in ("every", "paper"):
        raise ConfigError("retrain must be every or paper")
    if cfg["benchmark"] not in BENCHMARKS:
        raise ConfigError(f"benchmark must be one of {BENCHMARKS}")
    if cmd == "snr" and cfg["n_mu"] and (cfg["n_mu"] < 2 or cfg["n_ge"] < 2):
        raise ConfigError("n_mu and n_ge must be at least 2 (or n_mu = 0)")
    if cfg["mean_degree"] is not None and not cfg["mean_degree"] > 0:
        raise ConfigError("mean_degree must be positive")
    if cfg["permutation"] is not None:
        try:
            SymmetricPermutation.parse(cfg["permutation"], cfg["k"] if has_sbm else max(2, _max_label_hint(cfg)))
        except (ValueError, IndexError):
            raise ConfigError(f"cannot parse permutation {cfg['permutation']!r}") from None
    if cmd == "benchmark" and (not cfg["hs"] or any(not 0 <= h <= 1 for h in cfg["hs"])):
        raise ConfigError("hs must be a non-empty list in [0, 1]")
    _check_writable(cfg["out"])


def _max_label_hint(cfg):
    # permutations are re-validated against the loaded labels; accept any
    # transposition here
    nums = [int(t) for t in cfg["permutation"].replace("(", " ").replace(")", " ").split() if t.isdigit()]
    return max(nums, default=2)


def _check_writable(out):
    path = os.path.abspath(out)
    probe = path
    while not os.path.exists(probe):
        parent = os.path.dirname(probe)
        if parent == probe:
            break
        probe = parent
    if not os.path.isdir(probe) or not os.access(probe, os.W_OK):
        raise ConfigError(f"output directory {out!r} is not writable")


def _feature_params(cfg, default_sigma2=1e-5):
    s2 = default_sigma2 if cfg["sigma2"] is None else cfg["sigma2"]
    return FeatureParams.iid(cfg["d_in"], s2, cfg["phi2"], cfg["psi2"])


def _model(cfg, random_state):
    common = dict(
        lr=cfg["lr"],
        momentum=cfg["momentum"],
        weight_decay=cfg["weight_decay"],
        epochs=cfg["epochs"],
        optimizer=cfg["optimizer"],
        operator=cfg["operator"],
        random_state=random_state,
    )
    if cfg["arch"] == "gcn2":
        return GCNClassifier(arch="gcn2", hidden=cfg["hidden"], **common)
    depth = 0 if cfg["arch"] == "fnn" else cfg["depth"]
    return GCNClassifier(arch="sgc", depth=depth, **common)


def _config_echo(cfg):
    return {k: cfg[k] for k in sorted(cfg)}


def _load_or_sample(cfg, seeds):
    """Input graph, plus the generating block model when the graph was sampled."""
    if cfg["h"] is None:
        g = read_graph(cfg["edges"], cfg["labels"], cfg["features"])
        return g, None
    params = planted_partition(cfg["k"], cfg["d"], cfg["h"], cfg["n"])
    return sample_sbm(params, seed=seeds["graph"]), params


def _features_for(g, cfg, seeds, default_sigma2=1e-5):
    if g.features is not None:
        return g.features
    return sample_features(g, _feature_params(cfg, default_sigma2), seed=seeds["features"]).X


class _Outputs:
    """Collects files so nothing touches disk until the command has finished computing."""

    def __init__(self, root):
        self.root = root
        self.jobs = []

    def add(self, name, writer, *args, **kw):
        self.jobs.append((name, writer, args, kw))

    def names(self):
        return [name for name, *_ in self.jobs]

    def flush(self, report_name="report.json", report=None):
        os.makedirs(self.root, exist_ok=True)
        for name, writer, args, kw in self.jobs:
            path = os.path.join(self.root, name)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            writer(path, *args, **kw)
        if report is not None:
            write_json(os.path.join(self.root, report_name), report)


def cmd_sample(cfg):
    seeds = SeedPlan(cfg["seed"], ["graph", "features"])
    g, params = _load_or_sample(cfg, seeds)
    X = _features_for(g, cfg, seeds)
    out = _Outputs(cfg["out"])
    out.add("edges.txt", write_edges, g)
    out.add("labels.txt", write_labels, g.labels)
    out.add("features.csv", write_features, X)
    summary = {
        "n": g.n,
        "k": g.k,
        "n_edges": g.n_edges,
        "mean_degree": g.mean_degree,
        "edge_homophily": edge_homophily(g),
        "sbm": params.to_dict(),
    }
    return out, summary, seeds


def cmd_analyze(cfg):
    seeds = SeedPlan(cfg["seed"], ["graph", "features"])
    g, params = _load_or_sample(cfg, seeds)
    op = shift_operator(g, cfg["operator"], isolated="zero")
    metrics = [order_metrics(op, g.labels, ell, k=g.k).to_dict(cfg["operator"]) for ell in cfg["orders"]]
    node_rows, sens_rows = [], []
    for ell in cfg["orders"]:
        sc = bottleneck_scores(op, g.labels, ell, ell, k=g.k)
        for i in range(g.n):
            node_rows.append((i, ell, sc.b_class[i], sc.b_self[i], sc.b_total[i]))
        sens = sgc_sensitivities(op, g.labels, ell, k=g.k)
        for i in range(g.n):
            sens_rows.append((i, sens.signal[i], sens.noise[i], sens.global_[i], sens.mode, ell))
    source = "given"
    if params is None:
        try:
            params, source = estimate_sbm(g), "fitted"
        except ValueError:
            params = None
    predictions = []
    if params is not None:
        predictions = [expected_order_metrics(params, ell).to_dict() for ell in cfg["orders"]]
    h_edge = edge_homophily(g) if g.n_edges else float("nan")
    curve = []
    for i, ell in enumerate(cfg["orders"]):
        pred = predictions[i]["expected_h"] if predictions else float("nan")
        band = predictions[i]["band"] if predictions else float("nan")
        curve.append((h_edge, ell, metrics[i]["h"], pred, band))
    out = _Outputs(cfg["out"])
    out.add("metrics.json", write_json, {"operator": cfg["operator"], "records": metrics})
    out.add("bottleneck.csv", write_csv, ("node_id", "ell", "b_class", "b_self", "b_total"), node_rows)
    out.add("sensitivity.csv", write_csv, ("node_id", "signal", "noise", "global", "mode", "order"), sens_rows)
    out.add("curve.csv", write_csv, ("h", "ell", "empirical", "predicted", "band"), curve)
    if predictions:
        out.add("ensemble.json", write_json, {"source": source, "sbm": params.to_dict(), "records": predictions})
    summary = {
        "n": g.n,
        "n_edges": g.n_edges,
        "edge_homophily": h_edge,
        "has_features": g.features is not None,
        "metrics": metrics,
        "ensemble": {"source": source, "records": predictions} if predictions else None,
    }
    return out, summary, seeds


def cmd_snr(cfg):
    seeds = SeedPlan(cfg["seed"], ["graph", "features", "model", "split", "mc"])
    g, _ = _load_or_sample(cfg, seeds)
    p = _feature_params(cfg)
    rho = local_noise_proportion(p)
    op = shift_operator(g, cfg["operator"], isolated="zero")
    empirical = None
    model = None
    if cfg["arch"] == "gcn2":
        X = _features_for(g, cfg, seeds)
        split = random_split(g.n, seed=seeds["split"])
        model = _model(cfg, seeds.int_seed("model")).fit(X, g.labels, g, split.train, split.val)
        w = model.gcn_weights()
        per_p = [gcn_jacobian_sensitivities(model.operator_for(g), w, g.labels, p=q) for q in range(w.W2.shape[1])]
        predicted = np.mean([predict_snr(s, p) for s in per_p], axis=0)
        sens = gcn_jacobian_sensitivities(model.operator_for(g), w, g.labels, p="sum")
        if cfg["n_mu"]:
            emp, _ = empirical_snr(g, p, model, cfg["n_mu"], cfg["n_ge"], seed=seeds["mc"])
            empirical = emp.mean(axis=1)
    else:
        order = 0 if cfg["arch"] == "fnn" else cfg["depth"]
        sens = sgc_sensitivities(op, g.labels, order, k=g.k)
        predicted = predict_snr(sens, p)
    condition = sensitivity_condition(sens, rho)
    rows = [
        (i, predicted[i], float("nan") if empirical is None else empirical[i], bool(condition[i]))
        for i in range(g.n)
    ]
    out = _Outputs(cfg["out"])
    out.add("nodes.csv", write_csv, ("node_id", "predicted_snr", "empirical_snr", "condition"), rows)
    if model is not None:
        out.add("model.json", save_model, model)
    summary = {
        "arch": cfg["arch"],
        "rho": rho,
        "fnn_snr": p.fnn_snr,
        "mean_predicted_snr": float(np.mean(predicted)),
        "mean_empirical_snr": None if empirical is None else float(np.mean(empirical)),
        "condition_fraction": float(np.mean(condition)),
        "mc": {"n_mu": cfg["n_mu"], "n_ge": cfg["n_ge"]},
    }
    return out, summary, seeds


def cmd_bridge(cfg):
    seeds = SeedPlan(cfg["seed"], ["graph", "features", "split", "bridge"])
    g, _ = _load_or_sample(cfg, seeds)
    X = _features_for(g, cfg, seeds, default_sigma2=benchmarks.BRIDGE_FEATURES.sigma2)
    split = random_split(g.n, seed=seeds["split"])
    perm = None
    if cfg["permutation"] is not None:
        try:
            perm = SymmetricPermutation.parse(cfg["permutation"], g.k)
        except (ValueError, IndexError):
            raise ConfigError(f"permutation {cfg['permutation']!r} does not act on {g.k} classes") from None
    est = BridgeRewirer(
        classifier=_model(cfg, None),
        permutation=perm,
        mean_degree=cfg["mean_degree"],
        n_iter=cfg["n_iter"],
        retrain=cfg["retrain"],
        random_state=seeds.int_seed("bridge"),
    ).fit(X, None, g, split)
    st = est.state_
    rewired = build_graph(st.graph.edges(), g.labels, k=g.k, n=g.n)
    hist = st.history
    out = _Outputs(cfg["out"])
    out.add("history.csv", write_history, hist)
    out.add("rewired_edges.txt", write_edges, rewired)
    its = [r["iteration"] for r in hist]
    out.add(
        "history.svg",
        write_svg,
        {"test accuracy": (its, [r["accuracy"] for r in hist]), "h2": (its, [r["h2"] for r in hist])},
        title="BRIDGE",
        xlabel="iteration",
    )
    summary = {
        "permutation": st.permutation.cycle_notation,
        "baseline_accuracy": st.baseline_accuracy,
        "best_iteration": st.best_iteration,
        "best_accuracy": st.best_accuracy,
        "h2_before": hist[0]["h2"],
        "h2_best": hist[st.best_iteration]["h2"],
        "final_mean_degree": rewired.mean_degree,
        "history": hist,
    }
    return out, summary, seeds


def _benchmark_point(name, h, cfg, seed):
    """One sweep point; returns (rows, point summary)."""
    if name == "homophily":
        rows = benchmarks.homophily_sweep([h], cfg["orders"], n=cfg["n"], d=cfg["d"], k=cfg["k"], samples=cfg["samples"], seed=seed)
        return [list(r) for r in rows], {}
    if name == "bridge":
        p = _feature_params(cfg, benchmarks.BRIDGE_FEATURES.sigma2)
        ss = np.random.SeedSequence(seed).spawn(cfg["samples"])
        rows = []
        for i, child in enumerate(ss):
            r = benchmarks.run_bridge(
                h,
                int(child.generate_state(1)[0]),
                n_iter=cfg["n_iter"],
                classifier=_model(cfg, None),
                retrain=cfg["retrain"],
                n=cfg["n"],
                d=cfg["d"],
                k=cfg["k"],
                features=p,
            )
            rows.append([h, i, r.baseline, r.post, r.h2_before, r.h2_after, r.permutation])
        return rows, {}
    if name == "snr":
        emp, pred = benchmarks.snr_concordance(
            n_graphs=cfg["samples"], n=cfg["n"], d=cfg["d"], h=h, n_mu=cfg["n_mu"], n_ge=cfg["n_ge"],
            features=_feature_params(cfg), seed=seed,
        )
        return [[h, i, e, q] for i, (e, q) in enumerate(zip(emp, pred))], {}
    per_h, pooled = benchmarks.condition_benchmark(
        [h], n=cfg["n"], d=cfg["d"], n_runs=cfg["samples"], features=_feature_params(cfg), seed=seed
    )
    return [[h, per_h[0]]], {}


_BENCH_COLUMNS = {
    "homophily": ("h", "ell", "sample", "empirical", "predicted", "band"),
    "bridge": ("h", "sample", "baseline", "post", "h2_before", "h2_after", "permutation"),
    "snr": ("h", "graph", "empirical", "predicted"),
    "condition": ("h", "accuracy"),
}


def _point_task(args):
    return _benchmark_point(*args)


def cmd_benchmark(cfg):
    name = cfg["benchmark"]
    hs = cfg["hs"]
    seeds = SeedPlan(cfg["seed"], [f"point{i}" for i in range(len(hs))])
    tasks = [(name, h, cfg, seeds[f"point{i}"]) for i, h in enumerate(hs)]
    if cfg["workers"] > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg["workers"], len(tasks))) as ex:
            results = list(ex.map(_point_task, tasks))
    else:
        results = [_point_task(t) for t in tasks]
    cols = _BENCH_COLUMNS[name]
    out = _Outputs(cfg["out"])
    all_rows = []
    for i, (rows, _) in enumerate(results):
        out.add(os.path.join("points", f"{name}_{i:03d}.csv"), write_csv, cols, rows)
        all_rows.extend(rows)
    out.add(f"{name}.csv", write_csv, cols, all_rows)
    series, summary = _bench_summary(name, hs, all_rows, cfg)
    out.add(f"{name}.svg", write_svg, series, title=f"{name} benchmark", xlabel="h")
    out.add("index.json", write_json, {"benchmark": name, "points": [f"points/{name}_{i:03d}.csv" for i in range(len(hs))]})
    return out, summary, seeds


def _bench_summary(name, hs, rows, cfg):
    a = np.array([[float(v) for v in r[: len(r) - (1 if name == "bridge" else 0)]] for r in rows]) if rows else None
    series, summary = {}, {}
    if name == "homophily":
        for ell in cfg["orders"]:
            sel = a[a[:, 1] == ell]
            emp = [float(sel[sel[:, 0] == h, 3].mean()) for h in hs]
            pred = [float(sel[sel[:, 0] == h, 4][0]) for h in hs]
            series[f"empirical l={ell}"] = (hs, emp)
            series[f"predicted l={ell}"] = (hs, pred)
            summary[f"ell{ell}"] = {"empirical": emp, "predicted": pred}
    elif name == "bridge":
        base = [float(a[a[:, 0] == h, 2].mean()) for h in hs]
        post = [float(a[a[:, 0] == h, 3].mean()) for h in hs]
        series = {"baseline": (hs, base), "BRIDGE": (hs, post)}
        summary = {"baseline": base, "post": post}
    elif name == "snr":
        emp = [float(a[a[:, 0] == h, 2].mean()) for h in hs]
        pred = [float(a[a[:, 0] == h, 3].mean()) for h in hs]
        series = {"empirical": (hs, emp), "predicted": (hs, pred)}
        summary = {"empirical": emp, "predicted": pred}
    else:
        acc = [float(v) for v in a[:, 1]]
        series = {"condition accuracy": (hs, acc)}
        summary = {"accuracy": acc}
    return series, summary


_HANDLERS = {
    "sample": cmd_sample,
    "analyze": cmd_analyze,
    "snr": cmd_snr,
    "bridge": cmd_bridge,
    "benchmark": cmd_benchmark,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="snrgraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "sample": "sample a planted-partition graph with features",
        "analyze": "higher-order homophily, bottleneck scores and ensemble predictions",
        "snr": "predicted (and Monte-Carlo) SNR with the sensitivity condition",
        "bridge": "run BRIDGE rewiring",
        "benchmark": "parameter sweeps over an h grid",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="flat key = value config file", default=None)
        for key, _, default, text in OPTIONS:
            shown = ",".join(map(str, default)) if isinstance(default, list) else default
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None, help=f"{text} (default: {shown})")
    return parser


def run(argv=None):
    """Execute one command; returns the exit code."""
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        file_values = read_config_file(args.config) if args.config else {}
        flags = {key: getattr(args, key) for key, *_ in OPTIONS}
        cfg = resolve_config(args.command, file_values, flags)
        out, summary, seeds = _HANDLERS[args.command](cfg)
        report = make_report(args.command, _config_echo(cfg), summary, out.names(), seeds, time.perf_counter() - start)
        out.flush(report=report)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GraphDataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # parameter checks inside the library
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(os.path.join(cfg["out"], "report.json"))
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
