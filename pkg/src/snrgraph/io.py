"""Readers and writers for graphs, labels, features, models and reports.

Edge lists are UTF-8 text with one ``u v`` pair per line and ``#``
comments; labels hold one integer per line; features are header-less CSV.
Parse errors carry the 1-based line number.
"""

import csv
import json
import math
import os

import numpy as np

from .classifier import GCNClassifier
from .exceptions import GraphDataError
from .graph import build_graph

MODEL_FORMAT = "snrgraph-model"
MODEL_VERSION = 1


def _lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            yield from enumerate(fh, start=1)
    except UnicodeDecodeError as exc:
        raise GraphDataError(f"{path}: not UTF-8 text ({exc.reason})") from None
    except OSError as exc:
        raise GraphDataError(f"cannot read {path}: {exc.strerror}") from None


def _int(token, lineno, what):
    try:
        return int(token)
    except ValueError:
        raise GraphDataError(f"{what} {token!r} is not an integer", line=lineno) from None


def read_edges(path):
    """Return the edge list of ``path`` as an (m, 2) int64 array."""
    pairs = []
    for lineno, raw in _lines(path):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) != 2:
            raise GraphDataError(f"expected 'u v', got {text!r}", line=lineno)
        u, v = (_int(t, lineno, "node id") for t in parts)
        if u < 0 or v < 0:
            raise GraphDataError("node ids must be non-negative", line=lineno)
        pairs.append((u, v))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def read_labels(path):
    out = []
    for lineno, raw in _lines(path):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        y = _int(text, lineno, "label")
        if y < 0:
            raise GraphDataError("labels must be non-negative", line=lineno)
        out.append(y)
    return np.array(out, dtype=np.int64)


def read_features(path):
    rows = []
    width = None
    for lineno, raw in _lines(path):
        if not raw.strip():
            continue
        cells = next(csv.reader([raw]))
        try:
            row = [float(c) for c in cells]
        except ValueError:
            raise GraphDataError(f"non-numeric feature value in {cells!r}", line=lineno) from None
        if not all(math.isfinite(x) for x in row):
            raise GraphDataError("features must be finite", line=lineno)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise GraphDataError(f"expected {width} columns, got {len(row)}", line=lineno)
        rows.append(row)
    if not rows:
        raise GraphDataError(f"{path}: no feature rows")
    return np.array(rows)


def read_graph(edges_path, labels_path, features_path=None, k=None):
    """Load a graph whose node count is the number of labels."""
    labels = read_labels(labels_path)
    edges = read_edges(edges_path)
    n = labels.size
    if edges.size and edges.max() >= n:
        bad = int(np.argmax(edges.max(axis=1) >= n))
        raise GraphDataError(f"edge {bad + 1} references node {int(edges[bad].max())} but only {n} labels are given")
    X = None if features_path is None else read_features(features_path)
    if X is not None and X.shape[0] != n:
        raise GraphDataError(f"{features_path}: {X.shape[0]} feature rows for {n} nodes")
    return build_graph(edges, labels, features=X, k=k, n=n)


def write_edges(path, graph):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# nodes {graph.n} edges {graph.n_edges}\n")
        for u, v in graph.edges():
            fh.write(f"{u} {v}\n")


def write_labels(path, labels):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{int(y)}\n" for y in labels)


def write_features(path, X):
    np.savetxt(path, np.asarray(X, dtype=np.float64), delimiter=",", fmt="%.17g")


def finite_or_sentinel(obj):
    """Recursively convert numpy values to JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): finite_or_sentinel(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [finite_or_sentinel(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return finite_or_sentinel(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(finite_or_sentinel(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else str(finite_or_sentinel(v))
    if isinstance(v, (np.integer, np.bool_)):
        return v.item()
    return v


def write_history(path, history, columns=("iteration", "accuracy", "h2", "optimum_value", "mean_degree")):
    write_csv(path, columns, ([rec.get(c) for c in columns] for rec in history))


def _pack(a):
    a = np.asarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "values": a.ravel(order="C").tolist()}


def _unpack(d):
    return np.asarray(d["values"], dtype=np.float64).reshape(d["shape"], order="C")


def save_model(path, model):
    """JSON weight dump (shapes + row-major values) of a fitted :class:`GCNClassifier`."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "hyperparameters": {k: v for k, v in model.get_params().items()},
        "n_classes": int(model.n_classes_),
        "operator": model.operator_kind_,
        "scale": _pack(model.scale_),
        "params": {k: _pack(v) for k, v in model.params_.items()},
        "final_params": {k: _pack(v) for k, v in model.final_params_.items()},
        "history": [list(h) for h in model.history_],
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, allow_nan=False)
    os.replace(tmp, path)


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise GraphDataError(f"cannot load model {path}: {exc}") from None
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise GraphDataError(f"{path} is not a version-{MODEL_VERSION} {MODEL_FORMAT} file")
    m = GCNClassifier(**doc["hyperparameters"])
    m.n_classes_ = doc["n_classes"]
    m.classes_ = np.arange(m.n_classes_)
    m.operator_kind_ = doc["operator"]
    m.scale_ = _unpack(doc["scale"])
    m.params_ = {k: _unpack(v) for k, v in doc["params"].items()}
    m.final_params_ = {k: _unpack(v) for k, v in doc["final_params"].items()}
    m.history_ = [tuple(h) for h in doc["history"]]
    return m
