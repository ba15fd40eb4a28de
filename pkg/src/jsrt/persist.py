"""JSON persistence for :class:`~jsrt.tree.TreeModel`.

Floats are written with ``repr`` (shortest round-tripping form, at most 17
significant digits), so a load reproduces every threshold and prediction
bit for bit. Infinite diagnostics such as ``gamma`` are stored as the string
``"inf"`` to keep the document strict JSON.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .config import InductionConfig
from .errors import CorruptModel, ModelFileError, SchemaVersionMismatch
from .tree import LeafStats, TreeModel

FORMAT = "jsrt-tree"
SCHEMA_VERSION = 1


def _enc(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return _enc(v.item())
    return v


def _dec(v):
    if v in ("inf", "-inf", "nan"):
        return float(v)
    return v


def model_to_dict(model: TreeModel) -> dict:
    nodes = []
    for i in range(model.n_nodes):
        if model.feature[i] < 0:
            nodes.append({"leaf": int(model.leaf[i])})
        else:
            nodes.append({
                "feature": int(model.feature[i]),
                "threshold": float(model.threshold[i]),
                "left": int(model.left[i]),
                "right": int(model.right[i]),
            })
    return {
        "format": FORMAT,
        "schema_version": SCHEMA_VERSION,
        "config": model.config.to_dict(),
        "n_features": model.n_features,
        "nodes": nodes,
        "leaves": [
            {"leaf_id": s.leaf_id, "n": s.n, "mean": s.mean, "variance": s.variance}
            for s in model.leaves
        ],
        "leaf_predictions": [float(v) for v in model.leaf_predictions],
        "metadata": {k: _enc(v) for k, v in model.metadata.items()},
    }


def model_from_dict(doc: dict) -> TreeModel:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CorruptModel("not a jsrt tree document")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"model schema {doc.get('schema_version')!r}, this build reads {SCHEMA_VERSION}"
        )
    try:
        nodes = doc["nodes"]
        k = len(nodes)
        feature = np.full(k, -1, dtype=np.int64)
        threshold = np.zeros(k)
        left = np.full(k, -1, dtype=np.int64)
        right = np.full(k, -1, dtype=np.int64)
        leaf = np.full(k, -1, dtype=np.int64)
        for i, nd in enumerate(nodes):
            if "leaf" in nd:
                leaf[i] = int(nd["leaf"])
            else:
                feature[i] = int(nd["feature"])
                threshold[i] = float(nd["threshold"])
                left[i] = int(nd["left"])
                right[i] = int(nd["right"])
        leaves = tuple(
            LeafStats(int(s["leaf_id"]), int(s["n"]), float(s["mean"]), float(s["variance"]))
            for s in doc["leaves"]
        )
        preds = np.array([float(v) for v in doc["leaf_predictions"]], dtype=np.float64)
        model = TreeModel(
            feature=feature,
            threshold=threshold,
            left=left,
            right=right,
            leaf=leaf,
            leaves=leaves,
            leaf_predictions=preds,
            config=InductionConfig.from_dict(doc["config"]),
            n_features=int(doc["n_features"]),
            metadata={kk: _dec(v) for kk, v in doc.get("metadata", {}).items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"malformed model document: {exc}") from exc
    _validate(model)
    return model


def _validate(model: TreeModel):
    k = model.n_nodes
    if k == 0:
        raise CorruptModel("empty node array")
    n_leaves = int((model.feature < 0).sum())
    if n_leaves != len(model.leaves) or model.leaf_predictions.shape[0] != n_leaves:
        raise CorruptModel("leaf count mismatch")
    if sorted(model.leaf[model.feature < 0].tolist()) != list(range(n_leaves)):
        raise CorruptModel("leaf ids are not a permutation")
    internal = model.feature >= 0
    kids = np.concatenate([model.left[internal], model.right[internal]])
    if kids.size and (kids.min() < 1 or kids.max() >= k or np.unique(kids).size != kids.size):
        raise CorruptModel("invalid child indices")
    if kids.size != k - 1:
        raise CorruptModel("nodes are not a single binary tree")
    if (model.feature[internal] >= model.n_features).any():
        raise CorruptModel("split feature out of range")


def save_model(model: TreeModel, path) -> None:
    doc = model_to_dict(model)
    try:
        with open(os.fspath(path), "w", encoding="utf-8") as fh:
            json.dump(doc, fh, allow_nan=False, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise ModelFileError(f"cannot write {path}: {exc}") from exc


def load_model(path) -> TreeModel:
    try:
        with open(os.fspath(path), encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"{path}: not valid JSON ({exc.msg})") from exc
    return model_from_dict(doc)
