"""Pairwise gradient-boosted-tree ranking model.

The per-pair loss is a squared hinge on the score margin with a constant gap;
training runs functional gradient descent: each round fits a regression tree
to the per-instance gradients of the hinge term and folds it into the score
with the shrinking-average recurrence

    f_k(x) = (k * f_{k-1}(x) - beta * g_k(x)) / (k + 1).

The weak learner is a CART regression tree (scikit-learn's fitter, exported
into plain arrays so the stored model is self-contained); leaf values carry
an L2 shrinkage ``sum(residuals) / (n_leaf + lambda2)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.tree import DecisionTreeRegressor

from .binio import read_artifact, write_artifact
from .config import RankParams
from .errors import InvalidTau, SchemaMismatch
from .features import FeatureSchema
from .model import QueryLogEntry

log = logging.getLogger(__name__)

MODEL_MAGIC = b"PRM1"
MODEL_VERSION = 1


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------

def pair_loss(f1: float, f2: float, tau: float, lambda1: float = 0.0, lambda2: float = 0.0, reg_term: float = 0.0):
    """Per-pair squared-hinge value; the -lambda1*tau^2 and lambda2 terms are
    constants w.r.t. the learned function and enter only the logged objective
    (see :func:`objective`)."""
    if not 0.0 < tau <= 1.0:
        raise InvalidTau(f"tau must be in (0, 1], got {tau}")
    h = max(0.0, tau - (f1 - f2))
    return 0.5 * h * h


def objective(scores: np.ndarray, pairs: np.ndarray, tau: float, lambda1: float, lambda2: float, reg_term: float):
    """Full objective: summed hinge plus the constant regularization terms."""
    margins = scores[pairs[:, 0]] - scores[pairs[:, 1]]
    h = np.maximum(0.0, tau - margins)
    return 0.5 * float(np.sum(h * h)) - lambda1 * tau * tau + 0.5 * lambda2 * reg_term


def hinge_gradients(scores: np.ndarray, pairs: np.ndarray, tau: float, n: int) -> np.ndarray:
    """dL/df per instance: -h at the preferred side, +h at the other."""
    h = np.maximum(0.0, tau - (scores[pairs[:, 0]] - scores[pairs[:, 1]]))
    grad = np.zeros(n, dtype=np.float64)
    np.add.at(grad, pairs[:, 0], -h)
    np.add.at(grad, pairs[:, 1], +h)
    return grad


# ---------------------------------------------------------------------------
# Pair construction
# ---------------------------------------------------------------------------

def make_pair_indices(entries: list[QueryLogEntry], offsets: list[int]) -> list[tuple[int, int]]:
    """Preference pairs as global instance indices.

    ``offsets[q]`` is the index of query ``q``'s first presented route in the
    instance matrix.  Feedback routes (earliest first) dominate later-feedback
    routes and every non-feedback route; non-feedback routes pair with
    nothing among themselves.  Queries without feedback yield no pairs.
    """
    pairs: list[tuple[int, int]] = []
    skipped = 0
    for q, entry in enumerate(entries):
        if not entry.feedback:
            skipped += 1
            continue
        pos = {r.route_id: offsets[q] + i for i, r in enumerate(entry.presented_routes)}
        earliest: dict[str, int] = {}
        for fb in entry.feedback:
            if fb.route_id not in earliest:
                earliest[fb.route_id] = fb.timestamp
        ranked = sorted(earliest, key=lambda rid: (earliest[rid], rid))
        others = [r.route_id for r in entry.presented_routes if r.route_id not in earliest]
        for i, hi in enumerate(ranked):
            for lo in ranked[i + 1 :]:
                pairs.append((pos[hi], pos[lo]))
            for lo in others:
                pairs.append((pos[hi], pos[lo]))
    if skipped:
        log.info("pair construction: %d queries without feedback skipped", skipped)
    return pairs


# ---------------------------------------------------------------------------
# Trees
# ---------------------------------------------------------------------------

@dataclass
class Tree:
    children_left: np.ndarray
    children_right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray  # leaf / node response

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.children_left[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            n = node[idx]
            go_left = X[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.children_left[n], self.children_right[n])
            active = self.children_left[node] >= 0
        return self.value[node]

    def predict_one(self, x: np.ndarray) -> float:
        node = 0
        while self.children_left[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.children_left[node]
            else:
                node = self.children_right[node]
        return float(self.value[node])


def _fit_tree(X: np.ndarray, target: np.ndarray, params: RankParams) -> tuple[Tree, np.ndarray]:
    """Fit one CART tree to ``target``; returns the exported tree and the
    per-feature split gain (unnormalized impurity decrease)."""
    reg = DecisionTreeRegressor(
        max_depth=params.max_depth,
        min_samples_leaf=params.min_leaf,
        random_state=params.seed,
    )
    reg.fit(X, target)
    t = reg.tree_
    value = t.value.reshape(-1).astype(np.float64).copy()
    # leaf L2 shrinkage: mean * n / (n + lambda2) == sum / (n + lambda2)
    if params.lambda2 > 0.0:
        leaves = t.children_left < 0
        n = t.n_node_samples[leaves].astype(np.float64)
        value[leaves] = value[leaves] * n / (n + params.lambda2)
    tree = Tree(
        children_left=t.children_left.astype(np.int64).copy(),
        children_right=t.children_right.astype(np.int64).copy(),
        feature=np.maximum(t.feature, 0).astype(np.int64).copy(),
        threshold=t.threshold.astype(np.float64).copy(),
        value=value,
    )
    gains = t.compute_feature_importances(normalize=False).astype(np.float64)
    if X.shape[1] > len(gains):  # pragma: no cover - defensive
        gains = np.pad(gains, (0, X.shape[1] - len(gains)))
    return tree, gains


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass
class RankModel:
    trees: list[Tree]
    params: RankParams
    schema: FeatureSchema | None
    feature_gain: np.ndarray  # cumulative split gain per feature
    train_loss: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.feature_gain)

    def score(self, fv: np.ndarray) -> float:
        if fv.shape[-1] != self.dim:
            raise SchemaMismatch(f"vector has dim {fv.shape[-1]}, model expects {self.dim}")
        f = 0.0
        for k, tree in enumerate(self.trees, start=1):
            f = (k * f - self.params.beta * tree.predict_one(fv)) / (k + 1)
        return f

    def score_many(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.dim:
            raise SchemaMismatch(f"matrix has dim {X.shape[1]}, model expects {self.dim}")
        f = np.zeros(len(X), dtype=np.float64)
        for k, tree in enumerate(self.trees, start=1):
            f = (k * f - self.params.beta * tree.predict(X)) / (k + 1)
        return f


def score(model: RankModel, fv: np.ndarray) -> float:
    return model.score(fv)


def train(
    X: np.ndarray,
    pairs: list[tuple[int, int]] | np.ndarray,
    params: RankParams | None = None,
    schema: FeatureSchema | None = None,
) -> RankModel:
    """Train the pairwise model; ``pairs`` are (preferred, other) row indices."""
    params = params or RankParams()
    params.validate()
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.size == 0:
        raise ValueError("cannot train on zero preference pairs")
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = len(X)
    reg_term = float(np.linalg.norm(X))

    model = RankModel(
        trees=[], params=params, schema=schema, feature_gain=np.zeros(X.shape[1], dtype=np.float64)
    )
    scores = np.zeros(n, dtype=np.float64)
    for k in range(1, params.n_rounds + 1):
        grad = hinge_gradients(scores, pairs, params.tau, n)
        tree, gains = _fit_tree(X, grad, params)
        model.trees.append(tree)
        model.feature_gain += gains
        # shrinking-average update; -beta * gradient-fitted tree descends
        scores = (k * scores - params.beta * tree.predict(X)) / (k + 1)
        model.train_loss.append(objective(scores, pairs, params.tau, params.lambda1, params.lambda2, reg_term))
    return model


def feature_importance(model: RankModel) -> list[tuple[str, float]]:
    """Features by cumulative split gain, normalized so the top feature = 1."""
    names = model.schema.feature_names if model.schema is not None else [f"f{i}" for i in range(model.dim)]
    gains = model.feature_gain
    top = gains.max() if len(gains) else 0.0
    if top <= 0.0:
        return []
    ranked = sorted(zip(names, gains / top), key=lambda kv: (-kv[1], kv[0]))
    return [(n, float(g)) for n, g in ranked if g > 0.0]


def rerank(shortlist, model: RankModel, vectors: np.ndarray):
    """Order a shortlist by descending model score; ties keep primary order."""
    if len(shortlist) == 0:
        raise ValueError("shortlist must be non-empty")
    scores = model.score_many(vectors)
    order = sorted(range(len(shortlist)), key=lambda i: (-scores[i], i))
    return [shortlist[i] for i in order], [float(scores[i]) for i in order]


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_model(model: RankModel, path: str) -> None:
    header = {
        "params": {
            "tau": model.params.tau,
            "lambda1": model.params.lambda1,
            "lambda2": model.params.lambda2,
            "beta": model.params.beta,
            "n_rounds": model.params.n_rounds,
            "max_depth": model.params.max_depth,
            "min_leaf": model.params.min_leaf,
            "holdout_fraction": model.params.holdout_fraction,
            "seed": model.params.seed,
        },
        "n_trees": len(model.trees),
        "schema": model.schema.to_json() if model.schema is not None else None,
        "train_loss": model.train_loss,
    }
    arrays = {"feature_gain": model.feature_gain}
    for i, tree in enumerate(model.trees):
        arrays[f"t{i}.left"] = tree.children_left
        arrays[f"t{i}.right"] = tree.children_right
        arrays[f"t{i}.feature"] = tree.feature
        arrays[f"t{i}.threshold"] = tree.threshold
        arrays[f"t{i}.value"] = tree.value
    write_artifact(path, MODEL_MAGIC, MODEL_VERSION, header, arrays)


def load_model(path: str) -> RankModel:
    header, arrays = read_artifact(path, MODEL_MAGIC, MODEL_VERSION)
    params = RankParams(**header["params"])
    trees = [
        Tree(
            children_left=arrays[f"t{i}.left"],
            children_right=arrays[f"t{i}.right"],
            feature=arrays[f"t{i}.feature"],
            threshold=arrays[f"t{i}.threshold"],
            value=arrays[f"t{i}.value"],
        )
        for i in range(header["n_trees"])
    ]
    schema = FeatureSchema.from_json(header["schema"]) if header["schema"] else None
    return RankModel(
        trees=trees,
        params=params,
        schema=schema,
        feature_gain=arrays["feature_gain"],
        train_loss=list(header.get("train_loss", [])),
    )
