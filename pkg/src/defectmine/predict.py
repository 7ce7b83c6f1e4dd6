"""Cross-project prediction over release datasets.

Features are the log-median transfer transform of churn and/or ingested
static metrics; the classifier is a Gaussian naive Bayes. Experiments hold
one release out, train on every other project's releases, and score the
result with the cost-ratio boundaries.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from defectmine.fixlabel import FixLabel
from defectmine.inducing import FilterConfig
from defectmine.releases import Release, production_files
from defectmine.stats import ClassificationMetrics, CostBounds, classification_metrics, cost_bounds
from defectmine.vcs.blame import file_lineage
from defectmine.vcs.model import ChangeGraph

log = logging.getLogger("defectmine.predict")

CHURN_FEATURES = (
    "revisions",
    "lines_added",
    "lines_deleted",
    "authors",
    "prior_fixes",
    "age_days",
)


class PredictError(Exception):
    pass


def churn_features(
    graph: ChangeGraph,
    release: Release,
    fix_labels: Iterable[FixLabel],
    config: FilterConfig,
) -> dict[str, dict[str, float]]:
    """History features per production file at the release commit."""
    fixing = {l.commit for l in fix_labels}
    out: dict[str, dict[str, float]] = {}
    for path in production_files(graph, release, config):
        lineage = file_lineage(graph, release.release_commit, path)
        touched = [(cid, action) for cid, _p, action in lineage if action is not None]
        added = sum(
            h.new_len for _cid, a in touched for h in a.hunks
        )
        deleted = sum(
            h.old_len for _cid, a in touched for h in a.hunks
        )
        authors = {graph.commit(cid).author_email for cid, _a in touched}
        prior_fixes = sum(1 for cid, _a in touched if cid in fixing)
        if touched:
            born = min(graph.commit(cid).committer_date for cid, _a in touched)
        else:
            born = release.released_at
        age_days = (release.released_at - born).total_seconds() / 86400.0
        out[path] = {
            "revisions": float(len(touched)),
            "lines_added": float(added),
            "lines_deleted": float(deleted),
            "authors": float(len(authors)),
            "prior_fixes": float(prior_fixes),
            "age_days": age_days,
        }
    return out


# -- transfer transform ---------------------------------------------------------


def transfer_transform(
    train: dict[str, dict[str, float]],
    test: dict[str, dict[str, float]],
    feature_names: Sequence[str],
) -> tuple[dict[str, dict[str, float]], dict[str, dict[str, float]]]:
    """Log-median alignment of test features toward the training data.

    Training vectors become log(1+m); test vectors are shifted so the median
    of each transformed test feature equals the training log-median. Negative
    values (possible in ingested metrics) are shifted by the per-feature
    global minimum before the log.
    """
    train_out = {f: {} for f in train}
    test_out = {f: {} for f in test}
    for name in feature_names:
        train_vals = np.array([train[k].get(name, 0.0) for k in train], dtype=float)
        test_vals = np.array([test[k].get(name, 0.0) for k in test], dtype=float)
        low = min(
            train_vals.min(initial=0.0), test_vals.min(initial=0.0)
        )
        shift = -low if low < 0 else 0.0
        train_log = np.log1p(train_vals + shift)
        test_log = np.log1p(test_vals + shift)
        med_train = float(np.median(train_log)) if train_log.size else 0.0
        med_test = float(np.median(test_log)) if test_log.size else 0.0
        for key, value in zip(train, train_log):
            train_out[key][name] = float(value)
        for key, value in zip(test, test_log):
            test_out[key][name] = float(value + med_train - med_test)
    return train_out, test_out


# -- Gaussian naive Bayes -------------------------------------------------------


@dataclass
class TransferModel:
    feature_names: list[str]
    classes: list[int]
    priors: np.ndarray
    means: np.ndarray  # classes x features
    variances: np.ndarray  # classes x features

    def log_posteriors(self, vector: Sequence[float]) -> np.ndarray:
        x = np.asarray(vector, dtype=float)
        joint = np.log(self.priors).copy()
        for ci in range(len(self.classes)):
            mu = self.means[ci]
            var = self.variances[ci]
            joint[ci] += float(
                np.sum(-0.5 * np.log(2.0 * math.pi * var) - ((x - mu) ** 2) / (2.0 * var))
            )
        # normalize via logsumexp
        peak = joint.max()
        log_norm = peak + math.log(np.sum(np.exp(joint - peak)))
        return joint - log_norm

    def predict(self, vector: Sequence[float]) -> tuple[float, int]:
        """Posterior of the positive class and the argmax class."""
        post = np.exp(self.log_posteriors(vector))
        positive = post[self.classes.index(1)] if 1 in self.classes else 0.0
        return float(positive), int(self.classes[int(np.argmax(post))])


def gaussian_nb(
    vectors: dict[str, dict[str, float]],
    labels: dict[str, bool],
    feature_names: Sequence[str],
    var_smoothing: float = 1e-9,
) -> TransferModel:
    """Fit class-conditional normals with variance smoothing of
    ``var_smoothing * max feature variance``."""
    keys = sorted(vectors)
    x = np.array([[vectors[k].get(f, 0.0) for f in feature_names] for k in keys], dtype=float)
    y = np.array([1 if labels[k] else 0 for k in keys], dtype=int)
    classes = sorted(set(int(v) for v in y))
    if len(classes) < 2:
        raise PredictError("training data contains a single class")
    eps = var_smoothing * float(np.var(x, axis=0).max()) if x.size else var_smoothing
    means = []
    variances = []
    priors = []
    for c in classes:
        rows = x[y == c]
        means.append(rows.mean(axis=0))
        variances.append(rows.var(axis=0) + eps)
        priors.append(len(rows) / len(y))
    return TransferModel(
        feature_names=list(feature_names),
        classes=classes,
        priors=np.array(priors),
        means=np.vstack(means),
        variances=np.vstack(variances),
    )


# -- experiment ----------------------------------------------------------------


@dataclass(frozen=True)
class ReleaseDataset:
    """One release's feature table with labels under several variants."""

    project: str
    release: str
    features: dict[str, dict[str, float]]  # file -> feature -> value
    labels: dict[str, dict[str, bool]]  # variant -> file -> defective
    defects: dict[str, tuple[frozenset[str], ...]]  # variant -> defect file sets
    sizes: dict[str, float]  # file -> logical lines of code

    def files(self) -> list[str]:
        return sorted(self.features)


@dataclass
class ModelOutcome:
    model: str
    release: str
    cost: CostBounds
    metrics: ClassificationMetrics


@dataclass
class ExperimentResult:
    outcomes: list[ModelOutcome] = field(default_factory=list)
    selected_releases: list[str] = field(default_factory=list)

    def bounds_matrix(self, which: str) -> tuple[list[str], list[str], list[list[float]]]:
        """releases x models matrix of a boundary for rank testing."""
        models = sorted({o.model for o in self.outcomes})
        releases = sorted({o.release for o in self.outcomes})
        cell: dict[tuple[str, str], float] = {}
        for o in self.outcomes:
            cell[(o.release, o.model)] = getattr(o.cost, which)
        matrix = [[cell[(r, m)] for m in models] for r in releases]
        return releases, models, matrix

    def never_saves_share(self, model: str) -> float:
        rows = [o for o in self.outcomes if o.model == model]
        if not rows:
            return math.nan
        return sum(1 for o in rows if o.cost.lower >= o.cost.upper) / len(rows)


def passes_filter(
    dataset: ReleaseDataset,
    variants: Sequence[str],
    min_files: int = 100,
    min_defective: int = 5,
) -> bool:
    files = dataset.files()
    if len(files) < min_files:
        return False
    for variant in variants:
        labels = dataset.labels.get(variant)
        if labels is None:
            return False
        if sum(1 for f in files if labels.get(f, False)) < min_defective:
            return False
    return True


def run_experiment(
    datasets: Sequence[ReleaseDataset],
    label_variants: Sequence[str],
    feature_sets: dict[str, Sequence[str]],
    eval_variant: Optional[str] = None,
    min_files: int = 100,
    min_defective: int = 5,
) -> ExperimentResult:
    """Hold each qualifying release out, train on all other projects.

    Models form the grid ``<variant>-<featureset>``; evaluation labels come
    from ``eval_variant`` (default: the last variant, i.e. the cleanest).
    """
    eval_variant = eval_variant or label_variants[-1]
    selected = [d for d in datasets if passes_filter(d, label_variants, min_files, min_defective)]
    if len(selected) < 2:
        raise PredictError(
            f"fewer than two releases pass the filter "
            f"(min {min_files} files, {min_defective} defective per variant)"
        )
    result = ExperimentResult(selected_releases=[f"{d.project}:{d.release}" for d in selected])
    for held_out in selected:
        train_sets = [d for d in selected if d.project != held_out.project]
        if not train_sets:
            log.warning("no training projects for %s; skipped", held_out.release)
            continue
        for variant in label_variants:
            for fs_name, feature_names in sorted(feature_sets.items()):
                model_name = f"{variant}-{fs_name}"
                train_features: dict[str, dict[str, float]] = {}
                train_labels: dict[str, bool] = {}
                for d in train_sets:
                    for f in d.files():
                        key = f"{d.project}:{d.release}:{f}"
                        train_features[key] = d.features[f]
                        train_labels[key] = d.labels[variant].get(f, False)
                t_train, t_test = transfer_transform(
                    train_features, held_out.features, feature_names
                )
                model = gaussian_nb(t_train, train_labels, feature_names)
                predictions = {
                    f: model.predict([t_test[f].get(n, 0.0) for n in feature_names])[1] == 1
                    for f in held_out.files()
                }
                eval_labels = {
                    f: held_out.labels[eval_variant].get(f, False) for f in held_out.files()
                }
                cost = cost_bounds(predictions, held_out.sizes, held_out.defects[eval_variant])
                metrics = classification_metrics(predictions, eval_labels)
                result.outcomes.append(
                    ModelOutcome(
                        model=model_name,
                        release=f"{held_out.project}:{held_out.release}",
                        cost=cost,
                        metrics=metrics,
                    )
                )
    return result
