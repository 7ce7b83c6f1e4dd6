"""Evaluation statistics: agreement vs a baseline, median/MAD, classification
metrics, cost-ratio boundaries, Friedman/Nemenyi, and Cliff's delta.

All functions are pure; infinities are legal values for the cost boundaries
and rank as the largest entries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats as sps

MAD_SCALE = 1.4826

# two-tailed critical values for the Nemenyi test at infinite degrees of
# freedom (studentized range divided by sqrt(2)); k = number of treatments
NEMENYI_Q = {
    0.05: {2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850, 7: 2.949, 8: 3.031, 9: 3.102, 10: 3.164},
    0.10: {2: 1.645, 3: 2.052, 4: 2.291, 5: 2.459, 6: 2.589, 7: 2.693, 8: 2.780, 9: 2.855, 10: 2.920},
}

CLIFFS_THRESHOLDS = ((0.147, "negligible"), (0.33, "small"), (0.474, "medium"))


class StatsError(Exception):
    pass


def median(values: Sequence[float]) -> float:
    if len(values) == 0:
        raise StatsError("median of empty sample")
    return float(np.median(np.asarray(values, dtype=float)))


def mad(values: Sequence[float]) -> float:
    """1.4826 * median absolute deviation from the median."""
    if len(values) == 0:
        raise StatsError("mad of empty sample")
    arr = np.asarray(values, dtype=float)
    med = np.median(arr)
    return float(MAD_SCALE * np.median(np.abs(arr - med)))


# -- agreement ----------------------------------------------------------------


@dataclass(frozen=True)
class AgreementEntry:
    baseline_size: int
    true_positive_rate: float
    additional_rate: float


def agreement(candidate: set, baseline: set) -> Optional[AgreementEntry]:
    """Share of baseline artifacts found, plus additional ones, both relative
    to the baseline size. None for an empty baseline (undefined)."""
    n = len(baseline)
    if n == 0:
        return None
    return AgreementEntry(
        baseline_size=n,
        true_positive_rate=len(candidate & baseline) / n,
        additional_rate=len(candidate - baseline) / n,
    )


@dataclass
class AgreementReport:
    per_project: dict[str, AgreementEntry] = field(default_factory=dict)
    excluded: list[str] = field(default_factory=list)

    @property
    def tp_median(self) -> float:
        return median([e.true_positive_rate for e in self.per_project.values()])

    @property
    def tp_mad(self) -> float:
        return mad([e.true_positive_rate for e in self.per_project.values()])

    @property
    def additional_median(self) -> float:
        return median([e.additional_rate for e in self.per_project.values()])

    @property
    def additional_mad(self) -> float:
        return mad([e.additional_rate for e in self.per_project.values()])


def aggregate_agreement(pairs: dict[str, tuple[set, set]]) -> AgreementReport:
    """Per-project agreement; projects with an empty baseline are excluded
    and reported (mirrors dropping releases without any bug fix)."""
    report = AgreementReport()
    for name, (candidate, baseline) in sorted(pairs.items()):
        entry = agreement(candidate, baseline)
        if entry is None:
            report.excluded.append(name)
        else:
            report.per_project[name] = entry
    return report


# -- classification metrics ---------------------------------------------------


@dataclass(frozen=True)
class ClassificationMetrics:
    recall: Optional[float]
    precision: Optional[float]
    f_measure: Optional[float]
    tp: int
    fp: int
    fn: int
    tn: int


def classification_metrics(
    predictions: dict[str, bool], labels: dict[str, bool]
) -> ClassificationMetrics:
    if set(predictions) != set(labels):
        raise StatsError("predictions and labels must cover the same artifacts")
    tp = sum(1 for k in labels if predictions[k] and labels[k])
    fp = sum(1 for k in labels if predictions[k] and not labels[k])
    fn = sum(1 for k in labels if not predictions[k] and labels[k])
    tn = len(labels) - tp - fp - fn
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    if recall is None or precision is None or (precision + recall) == 0:
        f_measure = None
    else:
        f_measure = 2 * precision * recall / (precision + recall)
    return ClassificationMetrics(recall, precision, f_measure, tp, fp, fn, tn)


# -- cost model ---------------------------------------------------------------


@dataclass(frozen=True)
class CostBounds:
    lower: float
    upper: float
    predicted_defects: int
    missed_defects: int
    predicted_size: float
    missed_size: float

    @property
    def can_save_costs(self) -> bool:
        return self.lower < self.upper


def cost_bounds(
    predictions: dict[str, bool],
    sizes: dict[str, float],
    defects: Iterable[frozenset[str] | set[str]],
) -> CostBounds:
    """Boundaries on the QA-to-defect cost ratio under perfect QA.

    lower = size of predicted files / number of fully predicted defects;
    upper = size of unpredicted files / number of missed defects. A defect is
    predicted only when every file it affects is predicted. Nothing predicted
    gives lower 0; predictions without a single fully-predicted defect give
    lower infinity; no missed defect gives upper infinity.
    """
    defect_sets = [frozenset(d) for d in defects]
    for d in defect_sets:
        if not d:
            raise StatsError("defect with empty file set")
        missing = d - set(predictions)
        if missing:
            raise StatsError(f"defect references files outside the prediction domain: {sorted(missing)[:3]}")
    predicted_files = {f for f, flag in predictions.items() if flag}
    predicted_size = float(sum(sizes[f] for f in predicted_files))
    missed_size = float(sum(sizes[f] for f, flag in predictions.items() if not flag))
    d_pred = [d for d in defect_sets if d <= predicted_files]
    d_miss = [d for d in defect_sets if not (d <= predicted_files)]
    if not predicted_files:
        lower = 0.0
    elif not d_pred:
        lower = math.inf
    else:
        lower = predicted_size / len(d_pred)
    upper = math.inf if not d_miss else missed_size / len(d_miss)
    return CostBounds(
        lower=lower,
        upper=upper,
        predicted_defects=len(d_pred),
        missed_defects=len(d_miss),
        predicted_size=predicted_size,
        missed_size=missed_size,
    )


# -- Cliff's delta ------------------------------------------------------------


def cliffs_delta(x: Sequence[float], y: Sequence[float]) -> tuple[float, str]:
    """delta = (#(x>y) - #(x<y)) / (|x| |y|) and its magnitude label."""
    if len(x) == 0 or len(y) == 0:
        raise StatsError("cliffs_delta of empty sample")
    greater = 0
    less = 0
    for xi in x:
        for yj in y:
            if xi > yj:
                greater += 1
            elif xi < yj:
                less += 1
    delta = (greater - less) / (len(x) * len(y))
    return delta, delta_magnitude(delta)


def delta_magnitude(delta: float) -> str:
    size = abs(delta)
    for threshold, label in CLIFFS_THRESHOLDS:
        if size < threshold:
            return label
    return "large"


# -- Friedman / Nemenyi -------------------------------------------------------


def _rank_rows(matrix: np.ndarray) -> np.ndarray:
    """Mid-ranks per dataset row, ranking larger values higher; infinities
    rank extreme (an infinite upper bound is the best value)."""
    return np.vstack([sps.rankdata(row) for row in matrix])


def friedman_statistic(matrix: np.ndarray) -> float:
    n, k = matrix.shape
    ranks = _rank_rows(matrix)
    mean_ranks = ranks.mean(axis=0)
    return float(12.0 * n / (k * (k + 1)) * np.sum((mean_ranks - (k + 1) / 2.0) ** 2))


def friedman_exact_pvalue(matrix: np.ndarray) -> float:
    """Exact permutation p-value by enumerating all within-row orderings.

    Only sensible for tiny inputs; guarded at N*k <= 12.
    """
    matrix = np.asarray(matrix, dtype=float)
    n, k = matrix.shape
    if n * k > 12:
        raise StatsError("exact permutation test limited to N*k <= 12")
    observed = friedman_statistic(matrix)
    perms = list(permutations(range(k)))
    count = 0
    total = 0
    for combo in product(perms, repeat=n):
        permuted = np.vstack([matrix[i, list(combo[i])] for i in range(n)])
        total += 1
        if friedman_statistic(permuted) >= observed - 1e-12:
            count += 1
    return count / total


@dataclass
class RankTestResult:
    statistic: float
    p_value: float
    df: int
    mean_ranks: dict[str, float]
    alpha: float
    critical_distance: float
    significant: bool
    significant_pairs: list[tuple[str, str]]
    cliffs: dict[tuple[str, str], tuple[float, str]]
    p_exact: Optional[float] = None


def friedman_nemenyi(
    matrix: Sequence[Sequence[float]],
    alpha: float = 0.05,
    treatments: Optional[Sequence[str]] = None,
) -> RankTestResult:
    """Friedman test over datasets x treatments with the Nemenyi post hoc.

    The chi-square approximation provides the p-value; for tiny inputs the
    exact permutation p-value is attached as well. Pairwise Cliff's delta is
    computed on the raw columns for effect sizes.
    """
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2:
        raise StatsError("matrix must be two-dimensional (datasets x treatments)")
    n, k = arr.shape
    if k < 2 or n < 2:
        raise StatsError("need at least 2 treatments and 2 datasets")
    if np.isnan(arr).any():
        raise StatsError("matrix contains NaN")
    names = list(treatments) if treatments else [f"T{i+1}" for i in range(k)]
    if len(names) != k:
        raise StatsError("treatment names do not match matrix width")

    statistic = friedman_statistic(arr)
    df = k - 1
    p_value = float(sps.chi2.sf(statistic, df))
    ranks = _rank_rows(arr).mean(axis=0)
    mean_ranks = {names[i]: float(ranks[i]) for i in range(k)}

    q_table = NEMENYI_Q.get(round(alpha, 2))
    if q_table is None or k not in q_table:
        raise StatsError(f"no critical value for alpha={alpha}, k={k}")
    cd = q_table[k] * math.sqrt(k * (k + 1) / (6.0 * n))

    significant = p_value < alpha
    pairs = []
    cliffs: dict[tuple[str, str], tuple[float, str]] = {}
    for i, j in combinations(range(k), 2):
        cliffs[(names[i], names[j])] = cliffs_delta(list(arr[:, i]), list(arr[:, j]))
        if abs(ranks[i] - ranks[j]) >= cd:
            pairs.append((names[i], names[j]))

    p_exact = None
    # attach the exact oracle automatically only when the permutation space
    # (k!)^n enumerates quickly; it stays available via friedman_exact_pvalue
    if n * k <= 12 and math.factorial(k) ** n <= 20_000:
        p_exact = friedman_exact_pvalue(arr)
    return RankTestResult(
        statistic=statistic,
        p_value=p_value,
        df=df,
        mean_ranks=mean_ranks,
        alpha=alpha,
        critical_distance=cd,
        significant=significant,
        significant_pairs=pairs,
        cliffs=cliffs,
        p_exact=p_exact,
    )


# -- report emission ----------------------------------------------------------


def _quartiles(values: Sequence[float]) -> list[float]:
    arr = np.asarray(values, dtype=float)
    finite = arr[np.isfinite(arr)]
    if finite.size == 0:
        return [math.nan] * 5
    return [
        float(np.min(finite)),
        float(np.percentile(finite, 25)),
        float(np.percentile(finite, 50)),
        float(np.percentile(finite, 75)),
        float(np.max(finite)),
    ]


def write_stats_report(
    out_dir: str | Path,
    agreements: dict[str, AgreementReport],
    rank_tests: dict[str, RankTestResult],
    groups: dict[str, dict[str, Sequence[float]]],
) -> None:
    """Text tables plus a machine-readable results file and boxplot data."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    lines = []
    for name in sorted(agreements):
        rep = agreements[name]
        lines.append(f"== agreement: {name}")
        lines.append("project\tbaseline\ttp_rate\tadditional_rate")
        for project in sorted(rep.per_project):
            e = rep.per_project[project]
            lines.append(
                f"{project}\t{e.baseline_size}\t{e.true_positive_rate:.4f}\t{e.additional_rate:.4f}"
            )
        if rep.per_project:
            lines.append(
                f"median\t-\t{rep.tp_median:.4f} (MAD={rep.tp_mad:.4f})\t"
                f"{rep.additional_median:.4f} (MAD={rep.additional_mad:.4f})"
            )
        if rep.excluded:
            lines.append(f"excluded (empty baseline): {', '.join(rep.excluded)}")
        lines.append("")
    for name in sorted(rank_tests):
        r = rank_tests[name]
        lines.append(f"== rank test: {name}")
        lines.append(
            f"friedman chi2={r.statistic:.4f} df={r.df} p={r.p_value:.6f} "
            f"alpha={r.alpha} CD={r.critical_distance:.4f}"
        )
        for t, mr in sorted(r.mean_ranks.items(), key=lambda kv: kv[1]):
            lines.append(f"rank\t{t}\t{mr:.4f}")
        for a, b in r.significant_pairs:
            d, m = r.cliffs[(a, b)]
            lines.append(f"significant\t{a} vs {b}\tdelta={d:.4f} ({m})")
        lines.append("")
    (out / "comparisons.txt").write_text("\n".join(lines), encoding="utf-8")

    payload = {
        "agreements": {
            name: {
                "per_project": {
                    p: {
                        "baseline_size": e.baseline_size,
                        "tp_rate": e.true_positive_rate,
                        "additional_rate": e.additional_rate,
                    }
                    for p, e in rep.per_project.items()
                },
                "excluded": rep.excluded,
                "tp_median": rep.tp_median if rep.per_project else None,
                "tp_mad": rep.tp_mad if rep.per_project else None,
                "additional_median": rep.additional_median if rep.per_project else None,
                "additional_mad": rep.additional_mad if rep.per_project else None,
            }
            for name, rep in agreements.items()
        },
        "rank_tests": {
            name: {
                "statistic": r.statistic,
                "p_value": r.p_value,
                "p_exact": r.p_exact,
                "df": r.df,
                "mean_ranks": r.mean_ranks,
                "alpha": r.alpha,
                "critical_distance": r.critical_distance,
                "significant": r.significant,
                "significant_pairs": r.significant_pairs,
                "cliffs": {
                    f"{a}|{b}": {"delta": d, "magnitude": m}
                    for (a, b), (d, m) in r.cliffs.items()
                },
            }
            for name, r in rank_tests.items()
        },
    }
    (out / "results.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True, allow_nan=True), encoding="utf-8"
    )

    with (out / "boxplot.csv").open("w", encoding="utf-8") as fh:
        fh.write("comparison,group,min,q1,median,q3,max\n")
        for comparison in sorted(groups):
            for group in sorted(groups[comparison]):
                q = _quartiles(groups[comparison][group])
                fh.write(
                    comparison
                    + ","
                    + group
                    + ","
                    + ",".join("" if math.isnan(v) else f"{v:.6g}" for v in q)
                    + "\n"
                )
