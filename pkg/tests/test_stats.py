import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defectmine.stats import (
    NEMENYI_Q,
    StatsError,
    aggregate_agreement,
    agreement,
    classification_metrics,
    cliffs_delta,
    cost_bounds,
    delta_magnitude,
    friedman_exact_pvalue,
    friedman_nemenyi,
    friedman_statistic,
    mad,
    median,
    write_stats_report,
)

from oracles import friedman_exact_oracle, friedman_statistic_oracle

finite_floats = st.floats(
    allow_nan=False, allow_infinity=False, min_value=-1e9, max_value=1e9
)


# -- median / MAD ---------------------------------------------------------------


def test_mad_constant_sample():
    assert mad([1.0, 1.0, 1.0]) == 0.0


def test_mad_hand_computed():
    # median 3, absolute deviations {2,1,0,1,2}, median deviation 1
    assert mad([1, 2, 3, 4, 5]) == pytest.approx(1.4826, abs=1e-12)


def test_mad_estimates_normal_sigma():
    rng = np.random.default_rng(20240817)
    draws = rng.standard_normal(100_000)
    assert mad(list(draws)) == pytest.approx(1.0, rel=0.02)


def test_mad_empty_rejected():
    with pytest.raises(StatsError):
        mad([])
    with pytest.raises(StatsError):
        median([])


@settings(max_examples=100)
@given(st.lists(finite_floats, min_size=1, max_size=30),
       st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
       st.floats(min_value=-1e3, max_value=1e3, allow_nan=False))
def test_mad_translation_and_scale(sample, shift, scale):
    base = mad(sample)
    shifted = mad([x + shift for x in sample])
    assert shifted == pytest.approx(base, rel=1e-9, abs=1e-6)
    scaled = mad([scale * x for x in sample])
    assert scaled == pytest.approx(abs(scale) * base, rel=1e-9, abs=1e-6)


def test_median_even_length_mean_of_central_pair():
    assert median([1.0, 2.0, 10.0, 20.0]) == 6.0


# -- agreement -------------------------------------------------------------------


def test_agreement_identical_sets():
    entry = agreement({"a", "b"}, {"a", "b"})
    assert (entry.true_positive_rate, entry.additional_rate) == (1.0, 0.0)


def test_agreement_empty_candidate():
    entry = agreement(set(), {"a"})
    assert (entry.true_positive_rate, entry.additional_rate) == (0.0, 0.0)


def test_agreement_mixed():
    baseline = set(range(10))
    candidate = set(range(8)) | {"x", "y", "z"}
    entry = agreement(candidate, baseline)
    assert entry.true_positive_rate == pytest.approx(0.8)
    assert entry.additional_rate == pytest.approx(0.3)


def test_agreement_empty_baseline_excluded():
    report = aggregate_agreement({"p1": ({"a"}, set()), "p2": ({"a"}, {"a"})})
    assert report.excluded == ["p1"]
    assert list(report.per_project) == ["p2"]
    assert report.tp_median == 1.0


# -- classification metrics ------------------------------------------------------


def test_noise_arithmetic_example():
    # 100 artifacts, 25 truly defective, noisy labels mark 50, trivial
    # all-defective predictor
    artifacts = [f"f{i}" for i in range(100)]
    predictions = {a: True for a in artifacts}
    noisy = {a: i < 50 for i, a in enumerate(artifacts)}
    true = {a: i < 25 for i, a in enumerate(artifacts)}
    on_noisy = classification_metrics(predictions, noisy)
    on_true = classification_metrics(predictions, true)
    assert on_noisy.precision == pytest.approx(0.5, abs=1e-9)
    assert on_true.precision == pytest.approx(0.25, abs=1e-9)
    assert on_noisy.f_measure == pytest.approx(2.0 / 3.0, abs=1e-9)
    assert on_true.f_measure == pytest.approx(0.4, abs=1e-9)
    assert on_noisy.recall == on_true.recall == 1.0


def test_perfect_prediction():
    labels = {"a": True, "b": False}
    m = classification_metrics(labels, labels)
    assert (m.recall, m.precision, m.f_measure) == (1.0, 1.0, 1.0)


def test_no_positives_predicted():
    m = classification_metrics({"a": False, "b": False}, {"a": True, "b": False})
    assert m.precision is None
    assert m.recall == 0.0
    assert m.f_measure is None


# -- cost model ------------------------------------------------------------------


def test_cost_bounds_infinite_upper():
    bounds = cost_bounds({"a": True, "b": False}, {"a": 100, "b": 50}, [{"a"}])
    assert bounds.lower == 100.0
    assert bounds.upper == math.inf


def test_cost_bounds_nothing_predicted():
    bounds = cost_bounds({"a": False, "b": False}, {"a": 100, "b": 50}, [{"a"}])
    assert bounds.lower == 0.0
    assert bounds.upper == 150.0


def test_cost_bounds_cannot_save():
    bounds = cost_bounds(
        {"a": True, "b": True, "c": False},
        {"a": 100, "b": 50, "c": 50},
        [{"a"}, {"b", "c"}],
    )
    assert bounds.lower == 150.0
    assert bounds.upper == 50.0
    assert not bounds.can_save_costs


def test_cost_bounds_predictions_without_caught_defect():
    bounds = cost_bounds({"a": True, "b": False}, {"a": 100, "b": 50}, [{"b"}])
    assert bounds.lower == math.inf
    assert bounds.upper == 50.0


def test_cost_bounds_validates_domain():
    with pytest.raises(StatsError):
        cost_bounds({"a": True}, {"a": 1}, [{"zz"}])
    with pytest.raises(StatsError):
        cost_bounds({"a": True}, {"a": 1}, [set()])


@settings(max_examples=60)
@given(
    st.dictionaries(
        st.sampled_from(["a", "b", "c", "d", "e"]), st.booleans(), min_size=2
    ),
    st.floats(min_value=0.01, max_value=1000, allow_nan=False),
)
def test_cost_bounds_scale_equivariance(predictions, scale):
    sizes = {f: 10.0 + 7 * i for i, f in enumerate(sorted(predictions))}
    files = sorted(predictions)
    defects = [{files[0]}, set(files[:2])]
    base = cost_bounds(predictions, sizes, defects)
    scaled = cost_bounds(predictions, {f: s * scale for f, s in sizes.items()}, defects)
    for lo, hi in ((base.lower, scaled.lower), (base.upper, scaled.upper)):
        if math.isinf(lo):
            assert math.isinf(hi)
        else:
            assert hi == pytest.approx(lo * scale, rel=1e-9)


# -- Cliff's delta ---------------------------------------------------------------


def test_cliffs_identical():
    delta, magnitude = cliffs_delta([1, 2, 3], [1, 2, 3])
    assert delta == 0.0 and magnitude == "negligible"


def test_cliffs_fully_separated():
    delta, magnitude = cliffs_delta([10, 11], [1, 2])
    assert delta == 1.0 and magnitude == "large"


def test_cliffs_hand_computed():
    delta, magnitude = cliffs_delta([1, 2], [1, 3])
    assert delta == pytest.approx(-0.25)
    assert magnitude == "small"


def test_cliffs_magnitude_boundaries():
    assert delta_magnitude(0.1469999) == "negligible"
    assert delta_magnitude(0.147) == "small"
    assert delta_magnitude(0.3299999) == "small"
    assert delta_magnitude(0.33) == "medium"
    assert delta_magnitude(0.4739999) == "medium"
    assert delta_magnitude(0.474) == "large"
    assert delta_magnitude(-0.474) == "large"


def test_cliffs_empty_rejected():
    with pytest.raises(StatsError):
        cliffs_delta([], [1])


@settings(max_examples=100)
@given(st.lists(finite_floats, min_size=1, max_size=15),
       st.lists(finite_floats, min_size=1, max_size=15))
def test_cliffs_antisymmetry(x, y):
    dxy, _ = cliffs_delta(x, y)
    dyx, _ = cliffs_delta(y, x)
    assert dxy == -dyx


def test_cliffs_handles_infinities():
    delta, magnitude = cliffs_delta([math.inf, math.inf], [1.0, 2.0])
    assert delta == 1.0 and magnitude == "large"


# -- Friedman / Nemenyi ----------------------------------------------------------


def test_friedman_identical_columns_statistic_zero():
    matrix = [[1.0, 1.0, 1.0]] * 4
    result = friedman_nemenyi(matrix, alpha=0.05)
    assert result.statistic == 0.0
    assert result.p_value == pytest.approx(1.0)
    assert not result.significant


def test_friedman_dominating_treatment():
    matrix = [[2.0, 1.0] for _ in range(20)]
    result = friedman_nemenyi(matrix, alpha=0.05)
    assert result.statistic == pytest.approx(20.0)
    assert result.p_value < 0.001
    assert result.significant


def test_q_table_spot_checks():
    assert NEMENYI_Q[0.05][2] == pytest.approx(1.960, abs=1e-3)
    assert NEMENYI_Q[0.05][3] == pytest.approx(2.343, abs=1e-3)
    assert NEMENYI_Q[0.05][10] == pytest.approx(3.164, abs=1e-3)
    assert NEMENYI_Q[0.10][2] == pytest.approx(1.645, abs=1e-3)
    assert NEMENYI_Q[0.10][5] == pytest.approx(2.459, abs=1e-3)


def test_q_table_entire_against_studentized_range():
    # the embedded constants are the studentized range divided by sqrt(2);
    # recompute every entry from the distribution itself
    from scipy.stats import studentized_range

    for alpha, row in NEMENYI_Q.items():
        for k, value in row.items():
            derived = float(studentized_range.ppf(1 - alpha, k, 1e6)) / math.sqrt(2)
            assert value == pytest.approx(derived, abs=2e-3), (alpha, k)


def test_critical_distance_formula():
    result = friedman_nemenyi([[1.0, 2.0], [2.0, 1.0], [1.5, 2.5]], alpha=0.05)
    assert result.critical_distance == pytest.approx(
        1.960 * math.sqrt(2 * 3 / (6.0 * 3)), abs=1e-9
    )


def test_friedman_statistic_matches_oracle_small_inputs():
    rng = np.random.default_rng(7)
    for n, k in ((2, 3), (3, 2), (4, 3), (2, 4), (6, 2)):
        for _ in range(3):
            matrix = rng.integers(0, 5, size=(n, k)).astype(float)
            assert friedman_statistic(matrix) == pytest.approx(
                friedman_statistic_oracle(matrix), abs=1e-9
            )


def test_friedman_exact_pvalue_matches_oracle():
    rng = np.random.default_rng(21)
    for n, k in ((2, 3), (3, 2), (4, 3), (2, 2)):
        matrix = rng.normal(size=(n, k))
        stat, p_oracle = friedman_exact_oracle(matrix)
        assert friedman_statistic(matrix) == pytest.approx(stat, abs=1e-9)
        assert friedman_exact_pvalue(matrix) == pytest.approx(p_oracle, abs=1e-12)


def test_friedman_exact_guard():
    with pytest.raises(StatsError):
        friedman_exact_pvalue(np.ones((4, 4)))


def test_friedman_rank_invariance_under_monotone_transform():
    rng = np.random.default_rng(3)
    matrix = rng.normal(size=(6, 3))
    transformed = np.exp(matrix)  # strictly monotone
    assert friedman_statistic(matrix) == pytest.approx(friedman_statistic(transformed))


def test_friedman_mean_ranks_sum():
    rng = np.random.default_rng(5)
    matrix = rng.normal(size=(5, 4))
    result = friedman_nemenyi(matrix)
    k = 4
    assert sum(result.mean_ranks.values()) == pytest.approx(k * (k + 1) / 2)


def test_friedman_handles_infinities_as_best():
    matrix = [
        [math.inf, 5.0, 1.0],
        [math.inf, 4.0, 2.0],
        [7.0, math.inf, 1.0],
        [math.inf, 3.0, 2.0],
    ]
    result = friedman_nemenyi(matrix, treatments=["big", "mid", "small"])
    ranks = result.mean_ranks
    assert ranks["big"] > ranks["mid"] > ranks["small"]


def test_friedman_validates_input():
    with pytest.raises(StatsError):
        friedman_nemenyi([[1.0]])
    with pytest.raises(StatsError):
        friedman_nemenyi([[1.0, float("nan")], [1.0, 2.0]])
    with pytest.raises(StatsError):
        friedman_nemenyi([[1.0, 2.0], [1.0, 2.0]], treatments=["only-one"])


def test_friedman_pairwise_cliffs_present():
    matrix = [[2.0, 1.0], [3.0, 1.5], [2.5, 0.5]]
    result = friedman_nemenyi(matrix, treatments=["a", "b"])
    delta, magnitude = result.cliffs[("a", "b")]
    assert delta == 1.0 and magnitude == "large"


def test_write_stats_report(tmp_path):
    report = aggregate_agreement({"p": ({"a", "b"}, {"a"})})
    result = friedman_nemenyi([[2.0, 1.0], [3.0, 1.5]], treatments=["x", "y"])
    write_stats_report(
        tmp_path, {"demo": report}, {"bounds": result}, {"bounds": {"x": [1.0, 2.0]}}
    )
    assert (tmp_path / "comparisons.txt").exists()
    assert (tmp_path / "results.json").exists()
    box = (tmp_path / "boxplot.csv").read_text().splitlines()
    assert box[0] == "comparison,group,min,q1,median,q3,max"
    assert box[1].startswith("bounds,x,1,")
