import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import softcheck as sc
from softcheck.metrics import save_report, save_scatter


def brute_force_threshold(errors, tn_rate):
    """Smallest listed value covering at least tn_rate of the list."""
    ordered = sorted(errors)
    n = len(ordered)
    for value in ordered:
        covered = sum(1 for e in errors if e <= value)
        if covered / n >= tn_rate:
            return value
    return ordered[-1]


def test_calibrate_examples():
    errors = list(range(1, 101))
    assert sc.calibrate_threshold(errors, 0.99) == 99.0
    assert sc.calibrate_threshold([7.0] * 13, 0.99) == 7.0
    assert sc.calibrate_threshold([5.0], 0.99) == 5.0
    assert sc.calibrate_threshold(errors, 1.0) == 100.0


def test_calibrate_rank_is_exact_for_awkward_sizes():
    # sizes where math.ceil(rate * n) overshoots in floating point,
    # e.g. 0.9 * 10 computes to just above 9
    for n in (10, 20, 30, 100, 300):
        errors = list(range(1, n + 1))
        assert sc.calibrate_threshold(errors, 0.9) == 9 * n // 10


def test_calibrate_random_lists_brute_force(rng):
    for _ in range(200):
        n = int(rng.integers(1, 60))
        errors = rng.exponential(size=n)
        rate = float(rng.choice([0.5, 0.9, 0.95, 0.99, 1.0]))
        thr = sc.calibrate_threshold(errors, rate)
        assert thr == brute_force_threshold(errors.tolist(), rate)
        assert np.mean(errors <= thr) >= rate


def test_calibrate_validation():
    with pytest.raises(sc.DataError):
        sc.calibrate_threshold([])
    with pytest.raises(sc.ConfigError):
        sc.calibrate_threshold([1.0], 0.0)
    with pytest.raises(sc.ConfigError):
        sc.calibrate_threshold([1.0], 1.5)
    with pytest.raises(sc.NumericError):
        sc.calibrate_threshold([1.0, float("nan")])


def test_flag_tie_is_trusted():
    assert sc.flag(1.0, 1.0) == "id"
    assert sc.flag(1.0 + 1e-12, 1.0) == "ood"
    assert sc.flag(0.0, 0.0) == "id"


def test_fnr99_examples():
    assert sc.fnr99([0.5, 2.0, 3.0], 1.0) == pytest.approx(1 / 3)
    assert sc.fnr99([2.0, 3.0], 1.0) == 0.0
    assert sc.fnr99([0.1, 0.2], 1.0) == 1.0
    with pytest.raises(sc.DataError):
        sc.fnr99([], 1.0)


@settings(max_examples=60)
@given(
    st.lists(st.floats(min_value=0, max_value=1e6), min_size=1, max_size=50),
    st.floats(min_value=0, max_value=1e6),
)
def test_fnr99_matches_flag_counts(errors, threshold):
    rate = sc.fnr99(errors, threshold)
    expected = sum(1 for e in errors if sc.flag(e, threshold) == "id") / len(errors)
    assert rate == expected


def test_pearson_hand_value():
    # r({1,2,3}, {1,3,2}) = 0.5
    assert sc.pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)
    assert sc.pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert sc.pearson([1, 2, 3], [-1, -2, -3]) == pytest.approx(-1.0)


def test_pearson_validation():
    with pytest.raises(sc.DataError):
        sc.pearson([1.0], [2.0])
    with pytest.raises(sc.NumericError):
        sc.pearson([1.0, 1.0], [1.0, 2.0])


def perfect_params():
    # check node emits y1 + y2 exactly
    return sc.ModelParams(
        layer_dims=(2, 3),
        weights=[np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])],
        biases=[np.zeros(3)],
    )


def test_per_sample_errors_perfect_model(rng):
    p = perfect_params()
    x = rng.normal(size=(6, 2))
    ds = sc.LabeledDataset(x, x, np.full(6, "validation", dtype="U16"))
    errors = sc.per_sample_errors(p, ds, sc.ChecksumSpec("linear"))
    assert np.array_equal(errors, np.zeros((6, 2)))


def test_per_sample_errors_hand_value():
    # k=1: model predicts 2 with matching check output; target 0
    p = sc.ModelParams(
        layer_dims=(1, 2),
        weights=[np.array([[0.0], [0.0]])],
        biases=[np.array([2.0, 2.0])],
    )
    ds = sc.LabeledDataset(
        np.array([[5.0]]), np.array([[0.0]]), np.array(["validation"])
    )
    errors = sc.per_sample_errors(p, ds, sc.ChecksumSpec("linear"))
    assert np.array_equal(errors, np.array([[0.0, 4.0]]))


def test_per_sample_errors_match_loop(rng):
    p = sc.init_params((3, 7, 4), seed=8)
    x = rng.normal(size=(11, 3))
    y = rng.normal(size=(11, 3))
    ds = sc.LabeledDataset(x, y, np.full(11, "ood", dtype="U16"))
    spec = sc.ChecksumSpec("sinusoid", w=0.5)
    batch = sc.per_sample_errors(p, ds, spec)
    for i in range(11):
        row = sc.per_sample_errors(p, ds.subset([i]), spec)
        assert row.tobytes() == batch[i : i + 1].tobytes()


def test_evaluate_report_schema(rng):
    p = sc.init_params((3, 8, 4), seed=2)
    val = sc.LabeledDataset(rng.normal(size=(40, 3)), rng.normal(size=(40, 3)),
                            np.full(40, "validation", dtype="U16"))
    ood = sc.LabeledDataset(rng.normal(size=(30, 3)) * 3, rng.normal(size=(30, 3)),
                            np.full(30, "ood", dtype="U16"))
    report = sc.evaluate(p, val, ood, sc.ChecksumSpec("linear"))
    assert report.n_validation == 40 and report.n_ood == 30
    assert 0.0 <= report.fnr99 <= 1.0
    assert report.tn_rate_achieved >= 0.99
    assert -1.0 <= report.pearson_r <= 1.0
    assert len(report.scatter) == 70
    tags = {t for _, _, t in report.scatter}
    assert tags == {"validation", "ood"}


def test_save_report_and_scatter(tmp_path, rng):
    p = sc.init_params((2, 6, 3), seed=4)
    val = sc.LabeledDataset(rng.normal(size=(25, 2)), rng.normal(size=(25, 2)),
                            np.full(25, "validation", dtype="U16"))
    ood = sc.LabeledDataset(rng.normal(size=(10, 2)) * 4, rng.normal(size=(10, 2)),
                            np.full(10, "ood", dtype="U16"))
    report = sc.evaluate(p, val, ood, sc.ChecksumSpec("linear"))
    rpath = tmp_path / "report.json"
    spath = tmp_path / "scatter.csv"
    save_report(report, rpath)
    save_scatter(report, spath)
    doc = json.loads(rpath.read_text(encoding="utf-8"))
    assert doc["threshold"] == report.threshold  # exact float round trip
    assert doc["fnr99"] == report.fnr99
    assert set(doc) == {"threshold", "tn_rate_achieved", "fnr99", "pearson_r",
                        "n_validation", "n_ood"}
    lines = spath.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "checksum_error,prediction_error,partition"
    assert len(lines) == 36
    ce, pe, tag = lines[1].split(",")
    assert float(ce) == report.scatter[0][0]
    assert tag == "validation"
