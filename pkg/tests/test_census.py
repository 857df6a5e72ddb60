import os
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from app.anova.grouped_index import Basis, GroupedIndexSet, build_term_superset
from app.anova.grouped_transform import GroupedCoefficients
from app.connectors.census import MinMaxScaler, kfold, load_and_preprocess, split
from app.core.errors import DatasetError
from app.models.dataset import CENSUS_COLUMNS, ClassificationReport, DatasetRecipe
from app.models.experiment import ExperimentConfig
from app.services.classification import classify_and_score, score
from app.services.experiments import run_census

WORKCLASSES = ["Private", "State-gov", "Self-emp", "Federal-gov"]
OCCUPATIONS = ["Sales", "Tech-support", "Craft-repair"]


def _census_frame(rows, seed=0):
    rng = np.random.default_rng(seed)
    return pd.DataFrame({
        "age": rng.integers(17, 90, rows),
        "workclass": rng.choice(WORKCLASSES, rows),
        "fnlwgt": rng.integers(10000, 500000, rows),
        "education": rng.choice(["Bachelors", "HS-grad"], rows),
        "education-num": rng.integers(1, 17, rows),
        "marital-status": rng.choice(["Never-married", "Divorced"], rows),
        "occupation": rng.choice(OCCUPATIONS, rows),
        "relationship": rng.choice(["Husband", "Wife", "Own-child"], rows),
        "race": rng.choice(["White", "Black"], rows),
        "sex": rng.choice(["Male", "Female"], rows),
        "capital-gain": rng.integers(0, 5000, rows),
        "capital-loss": np.zeros(rows, dtype=int),
        "hours-per-week": rng.integers(10, 80, rows),
        "native-country": rng.choice(["United-States", "Mexico"], rows),
        "income": rng.choice(["<=50K", ">50K"], rows),
    }, columns=CENSUS_COLUMNS)


@pytest.fixture
def census_csv(tmp_path):
    frame = _census_frame(100)
    frame.loc[3, "workclass"] = "?"
    frame.loc[7, "occupation"] = "?"
    path = tmp_path / "census.csv"
    frame.to_csv(path, index=False)
    return path


class TestLoading:

    def test_missing_rows_dropped(self, census_csv):
        dataset = load_and_preprocess(census_csv)
        assert len(dataset) == 98
        assert dataset.d == 12
        assert "education" not in dataset.feature_names
        assert "fnlwgt" not in dataset.feature_names
        assert set(np.unique(dataset.labels)) <= {0, 1}

    def test_categorical_codes_follow_first_appearance(self, census_csv):
        dataset = load_and_preprocess(census_csv)
        assert dataset.kinds["workclass"] == "categorical"
        assert dataset.kinds["age"] == "numeric"
        column = dataset.raw[:, dataset.feature_names.index("workclass")]
        assert column[0] == 0.0
        first = [int(c) for c in pd.unique(column)]
        assert first == list(range(len(first)))

    def test_features_on_unit_cube(self, census_csv):
        dataset = load_and_preprocess(census_csv)
        features = dataset.features
        assert features.min() >= 0.0 and features.max() <= 1.0
        # capital-loss is constant
        assert np.all(features[:, dataset.feature_names.index("capital-loss")] == 0.0)

    def test_unknown_column(self, census_csv):
        with pytest.raises(DatasetError):
            load_and_preprocess(census_csv, DatasetRecipe(drop_columns=["salary"]))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            load_and_preprocess(tmp_path / "absent.csv")

    def test_header_less_file(self, tmp_path):
        path = tmp_path / "adult.data"
        _census_frame(20).to_csv(path, index=False, header=False)
        dataset = load_and_preprocess(path, DatasetRecipe(column_names=CENSUS_COLUMNS))
        assert len(dataset) == 20


class TestSplits:

    def test_split_sizes(self, census_csv):
        dataset = load_and_preprocess(census_csv)
        train, test = split(dataset, 0.8, seed=1)
        assert len(train) == 78
        assert len(test) == 20
        assert test.features.min() >= 0.0 and test.features.max() <= 1.0

    def test_kfold_sizes(self):
        folds = kfold(45199, 10, seed=0)
        sizes = sorted(len(test) for _, test in folds)
        assert sizes == [4519] + [4520] * 9
        everything = np.concatenate([test for _, test in folds])
        np.testing.assert_array_equal(np.sort(everything), np.arange(45199))
        for train, test in folds:
            assert len(np.intersect1d(train, test)) == 0
            assert len(train) + len(test) == 45199

    def test_leave_one_out(self):
        folds = kfold(5, 5, seed=0)
        assert all(len(test) == 1 for _, test in folds)

    def test_invalid_fold_counts(self):
        with pytest.raises(ValueError):
            kfold(10, 1)
        with pytest.raises(DatasetError):
            kfold(3, 4)

    def test_scaler_clamps(self):
        scaler = MinMaxScaler.fit(np.array([[0.0, 5.0], [10.0, 5.0]]))
        np.testing.assert_allclose(scaler.transform(np.array([[-5.0, 7.0], [20.0, 5.0], [5.0, 1.0]])),
                                   [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]])


class TestClassification:

    def test_constant_model(self, rng):
        index_set = GroupedIndexSet.from_orders(build_term_superset(3, 1), [4], Basis.COSINE)
        coefficients = GroupedCoefficients.zeros(index_set)
        coefficients.values[0] = 1.0
        labels = np.array([1, 0, 1, 1, 0])
        report = classify_and_score(coefficients, rng.random((5, 3)), labels)
        assert report.accuracy == pytest.approx(60.0)
        assert report.true_positive == 3 and report.false_positive == 2

    def test_score_shape(self):
        with pytest.raises(ValueError):
            score(np.array([1, 0]), np.array([1]))

    def test_combine(self):
        reports = [score(np.array([1, 1]), np.array([1, 0])), score(np.array([0, 0]), np.array([0, 0]))]
        combined = ClassificationReport.combine(reports)
        assert combined.accuracy == pytest.approx(75.0)
        assert combined.fold_accuracies == [50.0, 100.0]
        assert combined.total == 4


def _small_census_config(**overrides):
    values = dict(
        experiment="census", bandwidths=[3, 2], refit_bandwidths=[4, 2], lambda_min=0.1,
        lambda_max=10.0, lambda_count=3, folds=2, seed=3, threads=1, fista={"max_iter": 50},
    )
    values.update(overrides)
    return ExperimentConfig(**values)


class TestCensusPipeline:

    def test_smoke(self, census_csv, tmp_path):
        config = _small_census_config(out=tmp_path / "out" / "census.csv")
        result = run_census(config, census_csv)
        names = sorted(Path(p).name for p in result.paths)
        assert names == ["census_fista.csv", "census_lsqr.csv", "census_lsqr_refit.csv", "census_report.json"]
        table = result.tables["lsqr"]
        assert list(table.columns[:3]) == ["lambda", "accuracy", "1"]
        assert "const" not in table.columns
        assert len(table) == 3
        assert table["lambda"].is_monotonic_decreasing
        assert result.summary["frequencies"] == 1 + 12 * 2 + 66

    def test_deterministic(self, census_csv):
        a = run_census(_small_census_config(), census_csv, write=False)
        b = run_census(_small_census_config(), census_csv, write=False)
        for variant in a.tables:
            pd.testing.assert_frame_equal(a.tables[variant], b.tables[variant])

    def test_single_split(self, census_csv):
        result = run_census(_small_census_config(folds=1), census_csv, write=False)
        assert result.summary["partitions"] == 1

    def test_active_terms_cover_every_partition(self, census_csv):
        result = run_census(_small_census_config(folds=3), census_csv, write=False)
        sizes = result.summary["active_terms_per_partition"]
        assert len(sizes) == 3
        assert all(1 <= s <= 1 + 12 + 66 for s in sizes)
        assert result.summary["active_terms"] == pytest.approx(np.mean(sizes))

    def test_missing_csv(self, tmp_path):
        with pytest.raises(DatasetError):
            run_census(_small_census_config(), tmp_path / "absent.csv", write=False)


@pytest.mark.census
def test_real_census_file():
    dataset = load_and_preprocess(os.environ["ANOVA_CENSUS_CSV"])
    assert len(dataset) == 45199
    assert dataset.d == 12
    index_set = GroupedIndexSet.from_orders(build_term_superset(dataset.d, 2), [82, 10], Basis.COSINE)
    assert index_set.total == 6319
