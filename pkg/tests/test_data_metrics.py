import numpy as np
import pytest

from broadlearn.data_metrics import (
    LabeledFeatures,
    accuracy,
    load_features,
    one_hot,
    pearson,
    save_features,
    split_8_2,
)
from broadlearn.errors import DimensionError, ParseError


class TestCsv:
    def test_two_row_example(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("f0,f1,label\n0,1,0\n1,0,1\n")
        data = load_features(p, "csv")
        assert data.x.shape == (2, 2)
        assert list(data.labels) == [0, 1]
        assert data.classes == 2

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        with pytest.raises(ParseError):
            load_features(p, "csv")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_features(tmp_path / "nope.csv", "csv")

    def test_bad_row_reports_line_number(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("f0,f1,label\n0,1,0\n1,0\n")
        with pytest.raises(ParseError, match=r":3:"):
            load_features(p, "csv")

    def test_non_integer_label(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("f0,label\n0,1.5\n1,0\n")
        with pytest.raises(ParseError, match="label"):
            load_features(p, "csv")

    def test_non_numeric_feature(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("f0,label\nx,1\n1,0\n")
        with pytest.raises(ParseError, match=r":2:"):
            load_features(p, "csv")

    def test_nan_feature_is_value_error_not_parse_error(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("f0,label\nnan,1\n1,0\n")
        with pytest.raises(ValueError, match="non-finite"):
            load_features(p, "csv")

    def test_unlabeled_file(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("f0,f1\n0,1\n1,0\n")
        data = load_features(p, "csv")
        assert data.labels is None
        assert data.classes == 0

    def test_id_column(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("id,f0,label\na.png,0.5,1\nb.png,1.5,0\n")
        data = load_features(p, "csv")
        assert data.ids == ("a.png", "b.png")
        assert data.x.shape == (2, 1)

    def test_round_trip_is_exact(self, tmp_path):
        g = np.random.default_rng(0)
        data = LabeledFeatures(
            x=g.uniform(-1, 1, (20, 5)),
            labels=g.integers(0, 3, 20),
            classes=3,
        )
        p = tmp_path / "rt.csv"
        save_features(data, p, "csv")
        back = load_features(p, "csv")
        # repr round-trips float64 exactly
        assert np.array_equal(back.x, data.x)
        assert np.array_equal(back.labels, data.labels)


class TestFmx:
    def test_round_trip_bit_identical(self, tmp_path):
        g = np.random.default_rng(1)
        data = LabeledFeatures(
            x=g.standard_normal((17, 9)), labels=g.integers(0, 4, 17), classes=4
        )
        p = tmp_path / "rt.fmx"
        save_features(data, p, "fmx")
        back = load_features(p, "fmx")
        assert back.x.tobytes() == data.x.tobytes()
        assert np.array_equal(back.labels, data.labels)
        # saving again reproduces the same bytes
        p2 = tmp_path / "rt2.fmx"
        save_features(back, p2, "fmx")
        assert p.read_bytes() == p2.read_bytes()

    def test_layout_bytes(self, tmp_path):
        data = LabeledFeatures(
            x=np.array([[1.0, 2.0]]), labels=None, classes=0
        )
        p = tmp_path / "one.fmx"
        save_features(data, p, "fmx")
        blob = p.read_bytes()
        assert blob[:4] == b"FMX1"
        assert int.from_bytes(blob[4:8], "little") == 1
        assert int.from_bytes(blob[8:12], "little") == 2
        assert np.frombuffer(blob, "<f8", count=2, offset=12).tolist() == [1.0, 2.0]
        assert blob[28] == 0
        assert len(blob) == 29

    def test_unlabeled_round_trip(self, tmp_path):
        data = LabeledFeatures(x=np.eye(3), labels=None, classes=0)
        p = tmp_path / "u.fmx"
        save_features(data, p, "fmx")
        back = load_features(p, "fmx")
        assert back.labels is None

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.fmx"
        p.write_bytes(b"NOPE" + bytes(20))
        with pytest.raises(ParseError):
            load_features(p, "fmx")

    def test_truncated(self, tmp_path):
        p = tmp_path / "t.fmx"
        p.write_bytes(b"FMX1" + (100).to_bytes(4, "little") + (100).to_bytes(4, "little"))
        with pytest.raises(ParseError):
            load_features(p, "fmx")


class TestSplit:
    def test_ten_gives_eight_two(self):
        s = split_8_2(10, seed=0)
        assert len(s.train) == 8 and len(s.test) == 2

    def test_large_split_sizes(self):
        s = split_8_2(5500, seed=1)
        assert len(s.train) == 4400 and len(s.test) == 1100

    def test_deterministic(self):
        a = split_8_2(100, seed=7)
        b = split_8_2(100, seed=7)
        assert np.array_equal(a.train, b.train) and np.array_equal(a.test, b.test)

    def test_partition_property(self):
        g = np.random.default_rng(2)
        for _ in range(20):
            n = int(g.integers(5, 400))
            s = split_8_2(n, seed=int(g.integers(0, 1000)))
            both = np.concatenate([s.train, s.test])
            assert len(np.unique(both)) == n
            assert len(s.train) == -((-4 * n) // 5)

    def test_too_small(self):
        with pytest.raises(ValueError):
            split_8_2(4, seed=0)


class TestOneHot:
    def test_example_row(self):
        out = one_hot(np.array([2]), 5)
        assert out.tolist() == [[0.0, 0.0, 1.0, 0.0, 0.0]]

    def test_row_sums(self):
        out = one_hot(np.array([0, 1, 2, 1]), 3)
        assert np.all(out.sum(axis=1) == 1.0)

    def test_argmax_round_trip(self):
        labels = np.random.default_rng(3).integers(0, 6, 50)
        assert np.array_equal(np.argmax(one_hot(labels, 6), axis=1), labels)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            one_hot(np.array([3]), 3)


class TestMetrics:
    def test_accuracy_identical(self):
        v = np.array([1, 2, 3])
        assert accuracy(v, v) == 1.0

    def test_accuracy_half(self):
        assert accuracy(np.array([1, 2, 3, 4]), np.array([1, 2, 0, 0])) == 0.5

    def test_accuracy_disjoint(self):
        assert accuracy(np.array([1, 2]), np.array([2, 1])) == 0.0

    def test_accuracy_length_mismatch(self):
        with pytest.raises(DimensionError):
            accuracy(np.array([1]), np.array([1, 2]))

    def test_pearson_positive_affine(self):
        a = np.array([1.0, 2.0, 5.0, 7.0])
        assert abs(pearson(a, 2 * a + 1) - 1.0) <= 1e-12

    def test_pearson_negation(self):
        a = np.array([1.0, 2.0, 5.0, 7.0])
        assert abs(pearson(a, -a) + 1.0) <= 1e-12

    def test_pearson_constant_rejected(self):
        with pytest.raises(ValueError):
            pearson(np.ones(4), np.array([1.0, 2.0, 3.0, 4.0]))

    def test_pearson_affine_invariance(self):
        g = np.random.default_rng(4)
        a = g.standard_normal(30)
        b = g.standard_normal(30)
        assert abs(pearson(a, b) - pearson(3.7 * a + 2.0, b)) <= 1e-12


class TestLabeledFeatures:
    def test_label_length_checked(self):
        with pytest.raises(DimensionError):
            LabeledFeatures(x=np.eye(3), labels=np.array([0, 1]), classes=2)

    def test_label_range_checked(self):
        with pytest.raises(ValueError):
            LabeledFeatures(x=np.eye(3), labels=np.array([0, 1, 5]), classes=3)

    def test_subset(self):
        data = LabeledFeatures(
            x=np.arange(12.0).reshape(6, 2),
            labels=np.array([0, 1, 0, 1, 0, 1]),
            classes=2,
            ids=tuple("abcdef"),
        )
        sub = data.subset([1, 3])
        assert sub.x.tolist() == [[2.0, 3.0], [6.0, 7.0]]
        assert sub.ids == ("b", "d")
