"""Tests for the LETOR/LibSVM reader and writer."""

import numpy as np
import pytest

from ltr.data.letor import (
    densify,
    dump_dataset,
    load_dataset,
    load_fold_directory,
    parse_libsvm_line,
    serialize_libsvm_line,
    to_sparse,
)
from ltr.errors import DatasetError, ParseError


class TestParseLine:
    """Test single-line parsing."""

    def test_basic_line(self):
        """Test label, qid and sparse features are read."""
        parsed = parse_libsvm_line("2 qid:7 1:0.5 3:1.0")
        assert parsed.label == 2.0
        assert parsed.qid == "7"
        assert parsed.features == [(1, 0.5), (3, 1.0)]

    def test_comment_stripped(self):
        """Test trailing comment is ignored by default."""
        parsed = parse_libsvm_line("0 qid:1 1:0 # docid=x")
        assert (parsed.label, parsed.qid, parsed.features) == (0.0, "1", [(1, 0.0)])
        assert parsed.comment is None

    def test_comment_kept(self):
        """Test comment can be preserved."""
        parsed = parse_libsvm_line("0 qid:1 1:0 # docid=x", comment_policy="keep")
        assert parsed.comment == "docid=x"

    def test_tabs_and_crlf(self):
        """Test runs of tabs/spaces and CRLF endings are accepted."""
        parsed = parse_libsvm_line("1\tqid:3  \t2:4.5\r\n")
        assert parsed.features == [(2, 4.5)]

    def test_non_increasing_index(self):
        """Test out-of-order indices are rejected with the token."""
        with pytest.raises(ParseError) as exc_info:
            parse_libsvm_line("2 qid:7 3:1.0 1:0.5", line_number=4)
        assert exc_info.value.context["token"] == "1:0.5"
        assert exc_info.value.context["line_number"] == 4

    def test_duplicate_index(self):
        """Test repeated indices are rejected."""
        with pytest.raises(ParseError):
            parse_libsvm_line("2 qid:7 3:1.0 3:0.5")

    def test_missing_qid(self):
        """Test a line without qid is rejected."""
        with pytest.raises(ParseError, match="missing qid"):
            parse_libsvm_line("2 1:0.5")

    @pytest.mark.parametrize("line", ["x qid:1 1:0", "1 qid:1 a:0", "1 qid:1 1:abc", "1 qid:1 0:1"])
    def test_malformed_tokens(self, line):
        """Test malformed labels, indices and values."""
        with pytest.raises(ParseError):
            parse_libsvm_line(line)

    def test_serialize_is_fixed_point(self):
        """Test serialize(parse(line)) reproduces canonical lines."""
        for line in ["2 qid:7 1:0.5 3:1", "0 qid:abc", "1.5 qid:1 10:-0.25 # note"]:
            p = parse_libsvm_line(line, comment_policy="keep")
            assert serialize_libsvm_line(p.label, p.qid, p.features, p.comment) == line


class TestSparse:
    """Test densify/sparsify helpers."""

    def test_densify(self):
        """Test absent indices become zeros."""
        np.testing.assert_array_equal(densify([(2, 1.0)], 3), [0.0, 1.0, 0.0])

    def test_sparsify_recovers_pairs(self, rng):
        """Test densify-then-sparsify round trip without explicit zeros."""
        for _ in range(20):
            idx = np.sort(rng.choice(np.arange(1, 21), size=5, replace=False))
            pairs = [(int(i), float(v)) for i, v in zip(idx, rng.uniform(0.1, 2.0, 5), strict=True)]
            assert to_sparse(densify(pairs, 20)) == pairs


class TestLoadDataset:
    """Test file loading and grouping."""

    def test_grouping(self, letor_file):
        """Test consecutive qids form groups and d is inferred."""
        ds = load_dataset(letor_file)
        assert len(ds) == 2
        assert [g.num_docs for g in ds] == [2, 1]
        assert ds.feature_dim == 3
        np.testing.assert_array_equal(ds.groups[0].features[1], [0.0, 1.0, 0.0])
        assert ds.label_max == 2.0

    def test_explicit_feature_dim(self, letor_file):
        """Test a larger explicit dimension pads with zeros."""
        assert load_dataset(letor_file, feature_dim=136).feature_dim == 136

    def test_feature_dim_too_small(self, letor_file):
        """Test an index beyond feature_dim is an error."""
        with pytest.raises(DatasetError):
            load_dataset(letor_file, feature_dim=2)

    def test_empty_file(self, tmp_path):
        """Test empty file is rejected."""
        path = tmp_path / "empty.txt"
        path.write_text("\n\n", encoding="utf-8")
        with pytest.raises(DatasetError, match="no documents"):
            load_dataset(path)

    def test_noncontiguous_qid(self, tmp_path):
        """Test a reappearing qid errors by default and merges on request."""
        path = tmp_path / "shuffled.txt"
        path.write_text("1 qid:1 1:1\n0 qid:2 1:2\n2 qid:1 1:3\n", encoding="utf-8")
        with pytest.raises(DatasetError, match="reappears"):
            load_dataset(path)
        ds = load_dataset(path, on_noncontiguous="merge")
        assert [g.qid for g in ds] == ["1", "2"]
        np.testing.assert_array_equal(ds.groups[0].labels, [1.0, 2.0])

    def test_parse_error_reports_line(self, tmp_path):
        """Test parse errors carry the file line number."""
        path = tmp_path / "bad.txt"
        path.write_text("1 qid:1 1:1\n\n1 qid:1 2:1 1:1\n", encoding="utf-8")
        with pytest.raises(ParseError) as exc_info:
            load_dataset(path)
        assert exc_info.value.context["line_number"] == 3

    def test_dump_and_reload(self, letor_file, tmp_path):
        """Test a dumped dataset loads back identically."""
        ds = load_dataset(letor_file)
        again = load_dataset(dump_dataset(ds, tmp_path / "copy.txt"), feature_dim=ds.feature_dim)
        for a, b in zip(ds, again, strict=True):
            assert a.qid == b.qid
            np.testing.assert_array_equal(a.features, b.features)
            np.testing.assert_array_equal(a.labels, b.labels)


class TestFoldDirectory:
    """Test pre-split fold directories."""

    def test_shared_dimension(self, tmp_path):
        """Test the three files share the largest dimension."""
        (tmp_path / "train.txt").write_text("1 qid:1 1:1 5:1\n0 qid:1 2:1\n", encoding="utf-8")
        (tmp_path / "vali.txt").write_text("1 qid:2 1:1\n", encoding="utf-8")
        (tmp_path / "test.txt").write_text("0 qid:3 3:1\n", encoding="utf-8")
        train, vali, test = load_fold_directory(tmp_path)
        assert train.feature_dim == vali.feature_dim == test.feature_dim == 5

    def test_missing_file(self, tmp_path):
        """Test an incomplete directory is rejected."""
        (tmp_path / "train.txt").write_text("1 qid:1 1:1\n", encoding="utf-8")
        with pytest.raises(DatasetError, match="incomplete"):
            load_fold_directory(tmp_path)
