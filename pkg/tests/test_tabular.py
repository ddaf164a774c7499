import json

import pytest

from vizrec.errors import (
    DanglingReference,
    DuplicateAttribute,
    EmptyDataset,
    ParseError,
    TooFewDatasets,
)
from vizrec.tabular import (
    Attribute,
    AttributeType,
    Corpus,
    Dataset,
    corpus_stats,
    dataset_from_record,
    dataset_to_record,
    infer_type,
    load_corpus,
    load_dataset,
    parse_timestamp,
    save_corpus,
    split_corpus,
)
from vizrec.visspace import AttributeCombination, Visualization


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def make_dataset(dataset_id, columns):
    attrs = tuple(Attribute(n, t, tuple(v)) for n, t, v in columns)
    return Dataset(id=dataset_id, attributes=attrs)


def tiny_corpus(n=4):
    datasets = []
    vis = {}
    for i in range(n):
        d = make_dataset(
            f"d{i}",
            [
                ("a", AttributeType.QUANTITATIVE, [1.0, 2.0, 3.0]),
                ("b", AttributeType.NOMINAL, ["x", "y", "x"]),
            ],
        )
        datasets.append(d)
        vis[d.id] = [
            Visualization(
                combo=AttributeCombination(d.id, ("a", "b")),
                config_id="bar;x=quantitative:mean;y=nominal",
                label=1,
            )
        ]
    return Corpus(datasets=tuple(datasets), visualizations=vis)


class TestTypeInference:
    def test_all_numeric_is_quantitative(self, tmp_path):
        path = write(tmp_path, "nums.csv", "a,b,c\n1,2.5,3\n4,5.5,6\n")
        dataset = load_dataset(path)
        assert [a.type for a in dataset.attributes] == [AttributeType.QUANTITATIVE] * 3

    def test_strings_are_nominal(self):
        assert infer_type(["a", "b", "a"]) is AttributeType.NOMINAL

    def test_dates_are_temporal(self):
        # oracle: both literals parse under the accepted layouts
        assert parse_timestamp("2001-01-02") is not None
        assert parse_timestamp("2001-03-04") is not None
        assert infer_type(["2001-01-02", "2001-03-04"]) is AttributeType.TEMPORAL

    def test_numbers_never_parse_as_dates(self):
        assert parse_timestamp("2001") is None
        assert infer_type(["2001", "2002"]) is AttributeType.QUANTITATIVE

    def test_overrides_win(self, tmp_path):
        path = write(tmp_path, "o.csv", "a\n1\n2\n")
        dataset = load_dataset(path, type_overrides={"a": AttributeType.ORDINAL})
        assert dataset.attribute("a").type is AttributeType.ORDINAL

    def test_missing_markers_kept_explicit(self, tmp_path):
        path = write(tmp_path, "m.csv", "a,b\n1,x\n,y\nNA,z\n4,w\n")
        attr = load_dataset(path).attribute("a")
        assert attr.values == (1.0, None, None, 4.0)
        assert attr.type is AttributeType.QUANTITATIVE


class TestLoadDataset:
    def test_duplicate_column_rejected(self, tmp_path):
        path = write(tmp_path, "dup.csv", "a,a\n1,2\n")
        with pytest.raises(DuplicateAttribute):
            load_dataset(path)

    def test_empty_rejected(self, tmp_path):
        path = write(tmp_path, "empty.csv", "a,b\n")
        with pytest.raises(EmptyDataset):
            load_dataset(path)

    def test_ragged_rows_rejected(self, tmp_path):
        path = write(tmp_path, "bad.csv", "a,b\n1\n")
        with pytest.raises(ParseError):
            load_dataset(path)

    def test_tsv_delimiter(self, tmp_path):
        path = write(tmp_path, "t.tsv", "a\tb\n1\tx\n")
        dataset = load_dataset(path)
        assert dataset.attribute_names == ("a", "b")

    def test_row_cap_truncates_with_warning(self, tmp_path, monkeypatch, caplog):
        import vizrec.tabular as tabular

        monkeypatch.setattr(tabular, "ROW_CAP", 3)
        path = write(tmp_path, "big.csv", "a\n" + "\n".join("123456"))
        with caplog.at_level("WARNING", logger="vizrec.tabular"):
            dataset = load_dataset(path)
        assert dataset.row_count == 3
        assert any("truncated" in r.getMessage() for r in caplog.records)

    def test_json_record(self, tmp_path):
        record = {
            "id": "r1",
            "columns": [{"name": "a", "type": "quantitative", "values": [1, 2]}],
        }
        path = write(tmp_path, "r.json", json.dumps({"dataset": record}))
        dataset = load_dataset(path)
        assert dataset.id == "r1"
        assert dataset.attribute("a").values == (1.0, 2.0)

    def test_round_trip_preserves_types_and_values(self):
        dataset = make_dataset(
            "rt",
            [
                ("q", AttributeType.QUANTITATIVE, [1.25, None, -3.5]),
                ("n", AttributeType.NOMINAL, ["u", "v", "u"]),
                ("t", AttributeType.TEMPORAL, ["2020-01-01", "2020-02-02", None]),
            ],
        )
        again = dataset_from_record(dataset_to_record(dataset))
        assert again == dataset


class TestLoadCorpus:
    def test_small_corpus_counts(self, tmp_path):
        corpus = tiny_corpus(2)
        extra = corpus.visualizations["d0"][0]
        corpus.visualizations["d0"].append(extra)  # 3 vis total
        path = tmp_path / "c.jsonl"
        save_corpus(corpus, path)
        loaded = load_corpus(path)
        stats = corpus_stats(loaded)
        assert stats["datasets"] == 2
        assert stats["visualizations"] == 3

    def test_dangling_attribute(self, tmp_path):
        line = json.dumps(
            {
                "dataset": {
                    "id": "d",
                    "columns": [{"name": "a", "type": "quantitative", "values": [1]}],
                },
                "visualizations": [
                    {"config_id": "histogram;x=quantitative:bin", "attributes": ["mpg"]}
                ],
            }
        )
        path = write(tmp_path, "bad.jsonl", line + "\n")
        with pytest.raises(DanglingReference):
            load_corpus(path)

    def test_unknown_config_id(self, tmp_path):
        line = json.dumps(
            {
                "dataset": {
                    "id": "d",
                    "columns": [{"name": "a", "type": "quantitative", "values": [1]}],
                },
                "visualizations": [{"config_id": "not-a-config", "attributes": ["a"]}],
            }
        )
        path = write(tmp_path, "bad2.jsonl", line + "\n")
        with pytest.raises(DanglingReference):
            load_corpus(path)

    def test_corpus_round_trip(self, tmp_path):
        corpus = tiny_corpus(3)
        path = tmp_path / "c.jsonl"
        save_corpus(corpus, path)
        loaded = load_corpus(path)
        assert loaded.dataset_ids == corpus.dataset_ids
        assert loaded.visualizations == corpus.visualizations

    def test_reference_shape_summary(self):
        """The summary layout reproduces a large-corpus shape exactly:
        925 datasets, 60 configs in use, 11778 attributes, 4865 visualizations."""
        datasets = []
        vis = {}
        config_ids = [
            f"bar;x=quantitative:{'mean' if i % 2 else 'sum'};y=nominal" for i in range(2)
        ]
        # 60 distinct single-slot configs via mark/aggregate combinations
        config_ids = []
        for mark in ("bar", "scatter", "line", "area", "box", "histogram"):
            for channel in ("x", "y"):
                for agg in ("", ":sum", ":mean", ":bin", ":count"):
                    config_ids.append(f"{mark};{channel}=quantitative{agg}")
        config_ids = config_ids[:60]
        assert len(set(config_ids)) == 60
        n_datasets, n_attributes, n_vis = 925, 11778, 4865
        base_attrs = n_attributes // n_datasets
        extra_attrs = n_attributes - base_attrs * n_datasets
        base_vis = n_vis // n_datasets
        extra_vis = n_vis - base_vis * n_datasets
        for i in range(n_datasets):
            n_cols = base_attrs + (1 if i < extra_attrs else 0)
            attrs = tuple(
                Attribute(f"c{j}", AttributeType.QUANTITATIVE, (1.0, 2.0))
                for j in range(n_cols)
            )
            d = Dataset(id=f"p{i}", attributes=attrs)
            datasets.append(d)
            count = base_vis + (1 if i < extra_vis else 0)
            vis[d.id] = [
                Visualization(
                    combo=AttributeCombination(d.id, ("c0",)),
                    config_id=config_ids[(i + j) % 60],
                    label=1,
                )
                for j in range(count)
            ]
        corpus = Corpus(datasets=tuple(datasets), visualizations=vis)
        stats = corpus_stats(corpus)
        assert stats["datasets"] == 925
        assert stats["vis_configs"] == 60
        assert stats["attributes"] == 11778
        assert stats["visualizations"] == 4865


class TestSplitCorpus:
    def test_sizes(self):
        corpus = tiny_corpus(10)
        train, val, test = split_corpus(corpus, (0.8, 0.1, 0.1), seed=7)
        assert (len(train.datasets), len(val.datasets), len(test.datasets)) == (8, 1, 1)

    def test_deterministic(self):
        corpus = tiny_corpus(10)
        a = split_corpus(corpus, (0.8, 0.1, 0.1), seed=7)
        b = split_corpus(corpus, (0.8, 0.1, 0.1), seed=7)
        assert [s.dataset_ids for s in a] == [s.dataset_ids for s in b]

    def test_partition_law(self):
        corpus = tiny_corpus(13)
        parts = split_corpus(corpus, (0.5, 0.25, 0.25), seed=3)
        ids = [set(p.dataset_ids) for p in parts]
        assert ids[0] | ids[1] | ids[2] == set(corpus.dataset_ids)
        assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])

    def test_too_few_datasets(self):
        with pytest.raises(TooFewDatasets):
            split_corpus(tiny_corpus(2), (0.8, 0.1, 0.1), seed=1)

    def test_bad_fractions(self):
        with pytest.raises(ValueError):
            split_corpus(tiny_corpus(4), (0.5, 0.2, 0.2), seed=1)
