import json
import random

import pytest
from fastapi.testclient import TestClient

from vizrec.errors import NoCandidates
from vizrec.serving import (
    CANDIDATE_LIMIT,
    DatasetStore,
    RecommendQuery,
    create_app,
    recommend,
)
from vizrec.tabular import Attribute, AttributeType, Dataset

CARS_CSV = "\n".join(
    ["model,origin,mpg,horsepower,weight"]
    + [
        f"car{i},{'usa europe japan'.split()[i % 3]},{18 + (i * 7) % 25},"
        f"{70 + (i * 13) % 150},{1600 + (i * 97) % 3000}"
        for i in range(60)
    ]
) + "\n"


@pytest.fixture(scope="module")
def client(small_model):
    model, _ = small_model
    return TestClient(create_app(model))


@pytest.fixture(scope="module")
def cars_id(client):
    response = client.post("/datasets", content=CARS_CSV.encode())
    assert response.status_code == 200
    return response.json()["dataset_id"]


@pytest.fixture(scope="module")
def cars():
    from vizrec.tabular import dataset_from_csv_text

    return dataset_from_csv_text("cars", CARS_CSV)


class TestRecommendCore:

    def test_two_nominal_constraint_binds_exactly_two_nominals(self, small_model):
        model, _ = small_model
        # synthetic vocabulary has no two-nominal configuration, so build the
        # check on the hbar config: one quantitative + one nominal
        dataset = Dataset(
            id="q-n",
            attributes=(
                Attribute("price", AttributeType.QUANTITATIVE, tuple(map(float, range(90)))),
                Attribute("brand", AttributeType.NOMINAL, tuple("abc"[i % 3] for i in range(90))),
                Attribute("size", AttributeType.QUANTITATIVE, tuple(map(float, range(90)))),
            ),
        )
        query = RecommendQuery(
            top_k=20, required_attribute_types=("quantitative", "nominal")
        )
        results = recommend(model, dataset, query)
        assert results
        for rec in results:
            types = sorted(
                dataset.attribute(n).type.value
                for n in rec.visualization.combo.attribute_names
            )
            assert types == ["nominal", "quantitative"]

    def test_two_nominal_query_with_two_nominal_config(self):
        """A vocabulary carrying a two-nominal configuration: the {nominal,
        nominal} constraint returns candidates binding exactly two nominals."""
        from vizrec.encoding import CrossProductSpec
        from vizrec.network import ModelShape, init
        from vizrec.visspace import ChannelSpec, ConfigVocabulary, VisConfiguration

        from .test_network import tiny_schema

        nn_bar = VisConfiguration(
            mark="bar", channels=(ChannelSpec("x", "nominal"), ChannelSpec("y", "nominal"))
        )
        qq_scatter = VisConfiguration(
            mark="scatter",
            channels=(ChannelSpec("x", "quantitative"), ChannelSpec("y", "quantitative")),
        )
        n_hist = VisConfiguration(
            mark="histogram", channels=(ChannelSpec("x", "nominal"),)
        )
        vocab = ConfigVocabulary(
            configs=(nn_bar, qq_scatter, n_hist),
            counts={nn_bar.id: 3, qq_scatter.id: 2, n_hist.id: 1},
        )
        schema = tiny_schema()
        from vizrec.metafeatures import Normalizer
        import numpy as np

        max_arity, bins = 2, 3
        s_length = (
            len(vocab) + len(vocab.field_value_keys()) + max_arity * schema.k * bins
        )
        shape = ModelShape(
            schema=schema,
            normalizer=Normalizer(
                mins=np.zeros(schema.k), maxs=np.ones(schema.k), schema_hash=schema.hash
            ),
            vocab=vocab,
            cross_spec=CrossProductSpec(masks=(), s_length=s_length),
            hidden=(6, 4),
            embed_dim=3,
            max_arity=max_arity,
            bins=bins,
        )
        model = init(shape, seed=3)
        dataset = Dataset(
            id="nn",
            attributes=(
                Attribute("brand", AttributeType.NOMINAL, tuple("abcab")),
                Attribute("region", AttributeType.NOMINAL, tuple("xyxyx")),
                Attribute("tier", AttributeType.NOMINAL, tuple("uvuvu")),
                Attribute("price", AttributeType.QUANTITATIVE, (1.0, 2.0, 3.0, 4.0, 5.0)),
            ),
        )
        query = RecommendQuery(
            top_k=50, required_attribute_types=("nominal", "nominal")
        )
        results = recommend(model, dataset, query)
        assert results
        for rec in results:
            names = rec.visualization.combo.attribute_names
            assert len(names) == 2
            assert all(dataset.attribute(n).type is AttributeType.NOMINAL for n in names)
        # 3 nominal attributes -> 6 ordered pairs for the two-slot config
        assert len(results) == 6

    def test_top_k_larger_than_candidates_returns_all(self, small_model, cars):
        model, _ = small_model
        results = recommend(model, cars, RecommendQuery(top_k=10_000))
        assert 0 < len(results) < 10_000
        assert [r.rank for r in results] == list(range(1, len(results) + 1))

    def test_identical_requests_identical_bytes(self, small_model, cars):
        model, _ = small_model
        query = RecommendQuery(top_k=5)
        a = json.dumps([r.to_dict() for r in recommend(model, cars, query)])
        b = json.dumps([r.to_dict() for r in recommend(model, cars, query)])
        assert a == b

    def test_no_candidates(self, small_model, cars):
        model, _ = small_model
        with pytest.raises(NoCandidates, match="allowed_marks"):
            recommend(model, cars, RecommendQuery(allowed_marks=frozenset({"pie"})))

    def test_scores_non_increasing_and_ranks_contiguous(self, small_model, cars):
        model, _ = small_model
        results = recommend(model, cars, RecommendQuery(top_k=15))
        scores = [r.score for r in results]
        assert scores == sorted(scores, reverse=True)
        assert [r.rank for r in results] == list(range(1, len(results) + 1))


class TestHttpEndpoints:
    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json()["status"] == "ok"

    def test_configs_lists_vocabulary(self, client, small_model):
        model, _ = small_model
        response = client.get("/configs")
        assert response.status_code == 200
        ids = [c["id"] for c in response.json()["configs"]]
        assert ids == [c.id for c in model.shape.vocab.configs]

    def test_upload_then_recommend(self, client, cars_id):
        response = client.post(
            f"/datasets/{cars_id}/recommendations", json={"top_k": 5}
        )
        assert response.status_code == 200
        payload = response.json()
        assert len(payload["recommendations"]) == 5
        ranks = [r["rank"] for r in payload["recommendations"]]
        assert ranks == [1, 2, 3, 4, 5]
        for rec in payload["recommendations"]:
            assert set(rec["chart_spec"]) == {"mark", "encoding"}

    def test_attribute_summaries(self, client, cars_id):
        response = client.get(f"/datasets/{cars_id}/attributes")
        assert response.status_code == 200
        by_name = {a["name"]: a for a in response.json()["attributes"]}
        assert by_name["mpg"]["type"] == "quantitative"
        assert by_name["origin"]["type"] == "nominal"

    def test_re_upload_same_content_same_id(self, client, cars_id):
        response = client.post("/datasets", content=CARS_CSV.encode())
        assert response.json()["dataset_id"] == cars_id

    def test_malformed_payload_400(self, client):
        response = client.post("/datasets", content=b"a,a\n1,2\n")
        assert response.status_code == 400
        assert response.json()["error"] == "DuplicateAttribute"
        response = client.post("/datasets", content=b'{"dataset": nope}')
        assert response.status_code == 400
        assert response.json()["error"] == "ParseError"

    def test_unknown_dataset_404(self, client):
        assert client.get("/datasets/absent/attributes").status_code == 404
        response = client.post("/datasets/absent/recommendations", json={})
        assert response.status_code == 404

    def test_candidate_guard_413(self, client):
        wide_csv = (
            ",".join(f"c{i}" for i in range(500))
            + "\n"
            + "\n".join(",".join(str(r * 500 + i) for i in range(500)) for r in range(3))
            + "\n"
        )
        upload = client.post("/datasets", content=wide_csv.encode())
        assert upload.status_code == 200
        dataset_id = upload.json()["dataset_id"]
        response = client.post(f"/datasets/{dataset_id}/recommendations", json={})
        assert response.status_code == 413
        payload = response.json()
        assert payload["error"] == "CandidateLimitExceeded"
        assert payload["limit"] == CANDIDATE_LIMIT
        assert payload["bound"] > CANDIDATE_LIMIT

    def test_empty_result_names_conflicting_constraints(self, client, cars_id):
        response = client.post(
            f"/datasets/{cars_id}/recommendations",
            json={"allowed_marks": ["pie"]},
        )
        assert response.status_code == 200
        payload = response.json()
        assert payload["recommendations"] == []
        assert "allowed_marks" in payload["empty_reason"]

    def test_replay_is_byte_identical(self, client, cars_id):
        a = client.post(f"/datasets/{cars_id}/recommendations", json={"top_k": 7})
        b = client.post(f"/datasets/{cars_id}/recommendations", json={"top_k": 7})
        assert a.content == b.content


class TestConstraintSoundness:
    def test_randomized_queries(self, client, cars_id, small_model):
        model, _ = small_model
        marks = sorted({c.mark for c in model.shape.vocab.configs})
        aggregates = ["mean", "bin", "sum"]
        types = ["quantitative", "nominal", "temporal"]
        rng = random.Random(2024)
        attrs = client.get(f"/datasets/{cars_id}/attributes").json()["attributes"]
        attr_types = {a["name"]: a["type"] for a in attrs}
        names = list(attr_types)
        for _ in range(120):
            query = {"top_k": rng.randint(1, 12)}
            if rng.random() < 0.5:
                query["allowed_marks"] = rng.sample(marks, rng.randint(1, len(marks)))
            if rng.random() < 0.3:
                query["allowed_aggregates"] = rng.sample(aggregates, rng.randint(1, 3))
            if rng.random() < 0.4:
                query["required_attributes"] = rng.sample(names, rng.randint(1, 2))
            if rng.random() < 0.4:
                query["required_attribute_types"] = [
                    rng.choice(types) for _ in range(rng.randint(1, 2))
                ]
            response = client.post(
                f"/datasets/{cars_id}/recommendations", json=query
            )
            assert response.status_code == 200
            payload = response.json()
            recs = payload["recommendations"]
            assert len(recs) <= query["top_k"]
            scores = [r["score"] for r in recs]
            assert scores == sorted(scores, reverse=True)
            assert [r["rank"] for r in recs] == list(range(1, len(recs) + 1))
            for rec in recs:
                bound = rec["visualization"]["attributes"]
                spec = rec["chart_spec"]
                if "allowed_marks" in query:
                    assert spec["mark"] in query["allowed_marks"]
                if "required_attributes" in query:
                    assert set(query["required_attributes"]).issubset(bound)
                if "required_attribute_types" in query:
                    got = sorted(attr_types[n] for n in bound)
                    assert got == sorted(query["required_attribute_types"])
                if "allowed_aggregates" in query:
                    for channel in spec["encoding"].values():
                        agg = "bin" if channel.get("bin") else channel.get("aggregate")
                        if agg:
                            assert agg in query["allowed_aggregates"]


class TestDatasetStore:
    def test_lru_eviction(self):
        store = DatasetStore(capacity=2)
        d = Dataset(
            id="d",
            attributes=(Attribute("a", AttributeType.QUANTITATIVE, (1.0, 2.0)),),
        )
        id1 = store.put(b"one", d)
        id2 = store.put(b"two", d)
        store.get(id1)  # refresh
        id3 = store.put(b"three", d)
        assert store.get(id1) is not None
        assert store.get(id2) is None
        assert store.get(id3) is not None
