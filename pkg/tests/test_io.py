import json

import pytest

from shiftscope.dist import Pmf, SampleSet
from shiftscope.errors import InputFormatError
from shiftscope import io as sio


def test_distribution_loader_dispatch(tmp_path):
    pmf_path = tmp_path / "p.json"
    pmf_path.write_text(json.dumps({"mass": {"a": 0.25, "b": 0.75}}))
    loaded = sio.load_distribution(pmf_path)
    assert isinstance(loaded, Pmf)
    assert loaded.as_dict() == {"a": 0.25, "b": 0.75}

    csv_path = tmp_path / "s.csv"
    csv_path.write_text("label,count\nb,2\na,1\nb,1\n")
    s = sio.load_distribution(csv_path)
    assert isinstance(s, SampleSet)
    assert s.as_dict() == {"a": 1, "b": 3}  # repeated labels accumulate


def test_sampleset_csv_round_trip(tmp_path):
    s = SampleSet.from_counts({"x": 4, "y": 0, "z": 7})
    path = tmp_path / "out.csv"
    sio.write_sampleset_csv(path, s)
    assert sio.load_sampleset_csv(path) == s


def test_bad_csv_names_file_and_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("label,count\nx,1\noops\n")
    with pytest.raises(InputFormatError) as err:
        sio.load_sampleset_csv(path)
    assert "bad.csv:3" in str(err.value)


def test_paired_corpus_jsonl(tmp_path):
    line = {
        "context_id": "c9",
        "human": {"turns": [{"q": "is it red", "a": "yes"}], "id": "h1"},
        "generated": {"turns": [{"q": "is it blue", "a": "no"}]},
        "u": "u0",
    }
    path = tmp_path / "pairs.jsonl"
    path.write_text(json.dumps(line) + "\n")
    corpus = sio.load_paired_corpus(path)
    assert len(corpus) == 1
    item = corpus.items[0]
    assert item.context_id == "c9"
    assert item.u == "u0"
    assert item.human.uid == "h1"
    path.write_text('{"context_id": "c9"}\n')
    with pytest.raises(InputFormatError):
        sio.load_paired_corpus(path)


def test_dialogues_jsonl(tmp_path):
    path = tmp_path / "dialogues.jsonl"
    path.write_text(
        json.dumps({"id": "d1", "context_id": "c0", "turns": [{"q": "is it red", "a": "no"}]}) + "\n"
    )
    table = sio.load_dialogues_jsonl(path)
    assert table["d1"]["context_id"] == "c0"
    assert table["d1"]["dialogue"].uid == "d1"


def test_embeddings_csv_and_jsonl(tmp_path):
    csv_path = tmp_path / "emb.csv"
    csv_path.write_text("id,v1,v2\na,0,1\nb,2,3\n")
    table = sio.load_embeddings(csv_path)
    assert table.ids == ("a", "b")
    assert table.dim == 2

    jsonl_path = tmp_path / "emb.jsonl"
    jsonl_path.write_text('{"id": "a", "vector": [0, 1]}\n{"id": "b", "vector": [2, 3]}\n')
    table2 = sio.load_embeddings(jsonl_path)
    assert table2.ids == table.ids
    assert (table2.vectors == table.vectors).all()


def test_score_table_csv(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("dialogue_id,u_id,score\nd1,u0,0.5\nd2,,1.0\n")
    table = sio.load_score_table_csv(path)
    assert table[("d1", "u0")] == 0.5
    assert table[("d2", None)] == 1.0


def test_joint_instance_loader(tmp_path):
    doc = {
        "schema_version": 1,
        "contexts": {"c0": 1.0},
        "human": {"c0": {"d0": 1.0}},
        "gen1": {"c0": {"d0": 1.0}},
        "gen2": {"c0": {"d0": 1.0}},
        "noise": {"u0": 1.0},
        "test": {"kind": "table", "values": {"d0": {"u0": 0.5}}},
        "coarse_map": {"d0": "d0"},
        "dialogues": {"d0": {"turns": [{"q": "is it red", "a": "no"}]}},
    }
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(doc))
    inst = sio.load_joint_instance(path)
    assert inst["joint"].dialogue_space.labels == ("d0",)
    assert inst["coarse_map"] == {"d0": "d0"}
    assert inst["dialogues"]["d0"].uid == "d0"


def test_manifest_digests_are_stable(tmp_path):
    f = tmp_path / "input.csv"
    f.write_text("label,count\nx,1\n")
    m1 = sio.RunManifest.build("energy", seed=3, config={"k": 2}, inputs={"a": f})
    m2 = sio.RunManifest.build("energy", seed=3, config={"k": 2}, inputs={"a": f})
    assert m1.config_digest == m2.config_digest
    assert m1.input_digests == m2.input_digests
