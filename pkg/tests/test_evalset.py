import json

import pytest

from steval.evalset import (
    Condition,
    Domain,
    LoadError,
    TaskType,
    load_system_output,
    load_testset,
    save_testset,
)


class TestCondition:
    def test_valid_combinations(self):
        Condition(TaskType.OFFLINE, "en-de", Domain.TED)
        Condition(TaskType.SIMULTANEOUS, "en-zh", Domain.TED)
        Condition(TaskType.OFFLINE, "en-ja", Domain.ACL)
        Condition(TaskType.MULTILINGUAL, "en-de", Domain.ACL)

    def test_undefined_combinations_rejected(self):
        with pytest.raises(ValueError, match="undefined"):
            Condition(TaskType.SIMULTANEOUS, "en-de", Domain.ACL)
        with pytest.raises(ValueError, match="undefined"):
            Condition(TaskType.MULTILINGUAL, "en-de", Domain.TED)

    def test_malformed_lang_pair(self):
        with pytest.raises(ValueError, match="language pair"):
            Condition(TaskType.OFFLINE, "ende", Domain.TED)

    def test_roundtrip_dict(self):
        cond = Condition(TaskType.OFFLINE, "en-ja", Domain.TED)
        assert Condition.from_dict(cond.to_dict()) == cond


class TestLoadTestset:
    def test_mini_fixture_loads(self, mini_testset):
        assert mini_testset.total_segments == 50
        assert len(mini_testset.documents) == 2
        assert mini_testset.reference_sets == ("new", "original")
        assert set(mini_testset.systems) == {"sysA", "sysB", "sysC"}
        for doc in mini_testset.documents:
            ids = [seg.segment_id for seg in doc.segments]
            assert ids == [f"{doc.doc_id}:{i}" for i in range(len(doc.segments))]

    def test_duplicate_doc_id_rejected(self, tmp_path, mini_workdir):
        manifest = json.loads(
            (mini_workdir["manifest"]).read_text(encoding="utf-8")
        )
        manifest["documents"].append(dict(manifest["documents"][0]))
        bad = tmp_path / "manifest.json"
        bad.write_text(json.dumps(manifest), encoding="utf-8")
        # files are resolved relative to the manifest, so copy them over
        for f in mini_workdir["manifest"].parent.iterdir():
            if f.name != "manifest.json":
                (tmp_path / f.name).write_bytes(f.read_bytes())
        with pytest.raises(LoadError, match="duplicate doc_id 'talk01'"):
            load_testset(bad)

    def test_missing_reference_set_in_one_doc_rejected(self, tmp_path, mini_workdir):
        manifest = json.loads(
            (mini_workdir["manifest"]).read_text(encoding="utf-8")
        )
        del manifest["documents"][1]["references"]["original"]
        bad = tmp_path / "manifest.json"
        bad.write_text(json.dumps(manifest), encoding="utf-8")
        for f in mini_workdir["manifest"].parent.iterdir():
            if f.name != "manifest.json":
                (tmp_path / f.name).write_bytes(f.read_bytes())
        with pytest.raises(LoadError, match="reference sets"):
            load_testset(bad)

    def test_ref_line_count_mismatch_rejected(self, tmp_path, mini_workdir):
        for f in mini_workdir["manifest"].parent.iterdir():
            (tmp_path / f.name).write_bytes(f.read_bytes())
        ref = tmp_path / "talk01.ref.new.txt"
        lines = ref.read_text(encoding="utf-8").splitlines()
        ref.write_text("".join(l + "\n" for l in lines[:-1]), encoding="utf-8")
        with pytest.raises(LoadError, match="expected 25 lines"):
            load_testset(tmp_path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(LoadError, match="missing manifest"):
            load_testset(tmp_path)

    def test_save_load_roundtrip(self, mini_testset, tmp_path):
        save_testset(mini_testset, tmp_path / "copy")
        again = load_testset(tmp_path / "copy")
        assert again.condition == mini_testset.condition
        assert again.reference_sets == mini_testset.reference_sets
        assert [d.doc_id for d in again.documents] == [
            d.doc_id for d in mini_testset.documents
        ]
        for doc_a, doc_b in zip(again.documents, mini_testset.documents):
            assert doc_a.segments == doc_b.segments
        assert set(again.systems) == set(mini_testset.systems)
        for system_id in again.systems:
            a, b = again.systems[system_id], mini_testset.systems[system_id]
            assert a.segments_by_doc == b.segments_by_doc
            assert a.resegmented == b.resegmented


class TestLoadSystemOutput:
    def test_parallel_with_header_flag(self, mini_workdir, mini_testset):
        out = load_system_output(
            mini_workdir["reseg_manifests"]["sysA"], mini_testset
        )
        assert out.resegmented
        for doc in mini_testset.documents:
            assert len(out.segments_by_doc[doc.doc_id]) == len(doc.segments)

    def test_fewer_blobs_not_resegmented(self, mini_workdir, mini_testset):
        out = load_system_output(mini_workdir["raw_manifests"]["sysC"], mini_testset)
        assert not out.resegmented
        assert len(out.segments_by_doc["talk01"]) == 1

    def test_empty_file_rejected(self, tmp_path, mini_testset):
        (tmp_path / "talk01.sysE.txt").write_text("", encoding="utf-8")
        manifest = tmp_path / "sysE.json"
        manifest.write_text(
            json.dumps({"system_id": "sysE", "documents": {"talk01": "talk01.sysE.txt"}}),
            encoding="utf-8",
        )
        with pytest.raises(LoadError, match="empty system output"):
            load_system_output(manifest, mini_testset)

    def test_unknown_doc_rejected(self, tmp_path, mini_testset):
        (tmp_path / "x.txt").write_text("hallo\n", encoding="utf-8")
        manifest = tmp_path / "sysE.json"
        manifest.write_text(
            json.dumps({"system_id": "sysE", "documents": {"talk99": "x.txt"}}),
            encoding="utf-8",
        )
        with pytest.raises(LoadError, match="unknown documents"):
            load_system_output(manifest, mini_testset)

    def test_false_resegmented_assertion_rejected(self, tmp_path, mini_testset):
        (tmp_path / "x.txt").write_text("#resegmented\nhallo\n", encoding="utf-8")
        manifest = tmp_path / "sysE.json"
        manifest.write_text(
            json.dumps({"system_id": "sysE", "documents": {"talk01": "x.txt"}}),
            encoding="utf-8",
        )
        with pytest.raises(LoadError, match="asserts resegmented"):
            load_system_output(manifest, mini_testset)

    def test_register_unknown_doc_rejected(self, mini_testset):
        from steval.evalset import SystemOutput

        stray = SystemOutput(
            "sysQ", mini_testset.condition, {"talk99": ["z"]}, False
        )
        with pytest.raises(LoadError, match="unknown documents"):
            mini_testset.register(stray)
