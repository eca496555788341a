import json

import pytest
from fastapi.testclient import TestClient

from steval.campaign import CampaignState, create_app
from steval.da import ANNOTATOR_INSTRUCTIONS, DARecord, IngestError


@pytest.fixture()
def client(mini_campaign):
    return TestClient(create_app(mini_campaign))


class TestPersistence:
    def test_reload_reproduces_state(self, mini_campaign):
        again = CampaignState.load(mini_campaign.root)
        assert again.condition == mini_campaign.condition
        assert again.plan == mini_campaign.plan
        assert again.annotators == mini_campaign.annotators
        assert again.tasks == mini_campaign.tasks
        assert again.records == mini_campaign.records

    def test_append_survives_reload(self, mini_campaign):
        task = mini_campaign.tasks[0]
        rec = DARecord(task.annotator_id, task.system_id, task.segment_id, 66.0, "ts")
        mini_campaign.append_record(rec)
        again = CampaignState.load(mini_campaign.root)
        assert again.records == [rec]

    def test_append_rejects_unknown_and_duplicate(self, mini_campaign):
        task = mini_campaign.tasks[0]
        with pytest.raises(IngestError, match="no issued task"):
            mini_campaign.append_record(
                DARecord("ghost", task.system_id, task.segment_id, 1.0)
            )
        rec = DARecord(task.annotator_id, task.system_id, task.segment_id, 66.0)
        mini_campaign.append_record(rec)
        with pytest.raises(IngestError, match="duplicate"):
            mini_campaign.append_record(rec)

    def test_campaign_manifest_is_path_free(self, mini_campaign):
        manifest = (mini_campaign.root / "campaign.json").read_text(encoding="utf-8")
        data = json.loads(manifest)
        assert "/" not in json.dumps(data.get("systems", []))
        assert set(data) == {
            "annotators",
            "condition",
            "plan",
            "shuffle_seed",
            "systems",
            "task_count",
        }

    def test_not_a_campaign_dir(self, tmp_path):
        with pytest.raises(IngestError, match="not a campaign directory"):
            CampaignState.load(tmp_path)


class TestService:
    def test_next_task_payload_is_blind(self, client):
        resp = client.get("/api/tasks/next", params={"annotator": "ann1"})
        assert resp.status_code == 200
        payload = resp.json()
        assert set(payload) == {
            "task_id",
            "source_text",
            "hyp_text",
            "prev_hyp_text",
            "next_hyp_text",
            "instructions",
            "slider",
        }
        blob = json.dumps(payload).lower()
        assert "system_id" not in blob
        assert "sysa" not in blob and "sysb" not in blob and "sysc" not in blob
        assert payload["instructions"] == ANNOTATOR_INSTRUCTIONS
        assert payload["slider"] == {"min": 0.0, "max": 100.0, "step": 0.5}

    def test_unknown_annotator_404(self, client):
        resp = client.get("/api/tasks/next", params={"annotator": "nobody"})
        assert resp.status_code == 404

    def test_submit_valid_persists(self, client, mini_campaign):
        payload = client.get("/api/tasks/next", params={"annotator": "ann1"}).json()
        resp = client.post(
            "/api/scores",
            json={"task_id": payload["task_id"], "annotator_id": "ann1", "score": 73.0},
        )
        assert resp.status_code == 201
        assert resp.json()["done"] == 1
        reloaded = CampaignState.load(mini_campaign.root)
        assert len(reloaded.records) == 1
        assert reloaded.records[0].raw_score == 73.0

    def test_out_of_range_422(self, client):
        payload = client.get("/api/tasks/next", params={"annotator": "ann1"}).json()
        resp = client.post(
            "/api/scores",
            json={"task_id": payload["task_id"], "annotator_id": "ann1", "score": 150},
        )
        assert resp.status_code == 422
        assert resp.json()["detail"]

    def test_duplicate_409(self, client):
        payload = client.get("/api/tasks/next", params={"annotator": "ann1"}).json()
        body = {"task_id": payload["task_id"], "annotator_id": "ann1", "score": 50.0}
        assert client.post("/api/scores", json=body).status_code == 201
        assert client.post("/api/scores", json=body).status_code == 409

    def test_unknown_task_404(self, client):
        resp = client.post(
            "/api/scores",
            json={"task_id": "t999999", "annotator_id": "ann1", "score": 10.0},
        )
        assert resp.status_code == 404

    def test_wrong_annotator_for_task_404(self, client):
        payload = client.get("/api/tasks/next", params={"annotator": "ann1"}).json()
        resp = client.post(
            "/api/scores",
            json={"task_id": payload["task_id"], "annotator_id": "ann2", "score": 10.0},
        )
        assert resp.status_code == 404

    def test_progress_counts(self, client, mini_campaign):
        before = client.get("/api/progress").json()
        assert before["total"] == len(mini_campaign.tasks)
        assert before["done"] == 0
        payload = client.get("/api/tasks/next", params={"annotator": "ann2"}).json()
        client.post(
            "/api/scores",
            json={"task_id": payload["task_id"], "annotator_id": "ann2", "score": 10.0},
        )
        after = client.get("/api/progress").json()
        assert after["done"] == 1
        assert after["annotators"]["ann2"]["done"] == 1

    def test_drain_annotator_to_204(self, client):
        while True:
            resp = client.get("/api/tasks/next", params={"annotator": "ann1"})
            if resp.status_code == 204:
                break
            payload = resp.json()
            assert (
                client.post(
                    "/api/scores",
                    json={
                        "task_id": payload["task_id"],
                        "annotator_id": "ann1",
                        "score": 42.5,
                    },
                ).status_code
                == 201
            )
        progress = client.get("/api/progress").json()
        assert (
            progress["annotators"]["ann1"]["done"]
            == progress["annotators"]["ann1"]["total"]
        )

    def test_served_order_matches_presentation_index(self, client, mini_campaign):
        mine = sorted(
            (t for t in mini_campaign.tasks if t.annotator_id == "ann1"),
            key=lambda t: t.presentation_index,
        )
        seen = []
        for _ in range(3):
            payload = client.get(
                "/api/tasks/next", params={"annotator": "ann1"}
            ).json()
            seen.append(payload["task_id"])
            client.post(
                "/api/scores",
                json={"task_id": payload["task_id"], "annotator_id": "ann1", "score": 1},
            )
        assert seen == [t.task_id for t in mine[:3]]


class TestIngestExportRoundtrip:
    def test_ingest_then_export_identity(self, mini_campaign, tmp_path):
        from steval.da import write_records_tsv
        from steval.fixtures import synthetic_records

        recs = synthetic_records(mini_campaign)
        src = tmp_path / "in.tsv"
        write_records_tsv(recs, src, mini_campaign.condition)
        added = mini_campaign.ingest(src)
        assert added == len(mini_campaign.tasks)
        out = tmp_path / "out.tsv"
        mini_campaign.export(out)
        assert out.read_bytes() == src.read_bytes()
