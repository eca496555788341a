import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from steval import cli
from steval.campaign import CampaignState
from steval.evalset import load_testset
from steval.fixtures import build_mini_testset


@pytest.fixture(scope="session")
def mini_workdir(tmp_path_factory):
    """Mini test set built once, with all systems resegmented via the CLI."""
    root = tmp_path_factory.mktemp("mini")
    manifest, sys_manifests = build_mini_testset(root)
    reseg_manifests = {}
    for system_id, mpath in sorted(sys_manifests.items()):
        out_dir = root / "reseg" / system_id
        rc = cli.main(
            [
                "reseg",
                "--hyp",
                str(mpath),
                "--ref-manifest",
                str(manifest),
                "--level",
                "word",
                "--out",
                str(out_dir),
                "--ref-set",
                "new",
            ]
        )
        assert rc == 0
        reseg_manifests[system_id] = out_dir / f"{system_id}.json"
    return {
        "root": root,
        "manifest": manifest,
        "raw_manifests": sys_manifests,
        "reseg_manifests": reseg_manifests,
    }


@pytest.fixture()
def mini_testset(mini_workdir):
    return load_testset(mini_workdir["manifest"])


@pytest.fixture()
def mini_testset_resegmented(mini_workdir):
    from steval.evalset import load_system_output

    testset = load_testset(mini_workdir["manifest"])
    for system_id, mpath in sorted(mini_workdir["reseg_manifests"].items()):
        testset.register(load_system_output(mpath, testset))
    return testset


@pytest.fixture()
def mini_campaign(mini_workdir, tmp_path):
    camp_dir = tmp_path / "campaign"
    rc = cli.main(
        [
            "campaign",
            "build",
            "--campaign-dir",
            str(camp_dir),
            "--testset",
            str(mini_workdir["manifest"]),
            "--systems",
            *[str(p) for p in sorted(mini_workdir["reseg_manifests"].values())],
            "--k",
            "10",
            "--seed",
            "5",
            "--annotators",
            "ann1",
            "ann2",
            "--shuffle-seed",
            "13",
        ]
    )
    assert rc == 0
    return CampaignState.load(camp_dir)
