import shutil

import pytest

from simulator.dataset import write_dataset
from simulator.scene import default_scene
from validate_dataset import main, print_validation_report, validate_dataset


@pytest.fixture
def dataset_copy(small_dataset, tmp_path):
    root = tmp_path / "recording"
    shutil.copytree(small_dataset, root)
    return root


def test_rendered_dataset_is_valid(small_dataset):
    results = validate_dataset(small_dataset, require_extras=True)
    assert results["errors"] == []
    assert results["frames"] == 4
    assert results["shape"] == (240, 320)
    assert results["ground_truth"] == {"arm": 4, "object": 4, "gripper": 4}
    assert set(results["sessions"].values()) == {4}
    assert results["manifest"]["poses"] == 4


def test_missing_frames_directory(tmp_path):
    results = validate_dataset(tmp_path)
    assert results["errors"] and "frames" in results["errors"][0]


def test_missing_ground_truth_mask(dataset_copy):
    (dataset_copy / "gt_object" / "000002.pgm").unlink()
    results = validate_dataset(dataset_copy)
    assert any("gt_object" in e for e in results["errors"])


def test_unpaired_empty_recording(dataset_copy):
    (dataset_copy / "empty" / "frames" / "000003.png").unlink()
    results = validate_dataset(dataset_copy)
    assert any("object-free" in e for e in results["errors"])


def test_manifest_pose_count(dataset_copy):
    (dataset_copy / "manifest.json").write_text('{"poses": 9}')
    results = validate_dataset(dataset_copy)
    assert any("9 poses" in e for e in results["errors"])


def test_extras_can_be_required(tmp_path):
    write_dataset(default_scene(poses=3), tmp_path / "bare", extras=False)
    assert validate_dataset(tmp_path / "bare")["errors"] == []
    missing = validate_dataset(tmp_path / "bare", require_extras=True)["errors"]
    assert any("arm_only" in e for e in missing)


def test_report_and_exit_codes(small_dataset, dataset_copy, monkeypatch, capsys):
    print_validation_report(validate_dataset(small_dataset))
    assert "No errors found" in capsys.readouterr().out

    monkeypatch.setattr("sys.argv", ["validate_dataset.py", str(small_dataset)])
    with pytest.raises(SystemExit) as info:
        main()
    assert info.value.code == 0

    (dataset_copy / "gt_arm" / "000000.pgm").unlink()
    monkeypatch.setattr("sys.argv", ["validate_dataset.py", str(dataset_copy)])
    with pytest.raises(SystemExit) as info:
        main()
    assert info.value.code == 1

    monkeypatch.setattr("sys.argv", ["validate_dataset.py"])
    with pytest.raises(SystemExit) as info:
        main()
    assert info.value.code == 2
