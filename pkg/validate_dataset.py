"""
Validation script for recordings in the dataset layout.
Checks directory structure, frame sizes and ground-truth consistency.

Usage:
    python validate_dataset.py DATASET_DIR
"""

import json
import sys
from pathlib import Path
from typing import Dict

from errors import DataError
from imaging.io import read_gray, read_png
from simulator.dataset import ARM_ONLY, EMPTY, FRAMES, GRIPPER, GT_DIRS, MANIFEST


def _sizes(paths, reader) -> Dict:
    sizes = {}
    for path in paths:
        try:
            image = reader(path)
        except DataError as e:
            sizes[path.name] = str(e)
            continue
        shape = image.shape if hasattr(image, "shape") else None
        sizes[path.name] = tuple(shape[:2])
    return sizes


def validate_dataset(root, require_extras: bool = False) -> Dict:
    """
    Validate a dataset directory for use by the segmentation commands

    Args:
        root: Dataset directory
        require_extras: Also require the object-free recordings and gripper pairs

    Returns:
        Dictionary with validation results; 'errors' is empty for a valid dataset
    """
    root = Path(root)
    results = {
        'frames': 0,
        'shape': None,
        'ground_truth': {},
        'sessions': {},
        'manifest': None,
        'errors': [],
    }

    frames_dir = root / FRAMES
    if not frames_dir.is_dir():
        results['errors'].append(f"Missing '{FRAMES}/' directory in {root}")
        return results

    frame_paths = sorted(frames_dir.glob("*.png"))
    results['frames'] = len(frame_paths)
    if not frame_paths:
        results['errors'].append(f"'{FRAMES}/' holds no PNG frames")
        return results

    sizes = _sizes(frame_paths, read_png)
    shapes = {s for s in sizes.values() if isinstance(s, tuple)}
    for name, size in sizes.items():
        if isinstance(size, str):
            results['errors'].append(f"{FRAMES}/{name}: {size}")
    if len(shapes) > 1:
        results['errors'].append(f"Frames have differing sizes: {sorted(shapes)}")
    elif shapes:
        results['shape'] = shapes.pop()

    stems = [p.stem for p in frame_paths]

    # Ground truth is optional; when present it must match frame for frame
    for kind, dirname in GT_DIRS.items():
        gt_dir = root / dirname
        if not gt_dir.is_dir():
            continue
        gt_paths = sorted(gt_dir.glob("*.pgm"))
        results['ground_truth'][kind] = len(gt_paths)
        if [p.stem for p in gt_paths] != stems:
            results['errors'].append(f"'{dirname}/' does not list one mask per frame")
            continue
        for name, size in _sizes(gt_paths, read_gray).items():
            if isinstance(size, str):
                results['errors'].append(f"{dirname}/{name}: {size}")
            elif results['shape'] and size != results['shape']:
                results['errors'].append(f"{dirname}/{name}: size {size} differs from frames {results['shape']}")

    for session in (f"{EMPTY}/{FRAMES}", f"{ARM_ONLY}/{FRAMES}", f"{GRIPPER}/open", f"{GRIPPER}/closed"):
        directory = root / session
        count = len(list(directory.glob("*.png"))) if directory.is_dir() else 0
        results['sessions'][session] = count
        if count == 0 and require_extras:
            results['errors'].append(f"Missing recording '{session}/'")

    empty_count = results['sessions'][f"{EMPTY}/{FRAMES}"]
    if empty_count and empty_count != results['frames']:
        results['errors'].append(
            f"Paired object-free recording has {empty_count} frames, expected {results['frames']}"
        )
    if results['sessions'][f"{GRIPPER}/open"] != results['sessions'][f"{GRIPPER}/closed"]:
        results['errors'].append("Gripper open/closed recordings differ in length")

    manifest_path = root / MANIFEST
    if manifest_path.exists():
        try:
            results['manifest'] = json.loads(manifest_path.read_text())
        except json.JSONDecodeError as e:
            results['errors'].append(f"{MANIFEST}: Invalid JSON - {str(e)}")
        else:
            poses = results['manifest'].get('poses')
            if poses is not None and poses != results['frames']:
                results['errors'].append(f"{MANIFEST} lists {poses} poses but {results['frames']} frames exist")

    return results


def print_validation_report(results: Dict) -> None:
    """Print a formatted validation report"""

    print("=" * 60)
    print("DATASET VALIDATION REPORT")
    print("=" * 60)
    print()

    print(f"Frames: {results['frames']}")
    if results['shape']:
        print(f"Frame size: {results['shape'][1]}x{results['shape'][0]}")
    for kind, count in results['ground_truth'].items():
        print(f"Ground truth '{kind}': {count} masks")
    for session, count in results['sessions'].items():
        print(f"Recording '{session}': {count} frames")
    print()

    if results['errors']:
        print(f"Errors Found: {len(results['errors'])}")
        print("First 10 errors:")
        for error in results['errors'][:10]:
            print(f"  - {error}")
    else:
        print("✓ No errors found!")
    print("=" * 60)


def main():
    """Main entry point"""
    if len(sys.argv) < 2:
        print(__doc__)
        sys.exit(2)

    results = validate_dataset(sys.argv[1])
    print_validation_report(results)
    sys.exit(1 if results['errors'] else 0)


if __name__ == "__main__":
    main()
