#!/usr/bin/env python3
"""Generate the desk-scale datasets consumed by the classifier tests.

Produces, under --out:
  images_desk/    2400 crystal/amorphous frames (80/20 split)
  videos_desk/    1600 balanced four-phase clips + 14x6 test grid + 640 probe
  videos_uneven/  1600 clips at the 40/35/20/5 PG/MC/PC/ML proportions
"""

import argparse
import sys
import time
from pathlib import Path

from skyrsim import ImageDatasetSpec, VideoDatasetSpec
from skyrsim.datasets import build_image_dataset, build_video_dataset


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data"))
    ap.add_argument("--workers", type=int, default=2)
    args = ap.parse_args()
    out = Path(args.out)

    t0 = time.time()
    if not (out / "images_desk" / "manifest.json").exists():
        print("building images_desk ...", flush=True)
        build_image_dataset(ImageDatasetSpec(total=2400, seed=7001),
                            out / "images_desk", workers=args.workers)
        print(f"  done ({time.time()-t0:.0f}s)", flush=True)

    if not (out / "videos_desk" / "manifest.json").exists():
        print("building videos_desk ...", flush=True)
        build_video_dataset(VideoDatasetSpec(total=1600, proportion_mode="balanced",
                                             test_grid=(14, 6), probe_count=640,
                                             seed=7002),
                            out / "videos_desk", workers=args.workers)
        print(f"  done ({time.time()-t0:.0f}s)", flush=True)

    if not (out / "videos_uneven" / "manifest.json").exists():
        print("building videos_uneven ...", flush=True)
        build_video_dataset(VideoDatasetSpec(total=1600, proportion_mode="uneven",
                                             test_grid=(2, 2), probe_count=8,
                                             probe_clips_per_run=4, seed=7003),
                            out / "videos_uneven", workers=args.workers)
        print(f"  done ({time.time()-t0:.0f}s)", flush=True)
    print(f"all datasets ready ({time.time()-t0:.0f}s total)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
