"""The region-proposal geometry toolbox, step by step.

Anchors tile the feature map at 4 scales x 3 aspect ratios (12 per
location); box regression deltas encode/decode exactly; greedy NMS
prunes overlapping candidates; top-N keeps the 300 best proposals.
"""

import math
import random

from cellpipe.geometry import (
    AnchorConfig,
    BoxDelta,
    ScoredBox,
    decode,
    encode,
    generate_anchors,
    iou,
    nms,
    top_proposals,
)
from cellpipe.model import BoundingBox


def main():
    cfg = AnchorConfig()
    anchors = generate_anchors(cfg, feat_w=4, feat_h=3, image_w=640, image_h=480)
    print(f"anchor grid 4x3, scales {cfg.scales}, ratios {cfg.aspect_ratios}"
          f" -> {len(anchors)} anchors")
    first = anchors[:3]
    for a in first:
        print(f"  {a.width:7.1f} x {a.height:7.1f} centered at {a.center}")

    target = BoundingBox(100, 80, 180, 200)
    anchor = BoundingBox(90, 90, 190, 190)
    delta = encode(target, anchor)
    print(f"\nencode(target, anchor) -> tx={delta.tx:+.4f} ty={delta.ty:+.4f} "
          f"tw={delta.tw:+.4f} th={delta.th:+.4f}")
    back = decode(delta, anchor)
    print(f"decode roundtrip error: "
          f"{max(abs(p - q) for p, q in zip(target.as_tuple(), back.as_tuple())):.2e}")

    doubled = decode(BoxDelta(0, 0, math.log(2), math.log(2)), anchor)
    print(f"delta (0,0,ln2,ln2) doubles the anchor: {anchor.width}x{anchor.height}"
          f" -> {doubled.width:.0f}x{doubled.height:.0f}")

    rng = random.Random(4)
    candidates = []
    for _ in range(500):
        x0 = rng.uniform(0, 600)
        y0 = rng.uniform(0, 440)
        candidates.append(
            ScoredBox(
                BoundingBox(x0, y0, x0 + rng.uniform(10, 60), y0 + rng.uniform(10, 60)),
                round(rng.random(), 4),
            )
        )
    kept = nms(candidates, iou_threshold=0.5)
    print(f"\nNMS at 0.5 keeps {len(kept)} of {len(candidates)} candidates")
    worst = max(
        (iou(a.box, b.box) for i, a in enumerate(kept) for b in kept[i + 1 :]),
        default=0.0,
    )
    print(f"largest surviving pairwise IoU: {worst:.3f} (never above the threshold)")

    proposals = top_proposals(candidates, n=300, iou_threshold=0.7)
    print(f"top_proposals caps at {len(proposals)} boxes, scores "
          f"{proposals[0].score:.3f} >= ... >= {proposals[-1].score:.3f}")


if __name__ == "__main__":
    main()
