"""Reading and writing detection files.

The on-disk format is JSON Lines: one UTF-8, newline-terminated object
per frame, e.g.

    {"frame": 0, "boxes": [{"x_min": 1.0, "y_min": 2.0, "x_max": 3.0,
                            "y_max": 4.0, "class_id": 2, "score": 0.9}]}

Frame indices must be non-negative and strictly increasing.  Unknown
keys are ignored on load so richer upstream formats can be consumed
directly; nothing malformed is ever silently dropped.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Mapping, Sequence

from .errors import InvalidBox, ParseError
from .fusion import BoundingBox, BoxSource

_REQUIRED_BOX_KEYS = ("x_min", "y_min", "x_max", "y_max")


def _parse_box(raw: object, frame: int, position: int) -> BoundingBox:
    where = f"frame {frame}, box {position}"
    if not isinstance(raw, dict):
        raise InvalidBox(frame, f"{where}: expected an object, got {type(raw).__name__}")
    coords = []
    for key in _REQUIRED_BOX_KEYS:
        if key not in raw:
            raise InvalidBox(frame, f"{where}: missing {key!r}")
        value = raw[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidBox(frame, f"{where}: {key} must be numeric, got {value!r}")
        coords.append(float(value))
    x_min, y_min, x_max, y_max = coords
    if not all(math.isfinite(c) for c in coords):
        raise InvalidBox(frame, f"{where}: coordinates must be finite, got {coords}")
    if x_min >= x_max or y_min >= y_max:
        raise InvalidBox(
            frame,
            f"{where}: needs x_min < x_max and y_min < y_max, got "
            f"({x_min}, {y_min}, {x_max}, {y_max})")
    class_id = raw.get("class_id", 0)
    if isinstance(class_id, bool) or not isinstance(class_id, int):
        raise InvalidBox(frame, f"{where}: class_id must be an integer, got {class_id!r}")
    score = raw.get("score")
    if score is not None:
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise InvalidBox(frame, f"{where}: score must be numeric, got {score!r}")
        score = float(score)
        if not 0.0 <= score <= 1.0:
            raise InvalidBox(frame, f"{where}: score must be in [0, 1], got {score}")
    return BoundingBox(x_min, y_min, x_max, y_max, class_id=class_id,
                       source=BoxSource.DETECTOR, score=score)


def load_detections(path, classes: Iterable[int] | None = None
                    ) -> dict[int, list[BoundingBox]]:
    """Load a detection file into {frame index: boxes, in file order}.

    Args:
        classes: if given, only boxes whose class_id is in this set are
            kept (frames stay present even when all their boxes filter out).

    Raises:
        ParseError: malformed JSON or schema violations, with line number.
        InvalidBox: a structurally valid box with impossible geometry.
        OSError: unreadable path.
    """
    keep = None if classes is None else set(classes)
    out: dict[int, list[BoundingBox]] = {}
    last_frame = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise ParseError(lineno, "each line must hold a JSON object")
            if "frame" not in record or "boxes" not in record:
                raise ParseError(lineno, "record needs 'frame' and 'boxes' keys")
            frame = record["frame"]
            if isinstance(frame, bool) or not isinstance(frame, int) or frame < 0:
                raise ParseError(lineno, f"frame must be an integer >= 0, got {frame!r}")
            if frame <= last_frame:
                raise ParseError(
                    lineno,
                    f"frame indices must be strictly increasing, got {frame} "
                    f"after {last_frame}")
            last_frame = frame
            boxes_raw = record["boxes"]
            if not isinstance(boxes_raw, list):
                raise ParseError(lineno, "'boxes' must be an array")
            boxes = [_parse_box(b, frame, i) for i, b in enumerate(boxes_raw)]
            if keep is not None:
                boxes = [b for b in boxes if b.class_id in keep]
            out[frame] = boxes
    return out


def save_detections(detections: Mapping[int, Sequence[BoundingBox]], path) -> None:
    """Write detections as JSON Lines, frames in ascending index order.

    Inverse of :func:`load_detections`: a save/load cycle reproduces the
    input field-for-field.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for frame in sorted(detections):
            if frame < 0:
                raise ValueError(f"frame indices must be >= 0, got {frame}")
            boxes = []
            for b in detections[frame]:
                entry = {"x_min": b.x_min, "y_min": b.y_min,
                         "x_max": b.x_max, "y_max": b.y_max,
                         "class_id": b.class_id}
                if b.score is not None:
                    entry["score"] = b.score
                boxes.append(entry)
            fh.write(json.dumps({"frame": frame, "boxes": boxes},
                                sort_keys=True) + "\n")
