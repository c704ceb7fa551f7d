"""Annotation schema for hand-verb-object interaction frames.

Frames carry interaction instances (which hand(s), verb, object, boxes) plus
optional per-side 21-joint hand poses. A dataset bundles verb/object
vocabularies with train and test frame lists and round-trips losslessly
through a canonical JSON form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .boxes import BBox, covered_fraction
from .errors import ParseError, ValidationError

NUM_JOINTS = 21
RARE_THRESHOLD = 100

OCCLUSION_BUCKET_EDGES = (0.2, 0.4, 0.6, 0.8)
OCCLUSION_BUCKET_LABELS = ("0~0.2", "0.2~0.4", "0.4~0.6", "0.6~0.8", "0.8~1")


class HandSide(Enum):
    LEFT = "L"
    RIGHT = "R"


class HandInvolvement(Enum):
    RIGHT_ONLY = "R"
    LEFT_ONLY = "L"
    BOTH = "LR"

    @property
    def sides(self) -> tuple[HandSide, ...]:
        if self is HandInvolvement.RIGHT_ONLY:
            return (HandSide.RIGHT,)
        if self is HandInvolvement.LEFT_ONLY:
            return (HandSide.LEFT,)
        return (HandSide.LEFT, HandSide.RIGHT)


@dataclass(frozen=True)
class HandPose:
    """21 hand joints as (x, y) pairs in normalized image coordinates."""

    joints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.joints) != NUM_JOINTS:
            raise ValidationError(f"hand pose needs {NUM_JOINTS} joints, got {len(self.joints)}")
        for x, y in self.joints:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValidationError("non-finite joint coordinate in hand pose")

    def flat(self) -> tuple[float, ...]:
        return tuple(v for xy in self.joints for v in xy)


@dataclass(frozen=True)
class EgoHOIInstance:
    """One interaction: hand(s) + verb + active object, with boxes."""

    involvement: HandInvolvement
    verb_id: int
    object_id: int
    hand_boxes: tuple[tuple[HandSide, BBox], ...]
    object_box: BBox

    def __post_init__(self):
        sides = tuple(side for side, _ in self.hand_boxes)
        if len(set(sides)) != len(sides):
            raise ValidationError("duplicate hand side in instance")
        if set(sides) != set(self.involvement.sides):
            raise ValidationError(
                f"hand boxes {sorted(s.value for s in sides)} do not match "
                f"involvement {self.involvement.value}"
            )

    def hand_box(self, side: HandSide) -> Optional[BBox]:
        for s, box in self.hand_boxes:
            if s is side:
                return box
        return None


@dataclass(frozen=True)
class TripletCategory:
    """Evaluation category: (involvement, verb, object), compared component-wise."""

    involvement: HandInvolvement
    verb_id: int
    object_id: int

    @staticmethod
    def of(instance: EgoHOIInstance) -> "TripletCategory":
        return TripletCategory(instance.involvement, instance.verb_id, instance.object_id)


@dataclass(frozen=True)
class FrameAnnotation:
    frame_id: str
    instances: tuple[EgoHOIInstance, ...]
    poses: Mapping[HandSide, HandPose] = field(default_factory=dict)

    def pose(self, side: HandSide) -> Optional[HandPose]:
        return self.poses.get(side)


@dataclass(frozen=True)
class Dataset:
    verb_names: tuple[str, ...]
    object_names: tuple[str, ...]
    train: tuple[FrameAnnotation, ...]
    test: tuple[FrameAnnotation, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for frame in self.train + self.test:
            if frame.frame_id in seen:
                raise ValidationError(f"duplicate frame_id {frame.frame_id!r}")
            seen.add(frame.frame_id)
            for inst in frame.instances:
                if not (0 <= inst.verb_id < len(self.verb_names)):
                    raise ValidationError(
                        f"frame {frame.frame_id!r}: verb_id {inst.verb_id} out of range"
                    )
                if not (0 <= inst.object_id < len(self.object_names)):
                    raise ValidationError(
                        f"frame {frame.frame_id!r}: object_id {inst.object_id} out of range"
                    )

    @property
    def num_verbs(self) -> int:
        return len(self.verb_names)

    @property
    def num_objects(self) -> int:
        return len(self.object_names)

    def categories(self) -> tuple[TripletCategory, ...]:
        """All triplet categories observed across train and test, sorted."""
        cats = {
            TripletCategory.of(inst)
            for frame in self.train + self.test
            for inst in frame.instances
        }
        return tuple(sorted(cats, key=lambda c: (c.involvement.value, c.verb_id, c.object_id)))


@dataclass(frozen=True)
class CooccurrenceMatrix:
    """Training-set instance counts per (verb, object) pair."""

    counts: tuple[tuple[int, ...], ...]

    def count(self, verb_id: int, object_id: int) -> int:
        return self.counts[verb_id][object_id]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


def occlusion_ratio(obj: BBox, occluders: Sequence[BBox]) -> float:
    """Fraction of the object box area covered by the union of the occluders."""
    return covered_fraction(obj, occluders)


def occlusion_bucket(ratio: float) -> int:
    """Bucket index for an occlusion ratio; buckets are half-open on the
    right except the last, which is [0.8, 1.0]."""
    if not (0.0 <= ratio <= 1.0):
        raise ValidationError(f"occlusion ratio {ratio} outside [0, 1]")
    for i, edge in enumerate(OCCLUSION_BUCKET_EDGES):
        if ratio < edge:
            return i
    return len(OCCLUSION_BUCKET_EDGES)


def instance_occluders(frame: FrameAnnotation, instance: EgoHOIInstance) -> list[BBox]:
    """Occluders for one instance's object: every hand box in the frame plus
    every other instance's object box."""
    occ = [box for inst in frame.instances for _, box in inst.hand_boxes]
    occ.extend(inst.object_box for inst in frame.instances if inst is not instance)
    return occ


def instance_occlusion_bucket(frame: FrameAnnotation, instance: EgoHOIInstance) -> int:
    return occlusion_bucket(occlusion_ratio(instance.object_box, instance_occluders(frame, instance)))


def build_cooccurrence(
    train: Iterable[FrameAnnotation], num_verbs: int, num_objects: int
) -> CooccurrenceMatrix:
    counts = [[0] * num_objects for _ in range(num_verbs)]
    for frame in train:
        for inst in frame.instances:
            counts[inst.verb_id][inst.object_id] += 1
    return CooccurrenceMatrix(tuple(tuple(row) for row in counts))


def partition_rare(
    dataset: Dataset, threshold: int = RARE_THRESHOLD
) -> tuple[frozenset[TripletCategory], frozenset[TripletCategory]]:
    """Split the observed categories into (rare, non_rare) by training count.

    A category is rare iff it occurs fewer than `threshold` times in the
    training split; categories seen only in the test split count zero.
    """
    train_counts: dict[TripletCategory, int] = {}
    for frame in dataset.train:
        for inst in frame.instances:
            cat = TripletCategory.of(inst)
            train_counts[cat] = train_counts.get(cat, 0) + 1
    rare, non_rare = set(), set()
    for cat in dataset.categories():
        if train_counts.get(cat, 0) < threshold:
            rare.add(cat)
        else:
            non_rare.add(cat)
    return frozenset(rare), frozenset(non_rare)


# --- JSON serialization -----------------------------------------------------
#
# Top level: {"verbs": [...], "objects": [...], "train": [frame], "test": [frame]}
# frame: {"id": str, "instances": [...], "poses": {"L": [[x,y]*21]?, "R": ...?}}
# instance: {"involvement": "L"|"R"|"LR", "verb": int, "object": int,
#            "hand_boxes": [{"side": "L"|"R", "box": [x1,y1,x2,y2]}],
#            "object_box": [x1,y1,x2,y2]}


def _require(obj: Mapping, key: str, where: str):
    if key not in obj:
        raise ParseError(f"missing field {key!r} in {where}")
    return obj[key]


def _parse_box(raw, where: str) -> BBox:
    if not (isinstance(raw, list) and len(raw) == 4):
        raise ParseError(f"field 'box' in {where} must be a list of 4 reals")
    try:
        return BBox(*(float(v) for v in raw))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad box in {where}: {exc}") from exc


def _parse_instance(raw: Mapping, where: str) -> EgoHOIInstance:
    inv_code = _require(raw, "involvement", where)
    try:
        involvement = HandInvolvement(inv_code)
    except ValueError as exc:
        raise ParseError(f"unknown involvement {inv_code!r} in {where}") from exc
    hand_boxes = []
    for i, hb in enumerate(_require(raw, "hand_boxes", where)):
        hb_where = f"{where}.hand_boxes[{i}]"
        try:
            side = HandSide(_require(hb, "side", hb_where))
        except ValueError as exc:
            raise ParseError(f"unknown hand side in {hb_where}") from exc
        hand_boxes.append((side, _parse_box(_require(hb, "box", hb_where), hb_where)))
    return EgoHOIInstance(
        involvement=involvement,
        verb_id=int(_require(raw, "verb", where)),
        object_id=int(_require(raw, "object", where)),
        hand_boxes=tuple(hand_boxes),
        object_box=_parse_box(_require(raw, "object_box", where), where),
    )


def _parse_frame(raw: Mapping, where: str) -> FrameAnnotation:
    frame_id = _require(raw, "id", where)
    if not isinstance(frame_id, str):
        raise ParseError(f"frame id must be a string in {where}")
    instances = tuple(
        _parse_instance(inst, f"frame {frame_id!r} instance[{i}]")
        for i, inst in enumerate(_require(raw, "instances", where))
    )
    poses: dict[HandSide, HandPose] = {}
    for side_code, joints in raw.get("poses", {}).items():
        try:
            side = HandSide(side_code)
        except ValueError as exc:
            raise ParseError(f"unknown pose side {side_code!r} in frame {frame_id!r}") from exc
        poses[side] = HandPose(tuple((float(x), float(y)) for x, y in joints))
    return FrameAnnotation(frame_id=frame_id, instances=instances, poses=poses)


def dataset_from_json(text: str) -> Dataset:
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    verbs = tuple(_require(raw, "verbs", "dataset"))
    objects = tuple(_require(raw, "objects", "dataset"))
    train = tuple(
        _parse_frame(f, f"train[{i}]") for i, f in enumerate(_require(raw, "train", "dataset"))
    )
    test = tuple(
        _parse_frame(f, f"test[{i}]") for i, f in enumerate(_require(raw, "test", "dataset"))
    )
    return Dataset(verb_names=verbs, object_names=objects, train=train, test=test)


def _reject_constant(name: str):
    raise ParseError(f"non-finite number {name!r} not permitted")


def parse_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return dataset_from_json(fh.read())


def _frame_to_json(frame: FrameAnnotation) -> dict:
    out: dict = {
        "id": frame.frame_id,
        "instances": [
            {
                "involvement": inst.involvement.value,
                "verb": inst.verb_id,
                "object": inst.object_id,
                "hand_boxes": [
                    {"side": side.value, "box": list(box.as_tuple())}
                    for side, box in inst.hand_boxes
                ],
                "object_box": list(inst.object_box.as_tuple()),
            }
            for inst in frame.instances
        ],
    }
    if frame.poses:
        out["poses"] = {
            side.value: [[x, y] for x, y in frame.poses[side].joints]
            for side in (HandSide.LEFT, HandSide.RIGHT)
            if side in frame.poses
        }
    return out


def dataset_to_json(dataset: Dataset) -> str:
    """Canonical JSON form: fixed key order, 2-space indent, no NaN/Inf."""
    raw = {
        "verbs": list(dataset.verb_names),
        "objects": list(dataset.object_names),
        "train": [_frame_to_json(f) for f in dataset.train],
        "test": [_frame_to_json(f) for f in dataset.test],
    }
    return json.dumps(raw, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def serialize_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dataset_to_json(dataset))
