"""Demonstration datasets and their on-disk JSON-Lines format.

A recording is one header line followed by one sample per line:

    {"format": "cobt-demo/1", "rate_hz": 100.0, "meta": {...}}
    {"t": 0.0, "ee": [x,y,z,qw,qx,qy,qz], "g": 0.0, "objects": {"cube": [...]}}

Quaternions are scalar-first (noted in the header meta); the loader forces
qw >= 0 so orientation training is deterministic.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping

import numpy as np

from .errors import ValidationError
from .geometry import Pose7

FORMAT_NAME = "cobt-demo/1"
MIN_SAMPLES = 10
SPACING_TOL = 0.20  # nominal sample spacing within +-20% of 1/rate_hz


@dataclass(frozen=True)
class DemoSample:
    """One time step: end-effector pose, gripper opening, object poses."""

    t: float
    ee: Pose7
    gripper: float  # 0 = fully open, 1 = fully closed
    objects: Mapping[str, Pose7]

    def __post_init__(self):
        if not 0.0 <= self.gripper <= 1.0:
            raise ValidationError(f"gripper value {self.gripper} outside [0, 1]")


class Demonstration:
    """Validated, immutable time series of DemoSamples."""

    def __init__(self, samples: Iterable[DemoSample], sample_rate_hz: float, meta: dict | None = None):
        samples = list(samples)
        if len(samples) < MIN_SAMPLES:
            raise ValidationError(
                f"demonstration too short: {len(samples)} samples, need >= {MIN_SAMPLES}"
            )
        if sample_rate_hz <= 0:
            raise ValidationError(f"sample_rate_hz must be positive, got {sample_rate_hz}")
        key_set = frozenset(samples[0].objects)
        for i, s in enumerate(samples):
            if frozenset(s.objects) != key_set:
                raise ValidationError(
                    f"inconsistent object set at sample {i}: "
                    f"{sorted(s.objects)} != {sorted(key_set)}"
                )
            if i > 0 and s.t <= samples[i - 1].t:
                raise ValidationError(
                    f"non-monotonic time at sample {i}: t={s.t} after t={samples[i - 1].t}"
                )
        dts = np.diff([s.t for s in samples])
        nominal = float(np.median(dts))
        expected = 1.0 / sample_rate_hz
        if abs(nominal - expected) > SPACING_TOL * expected:
            raise ValidationError(
                f"nominal sample spacing {nominal:.5f}s deviates more than "
                f"{SPACING_TOL:.0%} from 1/rate = {expected:.5f}s"
            )
        self.samples: tuple[DemoSample, ...] = tuple(samples)
        self.sample_rate_hz = float(sample_rate_hz)
        self.meta = dict(meta or {})
        self._arrays: dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def object_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.samples[0].objects))

    @property
    def duration(self) -> float:
        return self.samples[-1].t - self.samples[0].t

    def _cached(self, key: str, build) -> np.ndarray:
        if key not in self._arrays:
            arr = build()
            arr.setflags(write=False)
            self._arrays[key] = arr
        return self._arrays[key]

    def times(self) -> np.ndarray:
        return self._cached("t", lambda: np.array([s.t for s in self.samples]))

    def ee_positions(self) -> np.ndarray:
        return self._cached("ee_p", lambda: np.array([s.ee.p for s in self.samples]))

    def ee_quats(self) -> np.ndarray:
        return self._cached("ee_q", lambda: np.array([s.ee.q for s in self.samples]))

    def gripper_values(self) -> np.ndarray:
        return self._cached("g", lambda: np.array([s.gripper for s in self.samples]))

    def object_positions(self, obj: str) -> np.ndarray:
        if obj not in self.samples[0].objects:
            raise ValidationError(f"unknown object id {obj!r}")
        return self._cached(f"obj_p:{obj}", lambda: np.array([s.objects[obj].p for s in self.samples]))

    def object_pose(self, obj: str, index: int) -> Pose7:
        if obj not in self.samples[0].objects:
            raise ValidationError(f"unknown object id {obj!r}")
        return self.samples[index].objects[obj]


def _parse_pose(values, line_no: int, what: str) -> Pose7:
    if not isinstance(values, list) or len(values) != 7:
        raise ValidationError(f"line {line_no}: {what} must be a 7-element array")
    try:
        return Pose7.from_list(values).canonical()
    except ValueError as exc:
        raise ValidationError(f"line {line_no}: bad {what}: {exc}") from exc


def _open_source(source) -> IO[str]:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return io.StringIO(data)
    raise TypeError(f"cannot read demonstration from {type(source)!r}")


def load_demonstration(source) -> Demonstration:
    """Parse and validate a JSON-Lines recording from a path, stream or bytes."""
    fh = _open_source(source)
    try:
        header_line = fh.readline()
        if not header_line.strip():
            raise ValidationError("line 1: empty file, expected header")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line 1: malformed header: {exc}") from exc
        if header.get("format") != FORMAT_NAME:
            raise ValidationError(
                f"line 1: unsupported format {header.get('format')!r}, expected {FORMAT_NAME!r}"
            )
        rate = header.get("rate_hz")
        if not isinstance(rate, (int, float)) or rate <= 0:
            raise ValidationError(f"line 1: rate_hz must be a positive number, got {rate!r}")
        meta = header.get("meta", {})

        samples = []
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"line {line_no}: malformed record: {exc}") from exc
            for key in ("t", "ee", "g", "objects"):
                if key not in rec:
                    raise ValidationError(f"line {line_no}: missing field {key!r}")
            ee = _parse_pose(rec["ee"], line_no, "ee pose")
            g = rec["g"]
            if not isinstance(g, (int, float)) or not 0.0 <= g <= 1.0:
                raise ValidationError(f"line {line_no}: gripper value {g!r} outside [0, 1]")
            objects = {
                obj_id: _parse_pose(vals, line_no, f"object {obj_id!r} pose")
                for obj_id, vals in rec["objects"].items()
            }
            samples.append(DemoSample(t=float(rec["t"]), ee=ee, gripper=float(g), objects=objects))
    finally:
        fh.close()

    try:
        return Demonstration(samples, sample_rate_hz=float(rate), meta=meta)
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def dump_demonstration(demo: Demonstration) -> str:
    """Serialize back to the JSON-Lines format (deterministic key order)."""
    meta = dict(demo.meta)
    meta.setdefault("quat_order", "wxyz")
    lines = [
        json.dumps(
            {"format": FORMAT_NAME, "rate_hz": demo.sample_rate_hz, "meta": meta},
            sort_keys=True,
        )
    ]
    for s in demo.samples:
        lines.append(
            json.dumps(
                {
                    "t": s.t,
                    "ee": s.ee.to_list(),
                    "g": s.gripper,
                    "objects": {k: v.to_list() for k, v in sorted(s.objects.items())},
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + "\n"


def save_demonstration(demo: Demonstration, path) -> None:
    Path(path).write_text(dump_demonstration(demo), encoding="utf-8")
