"""Domain types shared by every module, plus the episode and result
file formats (episode JSON, result JSONL)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable

from .errors import InvariantError, SchemaError


class Action(Enum):
    FORWARD = "FORWARD"
    LEFT_ROTATE = "LEFT_ROTATE"
    RIGHT_ROTATE = "RIGHT_ROTATE"
    STOP = "STOP"


# Canonical action order; seeded draws index into this tuple.
ACTIONS: tuple[Action, ...] = (
    Action.FORWARD,
    Action.LEFT_ROTATE,
    Action.RIGHT_ROTATE,
    Action.STOP,
)


class Origin(Enum):
    ORIGINAL = "ORIGINAL"
    TRANSLATED = "TRANSLATED"


class Termination(Enum):
    STOPPED = "STOPPED"
    DEVIATED = "DEVIATED"
    STEP_CAP = "STEP_CAP"


class Split(Enum):
    LOW = "LOW"
    HIGH = "HIGH"
    ALL = "ALL"


@dataclass(frozen=True)
class Instruction:
    """Natural-language instruction with provenance.

    `reasoning` is present (possibly empty) iff the instruction is TRANSLATED.
    `word_count` is derived from `text` when omitted.
    """

    text: str
    origin: Origin = Origin.ORIGINAL
    reasoning: str | None = None
    word_count: int | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise InvariantError("instruction.text_nonempty",
                                 "text is empty after trimming")
        n = len(self.text.split())
        if self.word_count is None:
            object.__setattr__(self, "word_count", n)
        elif self.word_count != n:
            raise InvariantError(
                "instruction.word_count",
                f"declared {self.word_count}, text has {n} tokens")
        if (self.origin is Origin.TRANSLATED) != (self.reasoning is not None):
            raise InvariantError(
                "instruction.reasoning_iff_translated",
                f"origin={self.origin.value}, reasoning "
                f"{'present' if self.reasoning is not None else 'absent'}")

    @classmethod
    def original(cls, text: str) -> "Instruction":
        return cls(text=text, origin=Origin.ORIGINAL)

    @classmethod
    def translated(cls, text: str, reasoning: str) -> "Instruction":
        return cls(text=text, origin=Origin.TRANSLATED, reasoning=reasoning)


@dataclass(frozen=True)
class Pose:
    """Planar position in meters plus heading in degrees.

    Heading convention: 0 deg points along +y, angles increase clockwise.
    Heading is normalized into [0, 360) on construction.
    """

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        h = float(self.heading) % 360.0
        if h >= 360.0:  # float modulo can round up to exactly 360.0
            h = 0.0
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "heading", h)


@dataclass(frozen=True)
class Episode:
    """One navigation task: instruction, start pose, goal point, label
    action sequence, complexity, and opaque frame references."""

    id: str
    instruction: Instruction
    start: Pose
    goal: tuple[float, float]
    label_actions: tuple[Action, ...]
    subtask_count: int
    frames: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "goal",
                           (float(self.goal[0]), float(self.goal[1])))
        object.__setattr__(self, "label_actions", tuple(self.label_actions))
        object.__setattr__(self, "frames", tuple(self.frames))
        if self.instruction.origin is not Origin.ORIGINAL:
            raise InvariantError("episode.instruction_original",
                                 f"episode {self.id}")
        if not self.label_actions or self.label_actions[-1] is not Action.STOP:
            raise InvariantError(
                "episode.terminal_stop",
                f"episode {self.id}: label_actions must end in STOP")
        if sum(1 for a in self.label_actions if a is Action.STOP) != 1:
            raise InvariantError(
                "episode.single_stop",
                f"episode {self.id}: exactly one STOP allowed")
        if self.subtask_count < 1:
            raise InvariantError("episode.subtask_count",
                                 f"episode {self.id}: must be >= 1")
        if len(self.frames) < 1:
            raise InvariantError("episode.frames_nonempty",
                                 f"episode {self.id}")

    @property
    def complexity(self) -> Split:
        """LOW for subtask_count <= 2, HIGH for >= 3."""
        return Split.LOW if self.subtask_count <= 2 else Split.HIGH


@dataclass(frozen=True)
class EpisodeResult:
    """Outcome of one episode loop."""

    episode_id: str
    predicted_actions: tuple[Action, ...]
    final_pose: Pose
    navigation_error: float
    success: bool
    termination: Termination
    similarity: float | None = None
    translated: Instruction | None = None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "predicted_actions",
                           tuple(self.predicted_actions))
        object.__setattr__(self, "flags", tuple(self.flags))
        ne = float(self.navigation_error)
        object.__setattr__(self, "navigation_error", ne)
        if not (math.isfinite(ne) and ne >= 0.0):
            raise InvariantError("result.navigation_error_nonnegative",
                                 f"got {ne!r}")
        if self.termination is Termination.STOPPED:
            if (not self.predicted_actions
                    or self.predicted_actions[-1] is not Action.STOP):
                raise InvariantError(
                    "result.stopped_implies_stop",
                    f"episode {self.episode_id}: STOPPED without final STOP")
        if self.translated is not None \
                and self.translated.origin is not Origin.TRANSLATED:
            raise InvariantError("result.translated_origin",
                                 f"episode {self.episode_id}")


# ---------------------------------------------------------------------------
# Episode file format: {"episodes": [...]}


def _need(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "missing field")
    return obj[key]


def _as_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {type(value).__name__}")
    return value


def _as_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(path, f"expected a string, got {type(value).__name__}")
    return value


def _as_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, f"expected a list, got {type(value).__name__}")
    return value


def _as_dict(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected an object, got {type(value).__name__}")
    return value


def _parse_action(value: Any, path: str) -> Action:
    name = _as_str(value, path)
    try:
        return Action(name)
    except ValueError:
        raise SchemaError(path, f"unknown action {name!r}") from None


def _parse_pose(obj: Any, path: str) -> Pose:
    d = _as_dict(obj, path)
    return Pose(
        x=_as_number(_need(d, "x", path), f"{path}.x"),
        y=_as_number(_need(d, "y", path), f"{path}.y"),
        heading=_as_number(_need(d, "heading", path), f"{path}.heading"),
    )


def _parse_episode(obj: Any, path: str) -> Episode:
    d = _as_dict(obj, path)
    ep_id = _as_str(_need(d, "id", path), f"{path}.id")
    goal = _as_dict(_need(d, "goal", path), f"{path}.goal")
    actions = tuple(
        _parse_action(a, f"{path}.label_actions[{i}]")
        for i, a in enumerate(_as_list(_need(d, "label_actions", path),
                                       f"{path}.label_actions")))
    frames = tuple(
        _as_str(f, f"{path}.frames[{i}]")
        for i, f in enumerate(_as_list(_need(d, "frames", path),
                                       f"{path}.frames")))
    try:
        return Episode(
            id=ep_id,
            instruction=Instruction.original(
                _as_str(_need(d, "instruction", path), f"{path}.instruction")),
            start=_parse_pose(_need(d, "start", path), f"{path}.start"),
            goal=(
                _as_number(_need(goal, "x", f"{path}.goal"), f"{path}.goal.x"),
                _as_number(_need(goal, "y", f"{path}.goal"), f"{path}.goal.y"),
            ),
            label_actions=actions,
            subtask_count=_as_int(_need(d, "subtask_count", path),
                                  f"{path}.subtask_count"),
            frames=frames,
        )
    except InvariantError as exc:
        raise InvariantError(exc.invariant, f"{path}: {exc}") from None


def parse_episode_file(data: bytes) -> list[Episode]:
    """Parse an episode JSON document. Order is preserved."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError("$", f"not a JSON document: {exc}") from None
    top = _as_dict(doc, "$")
    episodes = _as_list(_need(top, "episodes", "$"), "$.episodes")
    return [_parse_episode(e, f"episodes[{i}]") for i, e in enumerate(episodes)]


def episode_to_dict(episode: Episode) -> dict:
    return {
        "id": episode.id,
        "instruction": episode.instruction.text,
        "start": {"x": episode.start.x, "y": episode.start.y,
                  "heading": episode.start.heading},
        "goal": {"x": episode.goal[0], "y": episode.goal[1]},
        "label_actions": [a.value for a in episode.label_actions],
        "subtask_count": episode.subtask_count,
        "frames": list(episode.frames),
    }


def write_episodes(episodes: Iterable[Episode]) -> bytes:
    doc = {"episodes": [episode_to_dict(e) for e in episodes]}
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Result file format: JSONL, one result per line, fixed field order.


def _instruction_to_dict(ins: Instruction) -> dict:
    return {
        "text": ins.text,
        "origin": ins.origin.value,
        "reasoning": ins.reasoning,
        "word_count": ins.word_count,
    }


def _instruction_from_dict(d: dict, path: str) -> Instruction:
    obj = _as_dict(d, path)
    reasoning = obj.get("reasoning")
    if reasoning is not None:
        reasoning = _as_str(reasoning, f"{path}.reasoning")
    return Instruction(
        text=_as_str(_need(obj, "text", path), f"{path}.text"),
        origin=Origin(_as_str(_need(obj, "origin", path), f"{path}.origin")),
        reasoning=reasoning,
        word_count=_as_int(_need(obj, "word_count", path),
                           f"{path}.word_count"),
    )


def result_to_dict(result: EpisodeResult) -> dict:
    return {
        "episode_id": result.episode_id,
        "predicted_actions": [a.value for a in result.predicted_actions],
        "final_pose": {"x": result.final_pose.x, "y": result.final_pose.y,
                       "heading": result.final_pose.heading},
        "navigation_error": result.navigation_error,
        "success": result.success,
        "termination": result.termination.value,
        "similarity": result.similarity,
        "translated": (None if result.translated is None
                       else _instruction_to_dict(result.translated)),
        "flags": list(result.flags),
    }


def result_from_dict(d: dict, path: str = "$") -> EpisodeResult:
    obj = _as_dict(d, path)
    similarity = obj.get("similarity")
    if similarity is not None:
        similarity = _as_number(similarity, f"{path}.similarity")
    translated = obj.get("translated")
    if translated is not None:
        translated = _instruction_from_dict(translated, f"{path}.translated")
    success = _need(obj, "success", path)
    if not isinstance(success, bool):
        raise SchemaError(f"{path}.success", "expected a boolean")
    return EpisodeResult(
        episode_id=_as_str(_need(obj, "episode_id", path), f"{path}.episode_id"),
        predicted_actions=tuple(
            _parse_action(a, f"{path}.predicted_actions[{i}]")
            for i, a in enumerate(_as_list(
                _need(obj, "predicted_actions", path),
                f"{path}.predicted_actions"))),
        final_pose=_parse_pose(_need(obj, "final_pose", path),
                               f"{path}.final_pose"),
        navigation_error=_as_number(_need(obj, "navigation_error", path),
                                    f"{path}.navigation_error"),
        success=success,
        termination=Termination(_as_str(_need(obj, "termination", path),
                                        f"{path}.termination")),
        similarity=similarity,
        translated=translated,
        flags=tuple(_as_str(f, f"{path}.flags[{i}]")
                    for i, f in enumerate(_as_list(obj.get("flags", []),
                                                   f"{path}.flags"))),
    )


def write_results(results: Iterable[EpisodeResult]) -> bytes:
    """Serialize results as JSONL. Re-parsing yields equal values; float
    fields round-trip bit-exactly (shortest-repr JSON encoding)."""
    lines = [json.dumps(result_to_dict(r)) for r in results]
    return ("".join(line + "\n" for line in lines)).encode("utf-8")


def parse_results(data: bytes) -> list[EpisodeResult]:
    """Parse a result JSONL body. Header lines (objects carrying a
    "format" field) are skipped so whole results files parse too."""
    out = []
    for i, line in enumerate(data.decode("utf-8").splitlines()):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"line {i + 1}", f"not JSON: {exc}") from None
        if isinstance(obj, dict) and "format" in obj:
            continue
        out.append(result_from_dict(obj, f"line {i + 1}"))
    return out
