"""Exception types shared across the package."""

from __future__ import annotations


class AravlnError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(AravlnError):
    """An input document does not match the expected schema.

    `path` points at the offending field, e.g. ``episodes[3].start.x``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class InvariantError(AravlnError):
    """A domain invariant was violated. `invariant` names the rule."""

    def __init__(self, invariant: str, message: str = ""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}" if message else invariant)


class BackendError(AravlnError):
    """Completion backend failure.

    `kind` is one of: transport, auth, rate_limit, malformed_response,
    replay_miss.
    """

    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(f"[{kind}] {message}")


class ReplayMiss(BackendError):
    """A request was never recorded; signals prompt drift."""

    def __init__(self, message: str):
        super().__init__("replay_miss", message)


class ParseError(AravlnError):
    """Model output violated the required format. Carries the raw output."""

    def __init__(self, message: str, raw: str = ""):
        self.raw = raw
        super().__init__(message)


class LengthError(AravlnError):
    """A sequence is too short for the requested computation."""


class EmptyInputError(AravlnError):
    """An operation received an empty input it cannot score."""


class EpisodeAborted(AravlnError):
    """A policy failed mid-episode. Carries the partial trajectory."""

    def __init__(self, episode_id: str, cause: BaseException, actions, poses):
        self.episode_id = episode_id
        self.cause = cause
        self.partial_actions = tuple(actions)
        self.partial_poses = tuple(poses)
        super().__init__(f"episode {episode_id} aborted after "
                         f"{len(self.partial_actions)} actions: {cause}")
