"""Activity file reading and writing.

One activity per line::

    activity_id<TAB>label<TAB>action_id:start:end;action_id:start:end;...

Start and end are integer milliseconds; with ``seconds=True`` they are
decimal seconds, converted to milliseconds rounding half to even.  Lines
starting with ``#`` and blank lines are ignored.  Labels are strings, mapped
to class indices in order of first appearance; an empty label or ``?`` marks
an unlabeled activity.
"""

from __future__ import annotations

import os
from typing import Iterable, List, Optional, Sequence, TextIO, Tuple, Union

from .errors import ParseError, ValidationError
from .intervals import Action, Activity, normalize_activity, seconds_to_ticks

__all__ = ["parse_activities", "read_activities", "format_activities", "write_activities"]

UNLABELED = ("", "?")


def _ticks(text: str, seconds: bool) -> int:
    if seconds:
        return seconds_to_ticks(text)
    return int(text)


def parse_activities(
    lines: Union[str, Iterable[str]],
    *,
    seconds: bool = False,
    label_names: Optional[Sequence[str]] = None,
    path=None,
) -> Tuple[List[Activity], List[str]]:
    """Parse activity lines, returning activities and the label names.

    Passing `label_names` (for instance from a trained model) seeds the
    label-to-index map so indices stay consistent with it; unseen labels
    are appended.
    """
    if isinstance(lines, str):
        lines = lines.splitlines()
    names: List[str] = list(label_names or [])
    index = {n: i for i, n in enumerate(names)}
    activities = []
    seen_ids = set()
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(parts)}", lineno, path)
        act_id, label, body = parts
        if act_id in seen_ids:
            raise ParseError(f"duplicate activity id {act_id!r}", lineno, path)
        seen_ids.add(act_id)
        actions = []
        for token in body.split(";"):
            token = token.strip()
            if not token:
                continue
            pieces = token.split(":")
            if len(pieces) != 3:
                raise ParseError(f"malformed action {token!r}; expected id:start:end", lineno, path)
            try:
                actions.append(Action(_ticks(pieces[1], seconds), _ticks(pieces[2], seconds), int(pieces[0])))
            except ValidationError as exc:
                raise ParseError(str(exc), lineno, path) from None
            except ValueError:
                raise ParseError(f"non-integer field in action {token!r}", lineno, path) from None
        if not actions:
            raise ParseError(f"activity {act_id!r} has no actions", lineno, path)
        label = label.strip()
        y = None
        if label not in UNLABELED:
            if label not in index:
                index[label] = len(names)
                names.append(label)
            y = index[label]
        activities.append(normalize_activity(actions, label=y, activity_id=act_id))
    if not activities:
        raise ParseError("no activities found", path=path)
    return activities, names


def read_activities(path, **kwargs) -> Tuple[List[Activity], List[str]]:
    with open(path, encoding="utf-8") as fh:
        return parse_activities(fh, path=path, **kwargs)


def format_activities(activities: Sequence[Activity], label_names: Optional[Sequence[str]] = None) -> str:
    out = []
    for act in activities:
        if act.label is None:
            label = "?"
        elif label_names is not None:
            label = label_names[act.label]
        else:
            label = str(act.label)
        body = ";".join(f"{a.action_id}:{a.start}:{a.end}" for a in act.actions)
        out.append(f"{act.activity_id}\t{label}\t{body}\n")
    return "".join(out)


def write_activities(activities, fh: Union[TextIO, str, os.PathLike], label_names=None) -> None:
    text = format_activities(activities, label_names)
    if isinstance(fh, (str, os.PathLike)):
        with open(fh, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        fh.write(text)
