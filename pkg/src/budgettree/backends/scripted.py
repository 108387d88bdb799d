"""Deterministic scripted chat backend for replay tests.

A script is a JSON document ``{"rules": [...]}``. Each rule::

    {"purpose": "generator" | "critic" | "planner",   # optional
     "contains": ["substring", ...],                  # all must occur in the prompt
     "excludes": ["substring", ...],                  # none may occur
     "response": {"content": str, "tokens": int,
                  "tool_call": {"name": str, "args": {...}},   # optional
                  "finish_reason": str},                        # optional
     "repeat": false}

The first rule that matches and is not yet consumed answers the request.
Rules without ``"repeat": true`` are consumed on use.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .chat import ChatRequest, ChatResponse


class ScriptError(RuntimeError):
    pass


@dataclass
class Rule:
    response: dict
    purpose: str | None = None
    contains: tuple[str, ...] = ()
    excludes: tuple[str, ...] = ()
    repeat: bool = False
    used: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> Rule:
        def strs(key):
            v = d.get(key, ())
            return (v,) if isinstance(v, str) else tuple(v)

        return cls(
            response=d["response"],
            purpose=d.get("purpose"),
            contains=strs("contains"),
            excludes=strs("excludes"),
            repeat=bool(d.get("repeat", False)),
        )

    def matches(self, request: ChatRequest) -> bool:
        if self.used and not self.repeat:
            return False
        if self.purpose and self.purpose != request.purpose:
            return False
        text = request.text
        return all(s in text for s in self.contains) and not any(s in text for s in self.excludes)


@dataclass
class ScriptedWorld:
    rules: list[Rule]
    log: list[tuple[str, int]] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: dict) -> ScriptedWorld:
        return cls([Rule.from_dict(r) for r in data["rules"]])

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedWorld:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, request: ChatRequest) -> ChatResponse:
        return scripted_step(self, request)


def scripted_step(world: ScriptedWorld, request: ChatRequest) -> ChatResponse:
    if not any(not r.used or r.repeat for r in world.rules):
        raise ScriptError("script exhausted")
    for idx, rule in enumerate(world.rules):
        if rule.matches(request):
            rule.used = True
            world.log.append((request.purpose, idx))
            r = rule.response
            call = r.get("tool_call")
            tool_call = (call["name"], {k: str(v) for k, v in call.get("args", {}).items()}) if call else None
            return ChatResponse(
                content=r.get("content", ""),
                completion_tokens=int(r.get("tokens", 0)),
                finish_reason=r.get("finish_reason", "stop"),
                tool_call=tool_call,
            )
    raise ScriptError(f"no script rule matches {request.purpose or 'unlabelled'} prompt:\n{request.text[-400:]}")
