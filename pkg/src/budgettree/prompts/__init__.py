"""Packaged prompt templates.

Templates are plain text. Placeholders use ``{name}`` but are filled with
``str.replace`` because the critic template contains literal JSON braces.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

TEMPLATE_NAMES = ("generator", "critic", "planner", "answer", "widen", "deepen", "backstop")

# instruction kind -> template file
INSTRUCTION_TEMPLATES = {
    "answer": "answer",
    "widen": "widen",
    "deepen": "deepen",
    "backstop_answer": "backstop",
}


@lru_cache(maxsize=None)
def load(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown prompt template {name!r}")
    text = resources.files(__name__).joinpath(f"{name}.txt").read_text(encoding="utf-8")
    return text.rstrip("\n")


def fill(template: str, **values: str) -> str:
    for key, value in values.items():
        template = template.replace("{" + key + "}", value)
    return template


def instruction_text(kind: str) -> str:
    return load(INSTRUCTION_TEMPLATES[kind])


def generator_prompt(instruction_kind: str | None) -> str:
    dynamic = instruction_text(instruction_kind) if instruction_kind else ""
    return fill(load("generator"), dynamic_instruction=dynamic).rstrip("\n")


def planner_prompt(question: str, budget_hint: str) -> str:
    return fill(load("planner"), budget_hint=budget_hint, question=question)


def critic_prompt() -> str:
    return load("critic")
