"""One full search against a scripted chat model and the fixture corpus.

The script answers once any evidence is in the prompt, searches otherwise,
and the critic scores every search +3. Prints the trace and final tree.

Run: python3 demos/scripted_run.py
"""

from __future__ import annotations

from pathlib import Path

from budgettree.backends.retrieval import LocalCorpus
from budgettree.backends.scripted import ScriptedWorld
from budgettree.config import RunConfig
from budgettree.engine import run_question

fixtures = Path(__file__).resolve().parents[1] / "tests" / "fixtures"
world = ScriptedWorld.from_file(fixtures / "toy.script.json")
corpus = LocalCorpus.from_jsonl(fixtures / "corpus.jsonl")
config = RunConfig(tool_budget=3, token_budget=600, seed=1)

result = run_question("Which river flows through Paris?", config, world, corpus, golds=["Seine"])
for event in result.trace:
    if "step" in event:
        print(f"step {event['step']}: node {event['selected']} ({event['instruction']}) -> {event['action']}, "
              f"child {event['child']} value {event['value']}, left {event['tool_left']}/{event['token_left']}")
    else:
        print(event)
print()
for line in result.tree.dump_lines():
    print(line)
print("\n" + result.report.to_json())
