"""Pluggable decision policy: the Reasoner interface and its scripted
implementation.

The engine never requires a language model. The scripted reasoner is a rule
table (regex patterns, plan templates, per-task action scripts) and is a
pure function of its inputs, which is what makes whole-session replay
possible. A remote-model adapter can implement the same protocol but is
excluded from the deterministic suites.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Protocol, Sequence

from .types import AgentRole, ToolCategory


class Mode(str, Enum):
    DIRECT = "direct"
    SIMPLE = "simple"
    COMPLEX = "complex"


@dataclass(frozen=True)
class PlanStep:
    description: str
    role: AgentRole
    required_categories: frozenset[ToolCategory] = frozenset()
    skill: str | None = None        # bound skill graph, when the step runs one
    script: tuple = ()              # scripted episode actions otherwise

    def to_json(self) -> dict:
        return {"description": self.description, "role": self.role.value,
                "required_categories": sorted(c.value for c in self.required_categories),
                "skill": self.skill}


@dataclass
class Plan:
    steps: list[PlanStep]
    budget_k: int

    def __post_init__(self) -> None:
        if not 1 <= len(self.steps) <= self.budget_k:
            raise ValueError(f"plan must hold between 1 and {self.budget_k} steps")


@dataclass(frozen=True)
class ReflectDecision:
    value: str                      # SUFFICIENT_INFO | REPLAN | CONTINUE
    new_steps: tuple[PlanStep, ...] = ()

    def __post_init__(self) -> None:
        if self.value == "REPLAN" and not self.new_steps:
            raise ValueError("REPLAN requires at least one new step")

    @classmethod
    def sufficient(cls) -> "ReflectDecision":
        return cls("SUFFICIENT_INFO")

    @classmethod
    def replan(cls, steps: Sequence[PlanStep]) -> "ReflectDecision":
        return cls("REPLAN", tuple(steps))

    @classmethod
    def cont(cls) -> "ReflectDecision":
        return cls("CONTINUE")


class Reasoner(Protocol):
    def classify(self, query: str) -> Mode | None: ...
    def plan(self, query: str, budget_k: int) -> Plan: ...
    def reflect(self, query: str, completed: list[str], remaining: list[PlanStep]) -> ReflectDecision: ...
    def synthesize(self, query: str, completed: list[str]) -> str: ...
    def worker_step(self, task: str, visible_tools: list, context: list) -> dict | None: ...


DISCOVERY_STAGES = [
    ("identify and validate disease targets", AgentRole.RESEARCH_WORKER,
     frozenset({ToolCategory.SEARCH}), "ti"),
    ("identify hits against the prepared structure", AgentRole.COMPUTATION_WORKER,
     frozenset({ToolCategory.COMPUTATION}), "hi"),
    ("expand hits into leads with safety filtration", AgentRole.COMPUTATION_WORKER,
     frozenset({ToolCategory.COMPUTATION}), "h2l"),
    ("optimize leads into final ranked candidates", AgentRole.COMPUTATION_WORKER,
     frozenset({ToolCategory.COMPUTATION}), "lo"),
]


def discovery_plan_steps() -> list[PlanStep]:
    return [PlanStep(description=d, role=r, required_categories=c, skill=s)
            for d, r, c, s in DISCOVERY_STAGES]


@dataclass
class ScriptedReasoner:
    """Rule-table reasoner: deterministic, model-free.

    Rules document schema (see data/reasoner_rules.json):
      classify:       [{pattern, mode}]
      direct_answers: [{pattern, answer}]
      simple_tasks:   [{pattern, role, actions: [...]}]
      reflect:        {sufficient_marker}
    Complex queries that match a shipped scenario get the four-stage
    discovery plan.
    """

    rules: dict = field(default_factory=dict)
    scenario_patterns: list[str] = field(default_factory=list)

    @classmethod
    def from_file(cls, path: Path | str | None = None,
                  scenario_patterns: list[str] | None = None) -> "ScriptedReasoner":
        if path is None:
            text = resources.files("dualplane").joinpath(
                "data/reasoner_rules.json").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return cls(rules=json.loads(text),
                   scenario_patterns=list(scenario_patterns or []))

    # -- intent ---------------------------------------------------------

    def classify(self, query: str) -> Mode | None:
        for rule in self.rules.get("classify", []):
            if re.search(rule["pattern"], query):
                return Mode(rule["mode"])
        return None

    # -- planning ---------------------------------------------------------

    def _simple_task(self, query: str) -> dict | None:
        for rule in self.rules.get("simple_tasks", []):
            if re.search(rule["pattern"], query):
                return rule
        return None

    def plan(self, query: str, budget_k: int) -> Plan:
        # any end-to-end design request gets the staged discovery plan; with
        # no matching fixture the first stage surfaces the empty retrieval
        if self.classify(query) is Mode.COMPLEX:
            steps = discovery_plan_steps()[:budget_k]
            return Plan(steps=steps, budget_k=budget_k)
        task = self._simple_task(query)
        if task is not None:
            step = PlanStep(
                description=task.get("description", query),
                role=AgentRole(task.get("role", "ComputationWorker")),
                required_categories=frozenset(
                    ToolCategory(c) for c in task.get("categories", ["computation"])),
                script=tuple(json.dumps(a, sort_keys=True) for a in task.get("actions", [])),
            )
            return Plan(steps=[step], budget_k=max(budget_k, 1))
        step = PlanStep(description=f"research: {query}",
                        role=AgentRole.RESEARCH_WORKER,
                        required_categories=frozenset({ToolCategory.SEARCH}),
                        script=(json.dumps({"kind": "search", "query": query},
                                           sort_keys=True),
                                json.dumps({"kind": "execute", "from_search": 0},
                                           sort_keys=True),
                                json.dumps({"kind": "final", "answer": "research summary"},
                                           sort_keys=True)))
        return Plan(steps=[step], budget_k=max(budget_k, 1))

    # -- reflection ---------------------------------------------------------

    def reflect(self, query: str, completed: list[str],
                remaining: list[PlanStep]) -> ReflectDecision:
        marker = self.rules.get("reflect", {}).get("sufficient_marker", "FINAL_CANDIDATES")
        if completed and marker in completed[-1]:
            return ReflectDecision.sufficient()
        return ReflectDecision.cont()

    # -- synthesis ---------------------------------------------------------

    def synthesize(self, query: str, completed: list[str]) -> str:
        for rule in self.rules.get("direct_answers", []):
            if re.search(rule["pattern"], query):
                return rule["answer"]
        if not completed:
            return f"No retrieval rule matched; unable to answer directly: {query}"
        lines = [f"Synthesis for: {query}"]
        for i, summary in enumerate(completed, start=1):
            first = summary.splitlines()[0] if summary else ""
            lines.append(f"  step {i}: {first[:240]}")
        return "\n".join(lines)

    # -- worker policy ---------------------------------------------------------

    def worker_step(self, task: str, visible_tools: list, context: list) -> dict | None:
        """Next scripted action for a worker episode.

        The script index is the count of prior action entries in the worker's
        private context, so this stays a pure function of its inputs.
        """
        script: tuple = ()
        match = re.match(r"^script:(.*)$", task, flags=re.S)
        if match:   # an explicit script always wins over pattern rules
            script = tuple(json.dumps(a, sort_keys=True)
                           for a in json.loads(match.group(1)))
        else:
            for rule in self.rules.get("simple_tasks", []):
                if re.search(rule["pattern"], task):
                    script = tuple(json.dumps(a, sort_keys=True)
                                   for a in rule.get("actions", []))
                    break
        if not script:
            return None
        consumed = sum(1 for entry in context if entry.role == "action")
        if consumed >= len(script):
            return None
        return json.loads(script[consumed])
