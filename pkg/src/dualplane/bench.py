"""Task-suite scoring: exact match, accuracy, per-class F1 and SMAPE.

SMAPE here is the factor-2-numerator variant with range [0, 2] (no
percentage scaling), and the 0/0 term is defined as 0. F1 with zero
predicted and zero actual positives is defined as 0. Both conventions are
deliberate and asserted by tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .errors import LengthMismatch, MissingResponse


@dataclass(frozen=True)
class BenchTask:
    task_id: str
    kind: str              # mcq | classification | regression | exact_string
    prompt: str
    gold: Any
    options: tuple = ()

    def __post_init__(self) -> None:
        if self.kind == "mcq" and len(self.options) < 2:
            raise ValueError(f"mcq task {self.task_id} needs >= 2 options")
        if self.kind == "regression":
            value = float(self.gold)
            if not math.isfinite(value):
                raise ValueError(f"regression gold for {self.task_id} must be finite")

    @classmethod
    def from_json(cls, data: dict) -> "BenchTask":
        return cls(task_id=data["task_id"], kind=data["kind"], prompt=data["prompt"],
                   gold=data["gold"], options=tuple(data.get("options", [])))


def load_suite(path: Path | str) -> list[BenchTask]:
    tasks = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            tasks.append(BenchTask.from_json(json.loads(line)))
    return tasks


def smape(gold: Sequence[float], pred: Sequence[float]) -> float:
    """Mean over i of 2|g_i - p_i| / (|g_i| + |p_i|); 0/0 terms count as 0."""
    if len(gold) != len(pred):
        raise LengthMismatch(f"{len(gold)} gold values vs {len(pred)} predictions")
    if not gold:
        raise LengthMismatch("SMAPE requires at least one pair")
    total = 0.0
    for g, p in zip(gold, pred):
        denominator = abs(g) + abs(p)
        if denominator == 0:
            continue
        total += 2.0 * abs(g - p) / denominator
    return total / len(gold)


def _normalize(value: Any) -> str:
    return str(value).strip().lower()


def _f1_per_class(golds: list[str], preds: list[str]) -> dict[str, float]:
    classes = sorted(set(golds) | set(preds))
    out = {}
    for cls in classes:
        tp = sum(1 for g, p in zip(golds, preds) if g == cls and p == cls)
        fp = sum(1 for g, p in zip(golds, preds) if g != cls and p == cls)
        fn = sum(1 for g, p in zip(golds, preds) if g == cls and p != cls)
        if tp == 0 and (fp + fn) >= 0 and (2 * tp + fp + fn) == 0:
            out[cls] = 0.0   # zero predicted and zero actual positives
            continue
        out[cls] = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
    return out


def render_fraction(correct: int, total: int) -> str:
    return f"{correct}/{total}"


@dataclass
class SuiteReport:
    mcq_correct: int = 0
    mcq_total: int = 0
    cls_correct: int = 0
    cls_total: int = 0
    f1: dict = field(default_factory=dict)
    smape_value: float | None = None
    regression_total: int = 0
    exact_match_correct: int = 0
    exact_match_total: int = 0

    def to_json(self) -> dict:
        return {
            "mcq": {"correct": self.mcq_correct, "total": self.mcq_total,
                    "accuracy": self.mcq_correct / self.mcq_total if self.mcq_total else None,
                    "rendered": render_fraction(self.mcq_correct, self.mcq_total)},
            "classification": {"correct": self.cls_correct, "total": self.cls_total,
                               "accuracy": self.cls_correct / self.cls_total
                               if self.cls_total else None,
                               "rendered": render_fraction(self.cls_correct, self.cls_total)},
            "f1_per_class": self.f1,
            "regression": {"smape": self.smape_value, "tasks": self.regression_total},
            "exact_match": {"correct": self.exact_match_correct,
                            "total": self.exact_match_total,
                            "rendered": render_fraction(self.exact_match_correct,
                                                        self.exact_match_total)},
        }

    def render_text(self) -> str:
        data = self.to_json()
        lines = ["suite report",
                 f"  mcq accuracy:            {data['mcq']['rendered']}",
                 f"  classification accuracy: {data['classification']['rendered']}"]
        for cls, value in sorted(self.f1.items()):
            lines.append(f"  f1[{cls}]: {value:.4f}")
        if self.smape_value is not None:
            lines.append(f"  regression smape:        {self.smape_value:.3f} "
                         f"({self.regression_total} tasks)")
        lines.append(f"  exact match:             {data['exact_match']['rendered']}")
        return "\n".join(lines)


def score_suite(tasks: Sequence[BenchTask], responses: dict[str, Any]) -> SuiteReport:
    """Score one response per task; ordering of tasks never changes the report."""
    for task in tasks:
        if task.task_id not in responses:
            raise MissingResponse(task.task_id)
    report = SuiteReport()
    reg_gold: list[float] = []
    reg_pred: list[float] = []
    cls_gold: list[str] = []
    cls_pred: list[str] = []
    for task in sorted(tasks, key=lambda t: t.task_id):
        response = responses[task.task_id]
        if task.kind == "mcq":
            report.mcq_total += 1
            if _normalize(response) == _normalize(task.gold):
                report.mcq_correct += 1
        elif task.kind == "classification":
            report.cls_total += 1
            gold, pred = _normalize(task.gold), _normalize(response)
            cls_gold.append(gold)
            cls_pred.append(pred)
            if gold == pred:
                report.cls_correct += 1
        elif task.kind == "regression":
            report.regression_total += 1
            reg_gold.append(float(task.gold))
            try:
                reg_pred.append(float(response))
            except (TypeError, ValueError):
                reg_pred.append(math.inf)
        elif task.kind == "exact_string":
            report.exact_match_total += 1
            if str(response).strip() == str(task.gold).strip():
                report.exact_match_correct += 1
        else:
            raise ValueError(f"unknown task kind {task.kind!r}")
    if cls_gold:
        report.f1 = _f1_per_class(cls_gold, cls_pred)
    if reg_gold:
        # inf predictions contribute the maximal per-term error of 2
        total = 0.0
        for g, p in zip(reg_gold, reg_pred):
            if math.isinf(p):
                total += 2.0
            else:
                denominator = abs(g) + abs(p)
                total += 0.0 if denominator == 0 else 2.0 * abs(g - p) / denominator
        report.smape_value = total / len(reg_gold)
    return report
