"""Structured report documents: one per command, JSON or plain text."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .detsys import CONVENTION, VerificationReport

SCHEMA_VERSION = 1


@dataclass
class Report:
    command: list[str]
    seed: int
    tol: float
    result: dict[str, Any] = field(default_factory=dict)
    verdicts: dict[str, bool] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    error: str | None = None

    def verdict(self, name: str, ok: bool) -> bool:
        self.verdicts[name] = bool(ok)
        return ok

    def add_verification(self, name: str, rep: VerificationReport) -> None:
        self.result[name] = rep.to_dict()
        self.verdict(name, rep.passed)
        if rep.probabilistic:
            self.warnings.append(f"{name}: some zero verdicts are probabilistic (seed {rep.seed}, tol {self.tol:g})")

    @property
    def passed(self) -> bool:
        return self.error is None and all(self.verdicts.values())

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return 2
        return 0 if self.passed else 1

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "convention": CONVENTION,
            "seed": self.seed,
            "tol": self.tol,
            "result": self.result,
            "verdicts": self.verdicts,
            "pass": self.passed,
            "warnings": self.warnings,
            "error": self.error,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def to_text(self) -> str:
        lines = [f"# {' '.join(self.command)}", f"# convention: {CONVENTION}", f"# seed {self.seed}, tol {self.tol:g}"]
        if self.error:
            lines.append(f"error: {self.error}")
        lines += _render(self.result, 0)
        for name, ok in self.verdicts.items():
            lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}")
        lines += [f"warning: {w}" for w in self.warnings]
        if self.error is None:
            lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False)


def _render(obj, depth) -> list[str]:
    pad = "  " * depth
    out = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v:
                out.append(f"{pad}{k}:")
                out += _render(v, depth + 1)
            else:
                out.append(f"{pad}{k}: {v}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, dict):
                out.append(f"{pad}-")
                out += _render(v, depth + 1)
            else:
                out.append(f"{pad}- {v}")
    return out
