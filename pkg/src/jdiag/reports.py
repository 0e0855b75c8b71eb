"""Machine-readable verification reports shared by the verifiers and CLI."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import __version__

PASS = "pass"
FAIL = "fail"
ERROR = "error"


@dataclass
class CheckRecord:
    name: str
    inputs: dict
    status: str
    wall_time: float
    residual: str = ""


@dataclass
class Report:
    command: str
    config: dict
    checks: list = field(default_factory=list)
    tool_version: str = __version__

    def add(self, record: CheckRecord):
        self.checks.append(record)

    @property
    def summary(self):
        out = {PASS: 0, FAIL: 0, ERROR: 0}
        for c in self.checks:
            out[c.status] += 1
        return out

    @property
    def ok(self):
        s = self.summary
        return s[FAIL] == 0 and s[ERROR] == 0

    def to_dict(self):
        return {
            "tool_version": self.tool_version,
            "command": self.command,
            "config": self.config,
            "checks": [
                {
                    "name": c.name,
                    "inputs": c.inputs,
                    "status": c.status,
                    "residual": c.residual,
                    "wall_time": c.wall_time,
                }
                for c in self.checks
            ],
            "summary": self.summary,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def to_text(self):
        lines = ["# %s (jdiag %s)" % (self.command, self.tool_version)]
        for k in sorted(self.config):
            lines.append("config %s = %s" % (k, self.config[k]))
        for c in self.checks:
            line = "[%s] %s" % (c.status.upper(), c.name)
            if c.inputs:
                line += "  " + " ".join(
                    "%s=%s" % (k, c.inputs[k]) for k in sorted(c.inputs))
            line += "  (%.3fs)" % c.wall_time
            if c.residual:
                line += "\n    residual: %s" % c.residual
            lines.append(line)
        s = self.summary
        lines.append("summary: %d pass, %d fail, %d error"
                     % (s[PASS], s[FAIL], s[ERROR]))
        return "\n".join(lines) + "\n"
