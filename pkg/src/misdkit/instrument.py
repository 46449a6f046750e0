"""Forward/backward pass accounting.

Counts are per example: a batched pass over n rows adds n to the tally, which
is the unit the efficiency comparisons are stated in (passes per example).
Counters are monotone within a run and reset by creating a fresh instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class PassCounter:
    forwards: int = 0
    backwards: int = 0
    wall_time: float = 0.0

    def add_forward(self, n: int = 1) -> None:
        self.forwards += n

    def add_backward(self, n: int = 1) -> None:
        self.backwards += n
