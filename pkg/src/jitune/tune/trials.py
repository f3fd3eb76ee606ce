"""Append-only record of embedder invocations, with JSON-lines and CSV persistence."""

from __future__ import annotations

import csv
import json
import math
import threading
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Iterator

from ..space import Configuration

PHASES = ("0-timing", "1-synopsis", "1-original", "2-refine", "random", "gp-init", "gp")
CSV_FIELDS = ("index", "phase", "graph_tag", "status", "metric", "performance", "elapsed",
              "clock", "seed", "error")


@dataclass
class Trial:
    index: int
    phase: str
    graph_tag: str
    config: Configuration
    performance: float | None
    metric: str | None
    elapsed: float
    clock: float
    seed: int
    status: str = "ok"
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok" and self.performance is not None

    @property
    def score(self) -> float:
        return self.performance if self.ok else -math.inf

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class TrialLog:
    trials: list[Trial] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.trials)

    def __iter__(self) -> Iterator[Trial]:
        return iter(self.trials)

    def __getitem__(self, i):
        return self.trials[i]

    def append(self, trial: Trial) -> None:
        with self._lock:
            if self.trials and trial.clock < self.trials[-1].clock:
                raise ValueError("trial clock went backwards")
            self.trials.append(trial)

    def select(self, graph_tag: str | None = None, phases: Iterable[str] | None = None
               ) -> list[Trial]:
        phases = set(phases) if phases is not None else None
        return [t for t in self.trials
                if (graph_tag is None or t.graph_tag == graph_tag)
                and (phases is None or t.phase in phases)]

    def best(self, graph_tag: str | None = None, phases: Iterable[str] | None = None
             ) -> Trial | None:
        """Highest-scoring successful trial; ties go to the earlier one."""
        best = None
        for t in self.select(graph_tag, phases):
            if t.ok and (best is None or t.performance > best.performance):
                best = t
        return best

    def curve(self, graph_tag: str = "original") -> list[dict[str, Any]]:
        """Best-so-far on ``graph_tag`` after every completed trial (failed ones included)."""
        rows = []
        incumbent = None
        for t in self.trials:
            if t.ok and t.graph_tag == graph_tag and (incumbent is None or t.performance > incumbent):
                incumbent = t.performance
            rows.append({"clock": t.clock, "index": t.index, "phase": t.phase,
                         "graph_tag": t.graph_tag, "performance": t.performance,
                         "incumbent": incumbent})
        return rows

    # -- persistence ---------------------------------------------------------

    def to_jsonl(self) -> str:
        return "".join(json.dumps(t.to_dict(), sort_keys=True) + "\n" for t in self.trials)

    @classmethod
    def from_jsonl(cls, text: str) -> "TrialLog":
        log = cls()
        for line in text.splitlines():
            if line.strip():
                log.trials.append(Trial(**json.loads(line)))
        return log

    def config_names(self) -> list[str]:
        names: list[str] = []
        for t in self.trials:
            for k in t.config:
                if k not in names:
                    names.append(k)
        return names

    def write_csv(self, fh) -> None:
        names = self.config_names()
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(CSV_FIELDS) + [f"cfg.{n}" for n in names])
        for t in self.trials:
            row = [_cell(getattr(t, f)) for f in CSV_FIELDS]
            row += [_cell(t.config.get(n)) for n in names]
            writer.writerow(row)

    @classmethod
    def read_csv(cls, fh) -> "TrialLog":
        reader = csv.DictReader(fh)
        log = cls()
        for row in reader:
            config = {k[4:]: _parse_cell(v) for k, v in row.items()
                      if k.startswith("cfg.") and v != ""}
            log.trials.append(Trial(
                index=int(row["index"]), phase=row["phase"], graph_tag=row["graph_tag"],
                config=config, performance=_parse_cell(row["performance"]),
                metric=row["metric"] or None, elapsed=float(row["elapsed"]),
                clock=float(row["clock"]), seed=int(row["seed"]), status=row["status"],
                error=row["error"] or None))
        return log


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text
