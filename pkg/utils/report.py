import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Sequence

from tioa import __version__
from tioa.analysis import CheckOutcome, ParamOutcome
from tioa.model import Tioa
from tioa.parser import serialize_model


def model_identity(automaton: Tioa, reference: str) -> dict[str, Any]:
    """Name, reference and content hash of a model; the hash is taken over its serialized form."""
    digest = hashlib.sha256(serialize_model(automaton).encode("utf-8")).hexdigest()
    return {"name": automaton.name, "reference": reference, "sha256": digest}


def strip_timing(data: Any) -> Any:
    """Copy of a report document without wall-clock fields."""
    if isinstance(data, dict):
        return {k: strip_timing(v) for k, v in data.items() if not k.endswith("wall_time")}
    if isinstance(data, list):
        return [strip_timing(v) for v in data]
    return data


@dataclass
class Report:
    command: str
    analysis: str
    models: list[dict[str, Any]] = field(default_factory=list)
    result: dict[str, Any] = field(default_factory=dict)
    trace: list[dict[str, Any]] = field(default_factory=list)
    statistics: dict[str, Any] = field(default_factory=dict)
    rows: list[dict[str, Any]] = field(default_factory=list)
    exit_code: int = 0
    message: str = ""
    version: str = __version__

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "analysis": self.analysis,
            "models": self.models,
            "result": self.result,
            "trace": self.trace,
            "statistics": self.statistics,
            "rows": self.rows,
            "exit_code": self.exit_code,
            "message": self.message,
            "version": self.version,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def check_report(command: str, outcome: CheckOutcome, models: Sequence[tuple[Tioa, str]]) -> Report:
    return Report(
        command=command,
        analysis=outcome.check.value,
        models=[model_identity(a, ref) for a, ref in models],
        result=outcome.to_dict(),
        statistics={"states_explored": outcome.states},
        exit_code=0 if outcome.holds else 1,
        message=f"{outcome.check.value} of {outcome.model} {'holds' if outcome.holds else 'fails'}",
    )


def param_report(outcome: ParamOutcome, models: Sequence[tuple[Tioa, str]]) -> Report:
    trace = []
    for run in outcome.runs:
        trace += [it.to_dict() for it in run.result.iterations]
    result = outcome.to_dict()
    statistics = {
        run.method.value: {
            "games_solved": run.result.games_solved,
            "won_games": run.result.won_games,
            "wall_time": round(run.result.seconds, 6),
        }
        for run in outcome.runs
    }
    messages = [
        run.message or f"{run.method.value}: delta in [{run.result.delta_good}, {run.result.delta_bad}]" for run in outcome.runs
    ]
    return Report(
        command="param",
        analysis=outcome.check.value,
        models=[model_identity(a, ref) for a, ref in models],
        result=result,
        trace=trace,
        statistics=statistics,
        exit_code=outcome.exit_code,
        message="; ".join(messages),
    )


def bench_row(label: str, outcome: ParamOutcome) -> dict[str, Any]:
    """One benchmark table row: game size and, per method, games solved, won games, result and time."""
    row: dict[str, Any] = {
        "model": label,
        "analysis": outcome.check.value,
        "locations": outcome.game_size[0],
        "edges": outcome.game_size[1],
    }
    for run in outcome.runs:
        key = run.method.value
        row[f"{key}_games"] = run.result.games_solved
        row[f"{key}_won"] = run.result.won_games
        row[f"{key}_delta"] = str(run.result.delta_good)
        row[f"{key}_outcome"] = run.outcome or "interval"
        row[f"{key}_wall_time"] = round(run.result.seconds, 6)
    agreement = outcome.agreement
    row["agreement"] = None if agreement is None else str(agreement)
    return row
