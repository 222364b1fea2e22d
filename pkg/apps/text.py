from typing import Any

from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from utils.console import out
from utils.report import Report

_TRACE_COLUMNS = ("iteration", "method", "delta", "outcome", "delta_good", "delta_bad", "delta_min", "states_explored", "wall_time")


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    return str(value)


def _table(title: str, rows: list[dict[str, Any]], columns: tuple[str, ...] | None = None) -> Table:
    if columns is None:
        columns = tuple(rows[0]) if rows else ()
    table = Table(title=title, show_lines=False)
    for column in columns:
        table.add_column(column.replace("_", " "), justify="right" if column != "model" else "left")
    for row in rows:
        style = "green" if row.get("outcome") == "won" else None
        table.add_row(*(escape(_cell(row.get(column))) for column in columns), style=style)
    return table


async def send_text(report: Report) -> None:
    """
    Prints a report for humans; every value of the structured rendering appears here too.
    """
    color = "green" if report.exit_code == 0 else "red"
    header = f"[bold]{report.command}[/bold] {report.analysis}  [dim]v{report.version}[/dim]"
    body = [header]
    for model in report.models:
        body.append(f"model [cyan]{escape(model['name'])}[/cyan] ({escape(model['reference'])}) sha256 {model['sha256'][:16]}")
    for key, value in sorted(report.result.items()):
        if key == "methods" or isinstance(value, list):
            continue
        if isinstance(value, dict):
            value = ", ".join(f"{k} {v}" for k, v in value.items())
        body.append(f"{key.replace('_', ' ')}: {escape(_cell(value))}")
    if report.message:
        body.append(f"[{color}]{escape(report.message)}[/{color}]")
    out.print(Panel("\n".join(body), border_style=color, expand=False))

    methods = report.result.get("methods", {})
    if methods:
        summary = [
            {
                "method": name,
                "outcome": data["outcome"],
                "delta_good": data["delta_good"],
                "delta_bad": data["delta_bad"],
                "games_solved": data["games_solved"],
                "won_games": data["won_games"],
                "wall_time": data["wall_time"],
            }
            for name, data in methods.items()
        ]
        out.print(_table("Search", summary))
        for name, data in methods.items():
            if data["checks"]:
                out.print(_table(f"Pre-checks ({name})", data["checks"], _TRACE_COLUMNS))
    if report.trace:
        out.print(_table("Iterations", report.trace, _TRACE_COLUMNS))
    if report.rows:
        out.print(_table("Benchmark", report.rows))
    counterexample = report.result.get("counterexample")
    if counterexample:
        out.print(Panel(escape("\n".join(counterexample)), title="Counterexample", border_style="red", expand=False))
    if report.statistics:
        stats = ", ".join(f"{k}={_cell(v)}" for k, v in sorted(report.statistics.items()) if not isinstance(v, dict))
        if stats:
            out.print(f"[dim]{stats}[/dim]")
