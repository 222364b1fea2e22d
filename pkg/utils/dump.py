import re
from pathlib import Path
from typing import Optional

from tioa.game import GameResult, ZoneGraph
from utils.console import log


def render_zone_graph(graph: ZoneGraph, result: Optional[GameResult] = None, factor: int = 1) -> str:
    """
    Text listing of a zone graph: one block per symbolic state, then its outgoing transitions.

    Args:
        graph (ZoneGraph): The explored graph.
        result (GameResult, optional): When given, the losing part of every state and the strategy are listed too.
        factor (int): Scaling factor of the constants; bounds are printed divided by it.

    Returns:
        str: The listing.
    """
    a = graph.automaton
    names = a.clocks
    lines = [f"# {a.name}: {len(graph)} states, {graph.graph.number_of_edges()} transitions"]
    for index, state in enumerate(graph.states):
        marker = " (initial)" if index == graph.initial else ""
        lines.append(f"state {index}{marker}: {state.location} | {state.zone.render(names, factor)}")
        if result is not None:
            losing = result.losing_at(index)
            lines.append(f"  losing: {'false' if losing.is_empty() else losing.render(names, factor)}")
        for edge_index, target in graph.successors(index):
            edge = a.edges[edge_index]
            lines.append(f"  --{edge.action}{a.polarity(edge.action).mark}--> {target}")
    if result is not None:
        lines.append("")
        lines.append(f"# {'verifier' if result.won else 'spoiling'} strategy ({result.strategy.owner.name.lower()})")
        for entry in result.strategy.entries:
            lines.append(f"  {entry.location} | {entry.zone.render(names, factor)} -> {entry.describe()} (rank {entry.rank})")
    return "\n".join(lines) + "\n"


def save_zone_graph(
    name: str,
    graph: ZoneGraph,
    result: Optional[GameResult] = None,
    factor: int = 1,
    directory: Path = Path("./debug"),
) -> Optional[Path]:
    """Writes the listing to ``debug/{name}_debug.txt``; returns the path, or None when writing failed."""
    try:
        directory.mkdir(parents=True, exist_ok=True)
        safe_name = re.sub(r"[^\w.-]", "_", name)
        file_path = directory / f"{safe_name}_debug.txt"
        file_path.write_text(render_zone_graph(graph, result, factor), encoding="utf-8")
        log.debug(f"{name}: zone graph saved to {file_path}")
        return file_path
    except Exception as e:
        log.error(f"{name}: Failed to save zone graph dump: {e}")
        log.debug(f"{name}: dump error details", exc_info=True)
        return None
