from pathlib import Path
from typing import Optional

import aiofiles

from utils.console import log, out
from utils.report import Report


async def send_structured(report: Report, path: Optional[Path] = None) -> None:
    """
    Emits the stable-key JSON rendering of a report, to ``path`` or to stdout.
    """
    document = report.to_json()
    if path is None:
        out.file.write(document)
        out.file.flush()
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        async with aiofiles.open(str(path), "w", encoding="utf-8") as f:
            await f.write(document)
        log.debug(f"Report written to {path}")
    except OSError as e:
        log.error(f"Failed to write report to {path}: {e}")
        log.debug("Report error details", exc_info=True)


async def send_plot_data(rows: list[dict], path: Path) -> None:
    """Writes benchmark rows as whitespace-separated columns with a header line."""
    if not rows:
        return
    columns = list(dict.fromkeys(key for row in rows for key in row))
    lines = ["\t".join(columns)]
    for row in rows:
        lines.append("\t".join("-" if row.get(c) is None else str(row.get(c)) for c in columns))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        async with aiofiles.open(str(path), "w", encoding="utf-8") as f:
            await f.write("\n".join(lines) + "\n")
        log.info(f"Plot data written to {path}")
    except OSError as e:
        log.error(f"Failed to write plot data to {path}: {e}")
        log.debug("Plot data error details", exc_info=True)
