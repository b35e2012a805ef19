import json
from pathlib import Path
from typing import Any, Sequence

from utils.logger_config import configure_logger

logger = configure_logger(__name__)


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    cells = [[_cell(v) for v in row] for row in rows]
    widths = [max(len(h), *(len(row[i]) for row in cells)) if cells else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)), "  ".join("-" * w for w in widths)]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def render_report(title: str, report: dict[str, Any]) -> str:
    """Key/value view of a report for the terminal; nested dicts are flattened with dots."""
    flat: list[tuple[str, Any]] = []

    def walk(prefix: str, value: Any):
        if isinstance(value, dict):
            for key, inner in value.items():
                walk(f"{prefix}.{key}" if prefix else str(key), inner)
        else:
            flat.append((prefix, value))

    walk("", report)
    width = max((len(key) for key, _ in flat), default=0)
    return "\n".join([title, "=" * len(title), *(f"{key.ljust(width)}  {_cell(value)}" for key, value in flat)])


TIMINGS = "timings"


def _without_timings(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _without_timings(inner) for key, inner in value.items() if key != TIMINGS}
    if isinstance(value, list):
        return [_without_timings(inner) for inner in value]
    return value


def dump_report(report: dict[str, Any]) -> str:
    """Machine report: everything except wall-clock timings, so equal seeds give equal bytes."""
    return json.dumps(_without_timings(report), indent=2, sort_keys=True, default=str) + "\n"


def write_report(report: dict[str, Any], out: str | None):
    if not out:
        return
    Path(out).write_text(dump_report(report))
    logger.info(f"report written to {out}")
