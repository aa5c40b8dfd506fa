"""Collects one verdict line per acceptance criterion for the terminal summary."""

LINES: dict[int, str] = {}


def record(number: int, title: str, ok: bool, detail: str, seconds: float | None = None) -> bool:
    took = "" if seconds is None else f" [{seconds:.2f} s]"
    LINES[number] = f"{'PASS' if ok else 'FAIL'}  {number:2d}. {title}: {detail}{took}"
    print(LINES[number], flush=True)
    return ok
