"""Collects one PASS/FAIL line per acceptance criterion."""

RESULTS: list[str] = []


def record(number: int, ok: bool, summary: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {summary}"
    RESULTS.append(line)
    print(line)
    assert ok, line
