"""Shared record of acceptance outcomes, printed at the end of the session."""

RESULTS: dict[int, str] = {}


def record(number: int, title: str, passed: bool, detail: str, seconds: float) -> None:
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail} [{seconds:.1f} s]"
    RESULTS[number] = line
    print(line)
