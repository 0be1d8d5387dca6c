"""Shared record of acceptance outcomes, printed at the end of the run."""

RESULTS = []


def record(label: str, ok: bool, detail: str = "") -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  [{detail}]" if detail else "")
    RESULTS.append(line)
    print(line)
    return ok
