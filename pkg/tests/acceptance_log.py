"""One pass/fail line per acceptance criterion, printed at the end of the run."""

LINES = []


def record(number, passed, detail, seconds, limit):
    status = "PASS" if passed else "FAIL"
    line = f"criterion {number:>2}: {status}  {detail}  ({seconds:.2f} s, limit {limit} s)"
    LINES.append((number, line))
    print(line)
    return passed
