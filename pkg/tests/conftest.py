import pytest

from ffsmbench import load_game
from ffsmbench.mealy import MealyMachine


def make_m3():
    trans = {}
    for i in range(3):
        trans[(f"q{i}", "a")] = (f"q{(i + 1) % 3}", "1" if i == 2 else "0")
        trans[(f"q{i}", "b")] = (f"q{i}", "0")
    return MealyMachine(["q0", "q1", "q2"], "q0", ["a", "b"], ["0", "1"], trans)


def make_one_state(outputs=("0", "0"), inputs=("a", "b")):
    trans = {("s", a): ("s", o) for a, o in zip(inputs, outputs)}
    return MealyMachine(["s"], "s", inputs, sorted(set(outputs)), trans)


@pytest.fixture
def m3():
    return make_m3()


@pytest.fixture
def one_state():
    return make_one_state()


@pytest.fixture(scope="session")
def game():
    return load_game()


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and getattr(rep, "when", "call") == "call":
                lines.append((nodeid.split("::")[-1], "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"{status}  {name}")
