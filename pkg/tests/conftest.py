import pytest

from exercise_tsc.synth import SynthSpec, synth_dataset


@pytest.fixture(scope="session")
def synth_root(tmp_path_factory):
    """Small two-modality synthetic dataset shared by the pipeline and CLI tests."""
    root = tmp_path_factory.mktemp("synth")
    synth_dataset(SynthSpec(participants=12, devices=("LW", "RA")), 3, root)
    return root


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the summary prints after capture ends."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(name, ok, detail):
        status = "PASS" if ok is True else ("FAIL" if ok is False else str(ok))
        line = f"[{status}] {name}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
