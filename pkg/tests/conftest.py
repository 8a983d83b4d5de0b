"""Shared fixtures and the acceptance summary printed at the end of a run."""

import pytest

from opcoorbit.experiments import ExperimentConfig, cmd_decay_study, cmd_scenarios

SEEDS = (0, 1, 2, 3, 4)

# criterion number -> (title, passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(number, title, passed, detail=""):
        ACCEPTANCE[number] = (title, bool(passed), detail)
        print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}  {detail}")
    return _record


@pytest.fixture(scope="session")
def scenario_run(tmp_path_factory):
    """The ten scenarios at N=144, a=b=4 over five seeds with white-noise probes."""
    out = tmp_path_factory.mktemp("scenarios")
    config = ExperimentConfig.for_command("scenarios", seeds=SEEDS, trials=10, output_dir=str(out))
    return config, cmd_scenarios(config)


@pytest.fixture(scope="session")
def decay_run(tmp_path_factory):
    """Weight orders 1..9 plus the Gaussian reference at N=144, a=b=3, seed 0."""
    import time

    out = tmp_path_factory.mktemp("decay")
    config = ExperimentConfig.for_command("decay", seeds=(0,), output_dir=str(out))
    t0 = time.perf_counter()
    result = cmd_decay_study(config)
    return config, result, time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}: {detail}")
