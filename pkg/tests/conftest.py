from pathlib import Path

import pytest

from vlc_handover.experiment import load_trajectory_file
from vlc_handover.scene import load_scene, load_scene_file

FIXTURES = Path(__file__).parent / "fixtures"

TWO_TX = """
room: {extent_m: [1.6, 1.6], tx_height_m: 2.0}
transmitters:
  - {id: 1, pos_m: [0.4, 0.8], power_w: 1.0, semi_angle_deg: 60, cell_id: "01"}
  - {id: 2, pos_m: [1.2, 0.8], power_w: 1.0, semi_angle_deg: 60, cell_id: "10"}
receiver:
  area_m2: 1.0e-4
  fov_deg: 90
  responsivity_a_per_w: 1.0
  bit_rate_hz: 1000
  samples_per_bit: 10
  noise_std_a: 0.0
  ambient_dc_a: 0.0
"""


@pytest.fixture(scope="session")
def paper_scene():
    return load_scene_file("paper_scene")


@pytest.fixture(scope="session")
def paper_ber_scene():
    return load_scene_file("paper_scene_ber")


@pytest.fixture(scope="session")
def paper_path():
    return load_trajectory_file("paper_path")


@pytest.fixture
def noiseless_scene():
    return load_scene(TWO_TX)


# --- acceptance summary: one PASS/FAIL line per criterion -----------------------

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, title = mark.args
    detail = getattr(item, "criterion_detail", "")
    if rep.failed:
        msg = rep.longrepr.reprcrash.message if hasattr(rep.longrepr, "reprcrash") else str(rep.longrepr)
        _CRITERIA[n] = ("FAIL", title, msg.splitlines()[0] if msg else detail)
    elif rep.when == "call" and n not in _CRITERIA:
        _CRITERIA[n] = ("PASS", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[n]
        line = f"[{status}] {n}. {title}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
