import functools
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from biunitary.ade import dynkin, ghj_module, ocneanu_connection  # noqa: E402


@functools.lru_cache(maxsize=None)
def conn(name, chirality="+"):
    return ocneanu_connection(name, chirality)


@functools.lru_cache(maxsize=None)
def diagram(name):
    return dynkin(name)


@functools.lru_cache(maxsize=None)
def module(name, build_cells=False):
    return ghj_module(name, build_cells=build_cells)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
