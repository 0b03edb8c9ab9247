import pytest

from wavelab.report import Report
from wavelab.suites import SUITES, run_suite


@pytest.mark.parametrize("name", sorted(SUITES))
def test_suite_passes(name):
    rep = run_suite(name, seed=11)
    failed = [k for k, c in rep.checks.items() if not c["pass"]]
    assert not failed, failed
    assert not rep.nonfinite


def test_suite_is_deterministic():
    assert run_suite("sections", 5).to_json() == run_suite("sections", 5).to_json()


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("nope")


def test_report_checks():
    r = Report("r", "check", 1)
    assert r.check("b", True)
    assert r.check("tol", 0.5, tolerance=1.0)
    assert not r.check("target", 2.0, target=4.0, tolerance=0.5)
    assert r.check("min", float("inf"), minimum=1.0)
    assert not r.check("nan", float("nan"), tolerance=1.0)
    with pytest.raises(ValueError):
        r.check("b", True)
    d = r.as_dict()
    assert d["pass"] is False
    assert d["checks"]["nan"]["value"] == "nan"
    assert r.summary_lines()[2].startswith("FAIL  target")
