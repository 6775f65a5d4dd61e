import numpy as np
import pytest

from subdiag.algebra import BlockPartition, a_neg
from subdiag.verify import (
    ANCHORS,
    SUITES,
    VERIFY_SUITES,
    Context,
    build_report,
    compositions,
    resolve_suites,
    run_suite,
)


def test_compositions():
    assert compositions(1) == [(1,)]
    assert sorted(compositions(3)) == sorted([(3,), (2, 1), (1, 2), (1, 1, 1)])
    assert len(compositions(6)) == 32


def test_every_suite_has_an_anchor():
    for name in SUITES:
        assert ANCHORS[name]


def test_resolve_suites():
    ctx = Context()
    assert resolve_suites(["all"], ctx) == VERIFY_SUITES
    assert resolve_suites(["jensen", "jensen"], ctx) == ["jensen"]
    with pytest.raises(KeyError):
        resolve_suites(["nope"], ctx)
    ctx = Context(algebra=a_neg())
    assert resolve_suites(["structure"], ctx) == ["structure", "negative-controls"]


def test_instances_independent_of_suite_selection():
    ctx = Context(seed=4, trials=5, partition=BlockPartition((2, 1)))
    alone = run_suite("riesz", ctx).to_json(timings=False)
    both = build_report(["jensen", "riesz"], ctx, timings=False)["suites"][1]
    assert alone == both


def test_seed_changes_instances():
    a = run_suite("factorization", Context(seed=1, trials=5)).max_residual
    b = run_suite("factorization", Context(seed=2, trials=5)).max_residual
    assert a != b


def test_overall_reflects_failures():
    ctx = Context(trials=3, partition=BlockPartition((1, 1)), tol={"roundtrip": -1.0})
    report = build_report(["factorization"], ctx)
    assert report["overall"] is False
    assert report["suites"][0]["failures"] == 3
    assert report["suites"][0]["failed_instances"] == [0, 1, 2]


@pytest.mark.parametrize("name", [s for s in SUITES if s not in ("szego-lp", "jensen")])
def test_small_runs_pass(name):
    ctx = Context(seed=0, trials=4, n=3)
    res = run_suite(name, ctx)
    assert res.failures == 0, res.to_json()
    assert res.instances >= 1


def test_residuals_reported_on_pass():
    res = run_suite("inner-outer", Context(trials=3, n=2))
    assert res.failures == 0
    assert set(res.checks) >= {"reconstruction", "unitarity", "certificate", "route_agreement"}
    assert np.isfinite(res.max_residual)
