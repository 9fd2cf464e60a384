import csv

import pytest

from smoothstl.benchmark import COLUMNS, aggregate, gradient_check, run_benchmark
from smoothstl.scp import build_scp
from smoothstl.smooth_semantics import SmoothConfig


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    rows, means = run_benchmark([1], ["SRM1", "SRM2", "SRM3", "SRM4"], [3.0], 3, out, max_iters=15, timing=False)
    return out, rows, means


def test_row_and_aggregate_counts(sweep):
    out, rows, means = sweep
    assert len(rows) == 12 and len(means) == 4
    with open(out / "results.csv") as fh:
        r = list(csv.reader(fh))
    assert r[0] == COLUMNS and len(r) == 13
    with open(out / "means.csv") as fh:
        assert len(list(csv.reader(fh))) == 5
    assert all(m["realizations"] == 3 for m in means)


def test_rows_sorted_and_sandwiched(sweep):
    _, rows, _ = sweep
    keys = [(r["scp"], r["srm"], r["k1"], r["seed"]) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        assert r["smooth_rho"] + r["L"] <= r["exact_rho"] <= r["smooth_rho"] + r["U"]
        assert r["width"] == r["U"] - r["L"]
        assert r["wall_ms"] == 0.0


def test_srm1_width_is_seed_independent(sweep):
    _, rows, _ = sweep
    assert len({r["width"] for r in rows if r["srm"] == "SRM1"}) == 1
    assert len({r["width"] for r in rows if r["srm"] == "SRM3"}) > 1


def test_aggregate_means():
    rows = [
        {**{c: 0.0 for c in COLUMNS}, "scp": 1, "srm": "SRM1", "k1": 1.0, "k2": 1.0, "seed": s, "exact_rho": v}
        for s, v in enumerate([1.0, 2.0, 6.0])
    ]
    (m,) = aggregate(rows)
    assert m["exact_rho"] == 3.0 and m["realizations"] == 3


def test_deterministic_and_parallel_equal(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    args = ([2], ["SRM2", "SRM3"], [1.0, 3.0], 2)
    run_benchmark(*args, a, max_iters=5, timing=False)
    run_benchmark(*args, b, max_iters=5, timing=False)
    run_benchmark(*args, c, max_iters=5, timing=False, workers=2)
    for name in ("results.csv", "means.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_invalid_realizations():
    with pytest.raises(ValueError):
        run_benchmark([1], ["SRM1"], [1.0], 0)


def test_gradient_check_report():
    rep = gradient_check(build_scp(1), SmoothConfig("SRM4", 5.0, 5.0), trials=3)
    assert rep["trials"] == 3
    assert rep["max_relative_error"] <= 1e-5
    assert rep["max_adjoint_dense_diff"] <= 1e-10
    assert rep["time_ratio"] > 0
