"""Smoke test for the ntnsim Python extension.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`,
then run `python python/smoke_test.py` from the repository root.
"""

import json
import math
import pathlib

import ntnsim_py as ns

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main() -> None:
    fspl = ns.fspl(ns.slant_range(90.0, 35786.0), 2.0)
    assert abs(fspl - 189.54) < 0.05, fspl

    assert abs(ns.bandwidth_rescale(0.0, 180e3, 15e3) - 10.792) < 1e-3
    assert ns.ta_command_steps(1.04) == 2

    g = json.loads(ns.geometry_sample("geosynchronous", 35786.0, 0.0, 0.0, 0.0, 0.0))
    assert abs(g["one_way_delay_ms"] - 119.37) < 0.01, g

    harq = ns.harq_throughput(541.46, 1000.0, 2, 8.0)
    rlc = ns.rlc_arq_throughput(545.46, 16, 1000.0, 4.0)
    assert rlc > harq > 0.0

    budgets = json.loads(ns.linkbudget((ROOT / "configs/reference_budgets.json").read_text()))
    assert len(budgets) == 4
    geo_dl = budgets[0]
    assert abs(geo_dl["snr_best_db"] - 1.27) < 0.15, geo_dl

    try:
        ns.linkbudget('{"name": "x"}')
    except ValueError:
        pass
    else:
        raise AssertionError("invalid config accepted")

    report = json.loads(ns.simulate((ROOT / "configs/leo600.json").read_text(), 3))
    again = json.loads(ns.simulate((ROOT / "configs/leo600.json").read_text(), 3))
    assert report == again
    assert report["access_successes"] > 0
    assert math.isfinite(report["goodput_bps"])

    print("ntnsim_py smoke test passed:", ns.__version__)


if __name__ == "__main__":
    main()
