"""Smoke test for the qwalk extension module.

Build and stage the module first:

    cargo build --release -p qwalk-python --features extension-module
    cp target/release/libqwalk.so python/qwalk.so
    python3 python/smoke_test.py
"""

import json
import math

import qwalk


def main():
    p = qwalk.SystemParams([1.0], drive=1.0, detuning=1e-4, qubit_decay=4.0, initial_photon=5)
    assert p.figure_abscissa() == 0.5

    rec = qwalk.run_to_decay(p, evolution={"plateau_window": 10.0})
    n = rec.average_photon(0)
    assert abs(n - 4.0) < 0.15, n
    assert abs(rec.total_decayed() + rec.surviving_trace - 1.0) < 1e-6

    values, err, finest = qwalk.richardson_run(p)
    assert abs(values[0] - n) < 1e-3 and err < 1e-4

    mc = qwalk.jump_monte_carlo(p, trajectories={"trajectories": 400, "seed": 3})
    assert abs(mc["mean_photons"][0] - n) < 4 * mc["mean_photon_stderr"][0] + 1e-3

    assert qwalk.analytic_displacement(p) == [-1.0]
    assert qwalk.winding_displacement(2.0, [1.0]) == 0.0
    assert qwalk.classical_displacement(1.0, 3.0) == -0.75

    two = qwalk.SystemParams([2.0, 1.0], drive=8.0, qubit_decay=25.0, initial_photon=5)
    d1, d2 = qwalk.analytic_2d(two)
    expected = -1.0 + math.acos(-1.0 / (8.0 * math.sqrt(5.0))) / math.pi
    assert abs(d1 - expected) < 1e-12, (d1, expected)

    spec = json.loads(qwalk.preset("fig3"))
    spec["control_values"] = [1.0, 12.0]
    spec["oracles"] = ["analytic", "classical"]
    spec.pop("series")
    csv, failed = qwalk.run_sweep(spec, strict_bitrepro=True)
    assert not failed
    rows = [line for line in csv.splitlines() if not line.startswith("#")]
    assert len(rows) == 1 + 4, rows

    try:
        qwalk.SystemParams([1.0], drive=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative drive accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
