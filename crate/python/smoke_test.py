"""Smoke test for the `mmia` extension module.

Build and run from the repository root:

    cargo build --release -p mmia-py --features extension-module
    cp target/release/libmmia_py.so python/mmia.so
    python3 python/smoke_test.py
"""

import cmath
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import mmia  # noqa: E402


def main():
    assert abs(mmia.pathloss(200.0) - 109.72163) < 1e-4

    pat = mmia.AntennaPattern(math.radians(45.0))
    assert abs(pat.g0 - 12.5131) < 1e-3
    assert pat.gain(0.0) == pat.g0
    assert pat.gain(math.pi) == pat.g_sl

    seq = mmia.zadoff_chu(1, 139)
    assert len(seq) == 139 and all(abs(abs(x) - 1.0) < 1e-12 for x in seq)
    shifted = [seq[(k + 17) % 139] * cmath.exp(0.3j) for k in range(139)]
    profile = mmia.pdp(shifted, 1)
    peak = max(range(139), key=profile.__getitem__)
    assert peak == 17, peak
    assert abs(profile[peak] - 139.0**2) < 1e-6

    anchors = [(0.0, 0.0), (200.0, 0.0), (100.0, 100.0 * math.sqrt(3.0))]
    ue = (90.0, 60.0)
    dist = [math.dist(ue, a) for a in anchors]
    x, y = mmia.locate_ue(dist, anchors)
    assert math.dist((x, y), ue) < 1e-9

    cfg = mmia.Config()
    cfg.trials = 20
    cfg.seed = 3
    assert mmia.Config(cfg.to_toml()).hash() == cfg.hash()
    exh, coord = mmia.single_trial(cfg, 4)
    assert exh["scheme"] != coord["scheme"]
    assert 1 <= coord["slots_used"] <= cfg.n_tx * 9

    small = mmia.Config(
        "[experiments]\ntrials = 20\np_los_trials = 100\n"
        "p_los_cluster_sizes = [3, 6]\np_los_p_blk = [0.2]\n"
        "[detection]\ncalibration_trials = 200\n"
    )
    table = mmia.run_experiment("p_los_vs_cluster", small)
    assert table["columns"] == ["n_sc", "p_blk", "p_los", "stderr", "trials"]
    assert len(table["rows"]) == 2
    assert table == mmia.run_experiment("p_los_vs_cluster", small)
    assert set(mmia.experiment_names()) >= {"p_los_vs_cluster", "time_vs_cluster"}

    try:
        mmia.Config("[antenna]\nn_tx = 0\n")
    except ValueError:
        pass
    else:
        raise AssertionError("invalid config accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
