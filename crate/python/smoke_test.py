"""Smoke test for the stpm extension module.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import math
import os
import tempfile

import stpm


def grid_disc(n, center, radius):
    side = math.isqrt(n - 1) + 1
    pos = lambda k: ((k - 1) % side, (k - 1) // side)
    cx, cy = pos(center)
    return [k for k in range(1, n + 1) if math.dist(pos(k), (cx, cy)) <= radius]


def main():
    n, t = 36, 80
    spec = {
        "n_sensors": n,
        "n_steps": t,
        "background_sigma": 1.0,
        "seed": 5,
        "planted": [
            {
                "sensor_ids": grid_disc(n, 15, 1.0),
                "interval": {"t1": 20, "t2": 45},
                "base_amplitude": 5.0,
                "noise_sigma": 0.2,
            }
        ],
    }
    rec, truth = stpm.generate_synthetic(spec)
    assert (rec.n_sensors, rec.n_steps) == (n, t), rec
    assert truth[0]["interval"] == {"t1": 20, "t2": 45}

    assert stpm.weighted_distance((0, 0, 0), (3, 4, 0)) == 5.0
    assert stpm.weighted_distance((0, 0, 0), (1, 0, 0), (4.0, 1.0, 1.0)) == 2.0

    sigma = stpm.alignment_pair(rec, 15, 15, 20, 45)
    assert sigma is not None and abs(sigma - 1.0) < 1e-12

    s = stpm.score(rec, 15, 20, 45, 1.5)
    assert s["length"] == 25 and s["area"] == len(s["sensors"])
    assert 15 in s["sensors"]

    assert stpm.pareto_dominates((10, 5, 0.9), (9, 5, 0.9))
    assert not stpm.pareto_dominates((10, 5, None), (9, 5, 0.9))

    cfg = stpm.MinerConfig(pop_size=50, eval_budget=3000, min_len=20, seed=1)
    assert cfg.pop_size == 50 and cfg.t1_floor is None
    assert cfg.replace(seed=2).seed == 2
    try:
        stpm.MinerConfig(pop_size=50, no_such_field=1)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown config keys must be rejected")

    res = stpm.mine(rec, cfg, threads=2)
    assert res["summary"]["evaluations"] == 3000
    assert res["summary"]["entries"] == len(res["entries"]) > 0
    assert res == stpm.mine(rec, cfg), "mining is deterministic in the seed"
    best = max(res["entries"], key=lambda e: (e["t2"] - e["t1"]) * len(set(e["sensors"]) & set(truth[0]["sensor_ids"])))
    print(f"mined {len(res['entries'])} entries; best overlap: center {best['center']} [{best['t1']}, {best['t2']}]")

    small, _ = stpm.generate_synthetic({**spec, "n_sensors": 9, "n_steps": 14, "planted": []})
    front = stpm.oracle(small, {"radius_levels": "all", "t_stride": 1, "len_levels": [2, 4]})
    assert front["summary"]["candidates"] >= len(front["entries"]) > 0

    base = [[rec.series(i)[k] for k in range(t)] for i in range(1, n + 1)]
    neg = stpm.Recording([rec.position(i) for i in range(1, n + 1)], base, "negative")
    disc = stpm.mine_discriminant(rec, neg, 1.0, stpm.MinerConfig(pop_size=20, eval_budget=200, t1_floor=1))
    assert disc["summary"]["config"]["min_d"] == 1.0
    # Identical settings have no activity difference.
    assert disc["entries"] == []

    with tempfile.TemporaryDirectory() as d:
        p, a = os.path.join(d, "p.csv"), os.path.join(d, "a.csv")
        rec.save(p, a)
        again = stpm.Recording.load(p, a)
        assert again.series(15) == rec.series(15)
        try:
            stpm.Recording.load_dir(os.path.join(d, "missing"))
        except OSError:
            pass
        else:
            raise AssertionError("missing files must raise OSError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
