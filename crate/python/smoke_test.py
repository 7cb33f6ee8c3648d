"""Smoke test for the mirrorlidar Python bindings.

Build and install first:
    cd crates/py && maturin build --release -o dist && pip install dist/*.whl
"""

import math
import os
import tempfile

import mirrorlidar as ml

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = os.path.join(HERE, "..", "configs")


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def models():
    s = ml.MirrorState(2.4, 22.0, 0.18)
    p = ml.ModelParams()
    close(ml.lateral_offset(s, p), 0.98 * 2.4 * math.tan(math.radians(44.0)) - 0.05, 1e-12)
    close(ml.expected_point_count(ml.MirrorState(3.0, 0.0, 1.0)), 2500.0, 1e-9)
    lo, hi = ml.window_bounds(s)
    assert lo < hi
    f = ml.predict_features(s)
    assert set(f) == {"R", "X", "N", "P", "warning"}
    p["cX"] = 1.0
    assert p["cX"] == 1.0
    assert ml.ModelParams.parse(p.to_text())["cX"] == 1.0
    try:
        ml.lateral_offset(ml.MirrorState(2.0, 45.0, 0.18))
    except ml.MirrorLidarError as e:
        assert "44.9" in str(e), e
    else:
        raise AssertionError("45° accepted by the offset model")


def optics():
    h = math.sqrt(0.5)
    v = ml.reflect((h, -h, 0.0), (0.0, 1.0, 0.0))
    assert v == (h, h, 0.0), v
    assert ml.received_power(100.0) < ml.received_power(10.0)


def scan_and_inject(tmp):
    with open(os.path.join(CONFIGS, "ora_baseline.scene")) as fh:
        scene = fh.read()
    cloud = ml.scan_scene(scene, "channels=32\n")
    assert cloud.count("direct") > 0 and len(cloud) > 1000

    frames = [ml.PointCloud(i, 0.1 * i, cloud.points()) for i in range(4)]
    path = os.path.join(tmp, "frames.csv")
    ml.write_csv(path, frames)
    back = ml.read_csv(path)
    assert [f.frame for f in back] == [0, 1, 2, 3]
    assert ml.to_csv_string(back) == ml.to_csv_string(frames)

    state = ml.MirrorState(2.4, 22.0, 0.18)
    a, reports = ml.inject(back, state, seed=3)
    b, _ = ml.inject(back, state, seed=3)
    assert ml.to_csv_string(a) == ml.to_csv_string(b)
    assert all(r["generator"] == "ChaCha8Rng" for r in reports)
    hit = [r for r in reports if r["triggered"]]
    for r, f in zip(reports, a):
        assert f.count("virtual") == r["n_injected"]
    print(f"  injected into {len(hit)} of {len(a)} frames")

    grid, area = ml.occupancy(back)
    assert area > 0 and "\n" in grid


def scenario():
    summary, log = ml.run_scenario()
    assert summary["collision"], summary
    close(summary["ego_stop_duration"], 25 / 3.6 / 8.0, 0.01)
    quiet, _ = ml.run_scenario(attack=False)
    assert not quiet["collision"]
    assert log.splitlines()[0].startswith("t,")


def main():
    print(f"mirrorlidar {ml.__version__}")
    models()
    optics()
    with tempfile.TemporaryDirectory() as tmp:
        scan_and_inject(tmp)
    scenario()
    print("smoke test passed")


if __name__ == "__main__":
    main()
