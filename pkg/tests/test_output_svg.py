import hashlib
import json
import math
import subprocess
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from erid.dynamics import Dynamics, OdeConfig, integrate
from erid.games import GameSchedule, biased_rps, matching_pennies
from erid.harness import AgentSpec, ExperimentConfig, run_learning
from erid.output import CSV_HEADER, git_blob_hash, read_trajectory_csv, write_manifest, write_trajectory_csv
from erid.simplex import PolicyProfile
from erid.svg import PLOT_KINDS, render_svg, ternary_xy, write_svg
from erid.trajectory import Trajectory

NS = {"svg": "http://www.w3.org/2000/svg"}


def mp_traj(n=30):
    return integrate(Dynamics.BNN, matching_pennies(), PolicyProfile((0.3, 0.7), (0.8, 0.2)),
                     OdeConfig(1e-2, n * 10, 10))


def rps_traj():
    return integrate(Dynamics.SMITH, biased_rps(), PolicyProfile((0.1, 0.1, 0.8), (0.8, 0.1, 0.1)),
                     OdeConfig(1e-2, 500, 10))


class TestCsv:
    def test_empty_trajectory_is_header_only(self, tmp_path):
        path = tmp_path / "e.csv"
        write_trajectory_csv(Trajectory.empty(2, 2), path)
        assert path.read_text() == ",".join(CSV_HEADER) + "\n"

    def test_single_sample_rows(self, tmp_path):
        traj = Trajectory.from_samples([0], [[0.5, 0.5]], [[1.0, 0.0]], matching_pennies())
        path = tmp_path / "one.csv"
        write_trajectory_csv(traj, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 5
        # player 1 gains 1 by switching to action 0; player 2 is indifferent; ranges sum to 4
        assert lines[1:] == ["0,1,0,0.5,1,0.25", "0,1,1,0.5,1,0.25",
                             "0,2,0,1,1,0.25", "0,2,1,0,1,0.25"]

    @pytest.mark.parametrize("make", [mp_traj, rps_traj])
    def test_round_trip_is_exact(self, tmp_path, make):
        traj = make()
        path = tmp_path / "rt.csv"
        write_trajectory_csv(traj, path)
        back = read_trajectory_csv(path)
        np.testing.assert_array_equal(back.t, traj.t)
        np.testing.assert_array_equal(back.policy1, traj.policy1)
        np.testing.assert_array_equal(back.policy2, traj.policy2)
        np.testing.assert_array_equal(back.nashconv, traj.nashconv)
        np.testing.assert_array_equal(back.relative_nashconv, traj.relative_nashconv)

    def test_integer_steps_stay_integer(self, tmp_path):
        traj = run_learning(ExperimentConfig(matching_pennies(), (AgentSpec(),), 300, 0, 100))
        path = tmp_path / "learn.csv"
        write_trajectory_csv(traj, path)
        assert [r.split(",")[0] for r in path.read_text().splitlines()[1::4]] == ["0", "100", "200", "300"]
        assert np.issubdtype(read_trajectory_csv(path).t.dtype, np.integer)

    def test_write_error_names_path(self, tmp_path):
        bad = tmp_path / "missing" / "x.csv"
        with pytest.raises(OSError, match="missing"):
            write_trajectory_csv(mp_traj(), bad)

    def test_read_errors(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            read_trajectory_csv(p)
        p.write_text(",".join(CSV_HEADER) + "\n")
        with pytest.raises(ValueError, match="no samples"):
            read_trajectory_csv(p)
        p.write_text(",".join(CSV_HEADER) + "\n0,1,0,1\n")
        with pytest.raises(ValueError, match=":2:"):
            read_trajectory_csv(p)


class TestManifest:
    def test_blob_hash_matches_git_convention(self):
        data = b"hello\n"
        assert git_blob_hash(data) == hashlib.sha1(b"blob 6\x00hello\n").hexdigest()
        assert git_blob_hash(data) == "ce013625030ba8dba906f756967f9e9ca394464a"

    def test_blob_hash_matches_git_binary(self, tmp_path):
        p = tmp_path / "f.bin"
        p.write_bytes(bytes(range(256)) * 3)
        try:
            out = subprocess.run(["git", "hash-object", str(p)], capture_output=True, text=True, check=True)
        except (OSError, subprocess.CalledProcessError):
            pytest.skip("git not available")
        assert git_blob_hash(p.read_bytes()) == out.stdout.strip()

    def test_manifest_contents(self, tmp_path):
        a, b = tmp_path / "b.csv", tmp_path / "a.svg"
        a.write_text("x\n")
        b.write_text("y\n")
        m = write_manifest(tmp_path / "m.json", {"seed": np.int64(3), "alpha": np.float64(0.5),
                                                 "init": np.array([0.5, 0.5])}, [a, b])
        on_disk = json.loads((tmp_path / "m.json").read_text())
        assert on_disk == json.loads(json.dumps(m, default=lambda o: o.tolist() if hasattr(o, "tolist") else o))
        assert on_disk["config"] == {"seed": 3, "alpha": 0.5, "init": [0.5, 0.5]}
        assert on_disk["outputs"] == {"a.svg": git_blob_hash(b"y\n"), "b.csv": git_blob_hash(b"x\n")}


def parse(doc: str) -> ET.Element:
    root = ET.fromstring(doc)
    assert root.tag == "{http://www.w3.org/2000/svg}svg"
    return root


class TestSvg:
    def test_ternary_xy(self):
        x, y = ternary_xy((1 / 3, 1 / 3, 1 / 3))
        assert x == pytest.approx(0.5, abs=1e-15)
        assert y == pytest.approx(math.sqrt(3) / 6, abs=1e-15)
        assert ternary_xy((1, 0, 0)) == (0.0, 0.0)
        assert ternary_xy((0, 1, 0)) == (1.0, 0.0)
        assert ternary_xy((0, 0, 1)) == pytest.approx((0.5, math.sqrt(3) / 2))
        with pytest.raises(ValueError):
            ternary_xy((0.5, 0.5))

    @pytest.mark.parametrize("kind", PLOT_KINDS)
    def test_empty_trajectory_draws_frame_and_legend(self, kind):
        m = 3 if kind == "ternary" else 2
        root = parse(render_svg(Trajectory.empty(m, m), kind, labels=["nothing"]))
        legend = root.find("svg:g[@id='legend']", NS)
        assert "nothing" in "".join(legend.itertext())
        plot = root.find("svg:g[@id='plot']", NS)
        assert plot.find("svg:rect", NS) is not None or plot.find("svg:polygon", NS) is not None
        assert not plot.findall(".//svg:g[@class='series']/*", NS)

    @pytest.mark.parametrize("kind, make", [("line_nashconv", mp_traj), ("line_relative", mp_traj),
                                            ("ternary", rps_traj), ("square_phase", mp_traj)])
    def test_well_formed_with_series(self, kind, make):
        root = parse(render_svg([make(), make()], kind, labels=["a", "b"], title="demo"))
        series = root.findall(".//svg:g[@class='series']", NS)
        assert len(series) == (4 if kind == "ternary" else 2)
        assert all(s.find("svg:polyline", NS) is not None for s in series)

    def test_constant_ternary_is_single_marker(self):
        u = np.full((5, 3), 1 / 3)
        traj = Trajectory.from_samples(np.arange(5), u, u, biased_rps())
        root = parse(render_svg(traj, "ternary"))
        for s in root.findall(".//svg:g[@class='series']", NS):
            kids = list(s)
            assert len(kids) == 1 and kids[0].tag.endswith("circle")

    def test_ternary_centroid_position(self):
        u = np.full((1, 3), 1 / 3)
        root = parse(render_svg(Trajectory.from_samples([0], u, u, biased_rps()), "ternary"))
        poly = root.find(".//svg:polygon", NS)
        corners = np.array([[float(v) for v in p.split(",")] for p in poly.get("points").split()])
        centroid = corners.mean(axis=0)
        circle = root.find(".//svg:g[@class='series']/svg:circle", NS)
        np.testing.assert_allclose([float(circle.get("cx")), float(circle.get("cy"))], centroid, atol=0.01)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            render_svg(mp_traj(), "ternary")
        with pytest.raises(ValueError):
            render_svg(rps_traj(), "square_phase")
        with pytest.raises(ValueError):
            render_svg(mp_traj(), "histogram")
        with pytest.raises(ValueError):
            render_svg([mp_traj()], "line_nashconv", labels=["a", "b"])

    def test_phase_boundaries_are_red(self):
        sched = GameSchedule.phase_switched(100)
        traj = run_learning(ExperimentConfig(sched, (AgentSpec(),), 350, 0, 10, self_play=True))
        root = parse(render_svg(traj, "line_nashconv"))
        plot = root.find("svg:g[@id='plot']", NS)
        red = [el for el in plot.findall("svg:line", NS) if el.get("stroke") == "red"]
        assert len(red) == 3
        xs = sorted(float(el.get("x1")) for el in red)
        np.testing.assert_allclose(np.diff(xs), np.diff(xs)[0], atol=0.02)

    def test_no_markers_for_static_schedule(self):
        root = parse(render_svg(mp_traj(), "line_nashconv"))
        assert not [el for el in root.iter("{http://www.w3.org/2000/svg}line") if el.get("stroke") == "red"]

    def test_long_series_are_downsampled(self):
        traj = integrate(Dynamics.BNN, matching_pennies(), PolicyProfile((0.3, 0.7), (0.8, 0.2)),
                         OdeConfig(1e-3, 5000, 1))
        root = parse(render_svg(traj, "square_phase"))
        segs = root.findall(".//svg:g[@class='series']/svg:line", NS)
        assert 100 < len(segs) < 1000

    def test_deterministic_and_write(self, tmp_path):
        a = render_svg(rps_traj(), "ternary")
        assert a == render_svg(rps_traj(), "ternary")
        write_svg(tmp_path / "t.svg", rps_traj(), "ternary")
        assert (tmp_path / "t.svg").read_text() == a
        with pytest.raises(OSError, match="nowhere"):
            write_svg(tmp_path / "nowhere" / "t.svg", rps_traj(), "ternary")
