import json

import pytest

from fatiguerate.cli import main
from fatiguerate.config import RunConfig
from fatiguerate.errors import ConfigError

HEADER = "id,age_yr,stature_m,mass_kg,upper_limb_cm,lower_limb_cm\n"
MARKER_HEADER = "subject_id,session_time_s,frame_time_s,sx,sy,sz,ex,ey,ez,wx,wy,wz,dx,dy,dz\n"


def simulate(out, *extra):
    return main(["simulate", "--out", str(out), "--n-subjects", "12", *extra])


def test_simulate_deterministic(tmp_path):
    assert simulate(tmp_path / "a") == 0
    assert simulate(tmp_path / "b") == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["manifest_simulate.json", "markers.csv", "sessions.csv", "subjects.csv",
                     "truth.csv"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_default_shape(tmp_path):
    assert main(["simulate", "--out", str(tmp_path), "--space", "force"]) == 0
    lines = (tmp_path / "sessions.csv").read_text().splitlines()[1:]
    assert len(lines) == 400
    assert len((tmp_path / "subjects.csv").read_text().splitlines()) == 41


def test_simulate_empty(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path), "--n-subjects", "0"]) == 1
    assert "error" in capsys.readouterr().err


def test_report_end_to_end(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["simulate", "--out", str(data), "--n-subjects", "25"]) == 0
    res = tmp_path / "res"
    code = main(["report", "--subjects", str(data / "subjects.csv"),
                 "--sessions", str(data / "sessions.csv"), "--markers", str(data / "markers.csv"),
                 "--out", str(res)])
    assert code == 0
    out = capsys.readouterr().out
    assert "fitted 25 subject(s)" in out and "Strength groups" in out
    for name in ("fits.csv", "summary.csv", "correlation.csv", "groups.csv", "hist_r2.csv",
                 "hist_k.csv", "report.txt", "manifest_fit.json", "manifest_stats.json"):
        assert (res / name).exists(), name
    manifest = json.loads((res / "manifest_fit.json").read_text())
    assert set(manifest["inputs"]) == {"subjects.csv", "sessions.csv", "markers.csv"}
    assert manifest["config_digest"] == RunConfig().digest()

    # stats again from the written fits gives the same report
    res2 = tmp_path / "res2"
    assert main(["stats", "--fits", str(res / "fits.csv"), "--subjects", str(data / "subjects.csv"),
                 "--out", str(res2)]) == 0
    assert (res2 / "report.txt").read_text() == (res / "report.txt").read_text()


def test_summary_mean_near_target(tmp_path):
    data = tmp_path / "data"
    assert main(["simulate", "--out", str(data), "--space", "force", "--n-subjects", "400"]) == 0
    res = tmp_path / "res"
    assert main(["fit", "--subjects", str(data / "subjects.csv"),
                 "--sessions", str(data / "sessions.csv"), "--out", str(res)]) == 0
    rows = (res / "summary.csv").read_text().splitlines()
    k_all = next(r for r in rows if r.startswith("all,k,")).split(",")
    assert abs(float(k_all[3]) - 1.02) < 0.1


def test_perfect_fits_histogram(tmp_path):
    data = tmp_path / "data"
    assert main(["simulate", "--out", str(data), "--n-subjects", "20", "--noise-sigma", "0"]) == 0
    res = tmp_path / "res"
    assert main(["report", "--subjects", str(data / "subjects.csv"),
                 "--sessions", str(data / "sessions.csv"), "--markers", str(data / "markers.csv"),
                 "--out", str(res)]) == 0
    counts = [int(r.split(",")[2]) for r in (res / "hist_r2.csv").read_text().splitlines()[1:]]
    assert counts[-1] == 20 and sum(counts[:-1]) == 0


def test_single_perfect_subject(tmp_path):
    s = tmp_path / "s.csv"
    s.write_text(HEADER.strip() + ",task_load_N\nS01,41,1.712,70.2,23.6,25.6,20\n")
    ses = tmp_path / "x.csv"
    import math
    rows = ["S01,0,100.0"] + [f"S01,{t},{100 * math.exp(-1.5 * 0.2 * t / 60)!r}" for t in (15, 30, 60)]
    ses.write_text("subject_id,session_time_s,measured_force_N\n" + "\n".join(rows) + "\n")
    assert main(["fit", "--subjects", str(s), "--sessions", str(ses), "--out", str(tmp_path)]) == 0
    header, row = (tmp_path / "fits.csv").read_text().splitlines()
    rec = dict(zip(header.split(","), row.split(",")))
    assert float(rec["r_squared"]) == 1.0
    assert float(rec["k_per_min"]) == pytest.approx(1.5, rel=1e-12)
    assert float(rec["k_per_s"]) == pytest.approx(0.025, rel=1e-12)


def test_fit_partial_failure_exit_code(tmp_path):
    s = tmp_path / "s.csv"
    s.write_text(HEADER.strip() + ",task_load_N\nS01,41,1.712,70.2,23.6,25.6,20\n"
                 "S02,41,1.712,70.2,23.6,25.6,20\n")
    ses = tmp_path / "x.csv"
    ses.write_text("subject_id,session_time_s,measured_force_N\nS01,0,100\nS01,15,95\nS01,30,90\n"
                   "S02,0,100\nS02,15,95\n")
    assert main(["fit", "--subjects", str(s), "--sessions", str(ses), "--out", str(tmp_path)]) == 1
    manifest = json.loads((tmp_path / "manifest_fit.json").read_text())
    assert manifest["skipped"][0]["id"] == "S02"
    assert len((tmp_path / "fits.csv").read_text().splitlines()) == 2


def test_stats_from_summaries(capsys):
    assert main(["stats", "--from-summaries", "1.47", "0.53", "10", "0.64", "0.20", "10"]) == 0
    out = capsys.readouterr().out
    assert "welch: t=4.6333" in out and "pooled" in out


def test_stats_empty_fits(tmp_path, capsys):
    fits = tmp_path / "fits.csv"
    fits.write_text("subject_id,unit,k_per_min,k_per_s,r_squared,f_mvc,capacity_max,load,"
                    "n_points,quality,flags\n")
    subj = tmp_path / "s.csv"
    subj.write_text(HEADER)
    assert main(["stats", "--fits", str(fits), "--subjects", str(subj), "--out", str(tmp_path)]) == 1
    assert "empty" in capsys.readouterr().err


def test_stats_needs_inputs():
    assert main(["stats"]) == 1


def test_moment_fixture(tmp_path):
    subj = tmp_path / "s.csv"
    subj.write_text(HEADER + "S01,41,1.712,70.2,23.6,25.6\n")
    markers = tmp_path / "m.csv"
    markers.write_text(MARKER_HEADER + "S01,0,0,0,0,0,0.3,0,0,0.55,0,0,0.6,0,0\n")
    forces = tmp_path / "f.json"
    forces.write_text(json.dumps({"G_u": [0, 0, -19.6], "G_f": [0, 0, -11.8],
                                  "G_m": [0, 0, -24.5], "F_d": [-25, 0, 0]}))
    assert main(["moment", "--subjects", str(subj), "--markers", str(markers),
                 "--forces", str(forces), "--out", str(tmp_path)]) == 0
    header, row = (tmp_path / "moments.csv").read_text().splitlines()
    rec = dict(zip(header.split(","), row.split(",")))
    assert abs(float(rec["moment_load_Nm"]) - 22.0425) < 1e-9
    assert float(rec["shoulder_flexion_deg"]) == pytest.approx(90.0)


def test_moment_posture_series(tmp_path):
    data = tmp_path / "data"
    assert main(["simulate", "--out", str(data), "--n-subjects", "2"]) == 0
    assert main(["moment", "--subjects", str(data / "subjects.csv"),
                 "--markers", str(data / "markers.csv"), "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "moments.csv").read_text().splitlines()[1:]
    for r in rows:
        q1, q2 = map(float, r.split(",")[-2:])
        assert abs(q1 - 46.4) < 1e-9 and abs(q2 - 50.1) < 1e-9


def test_moment_missing_column(tmp_path, capsys):
    subj = tmp_path / "s.csv"
    subj.write_text(HEADER + "S01,41,1.712,70.2,23.6,25.6\n")
    markers = tmp_path / "m.csv"
    markers.write_text("subject_id,session_time_s,frame_time_s,sx,sy,sz\nS01,0,0,0,0,0\n")
    assert main(["moment", "--subjects", str(subj), "--markers", str(markers)]) == 1
    assert "missing column" in capsys.readouterr().err


def test_degenerate_exit_code(tmp_path):
    subj = tmp_path / "s.csv"
    subj.write_text(HEADER + "S01,41,1.712,70.2,23.6,25.6\n")
    markers = tmp_path / "m.csv"
    markers.write_text(MARKER_HEADER + "S01,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n")
    # a zero-length segment is both a degeneracy and invalid input; validation wins
    assert main(["moment", "--subjects", str(subj), "--markers", str(markers),
                 "--out", str(tmp_path)]) == 1


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("seed = 4\nn_subjects = 3\nnoise_sigma = 0.05\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    man = json.loads((tmp_path / "a" / "manifest_simulate.json").read_text())
    assert man["config"]["seed"] == 4 and man["n_subjects"] == 3
    assert main(["simulate", "--config", str(cfg), "--seed", "9", "--out", str(tmp_path / "b")]) == 0
    man = json.loads((tmp_path / "b" / "manifest_simulate.json").read_text())
    assert man["config"]["seed"] == 9


def test_bad_config(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("nosie_sigma = 0.05\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    with pytest.raises(ConfigError):
        RunConfig(good_r2=1.5).validate()
