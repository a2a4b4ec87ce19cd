import math

import numpy as np
import pytest

from fatiguerate.biomech import Anthropometry, posture_angles
from fatiguerate.config import RunConfig
from fatiguerate.errors import ValidationError
from fatiguerate.model import Unit
from fatiguerate.records import write_dataset
from fatiguerate.stats import pearson
from fatiguerate.synth import (
    ProtocolSchedule,
    SyntheticSubjectSpec,
    check_posture_round_trip,
    coupled_draws,
    frame_from_posture,
    generate_cohort,
    generate_marker_trace,
    generate_sessions,
    mean_posture_trajectory,
)


def test_zero_noise_on_curve():
    spec = SyntheticSubjectSpec(1.02, 45.0, 0.243)
    s = generate_sessions(spec)
    assert len(s) == 10 and s[0].value == 45.0
    assert s[-1].time_s == 180
    assert s[-1].value / 45.0 == pytest.approx(0.475408901499578909, rel=1e-14)
    for m in s:
        assert m.value == pytest.approx(45.0 * math.exp(-1.02 * 0.243 * m.t), rel=1e-15)


def test_noise_is_median_one():
    spec = SyntheticSubjectSpec(1.0, 1.0, 0.5, noise_sigma=0.03)
    rng = np.random.default_rng(0)
    ratios = []
    for _ in range(2000):
        s = generate_sessions(spec, ProtocolSchedule((60.0,)), rng=rng)
        ratios.append(s[0].value)
    assert np.median(ratios) == pytest.approx(1.0, abs=0.005)
    assert np.std(np.log(ratios)) == pytest.approx(0.03, rel=0.1)


def test_spec_validation():
    with pytest.raises(ValidationError):
        SyntheticSubjectSpec(0.0, 1.0, 0.5)
    with pytest.raises(ValidationError):
        SyntheticSubjectSpec(1.0, 1.0, 1.5)
    with pytest.raises(ValidationError):
        ProtocolSchedule((30.0, 15.0))


def test_seeded_determinism(tmp_path):
    a = generate_cohort(6, seed=5)
    b = generate_cohort(6, seed=5)
    pa = write_dataset(tmp_path / "a", a)
    pb = write_dataset(tmp_path / "b", b)
    for key in pa:
        assert pa[key].read_bytes() == pb[key].read_bytes()
    c = generate_cohort(6, seed=6)
    assert [r.truth["true_k"] for r in c] != [r.truth["true_k"] for r in a]


def test_single_subject():
    (rec,) = generate_cohort(1)
    assert rec.id == "S001" and len(rec.sessions) == 9 and rec.mvc_trials


def test_empty_cohort_rejected():
    with pytest.raises(ValidationError):
        generate_cohort(0)


def test_force_space_cohort():
    cfg = RunConfig(space="force")
    recs = generate_cohort(30, space="force", config=cfg)
    fs = [r.truth["f_mvc"] for r in recs]
    assert min(fs) >= cfg.relative_load_min and max(fs) <= cfg.relative_load_max
    assert all(r.task_load == pytest.approx(r.truth["f_mvc"] * r.truth["true_capacity_max"])
               for r in recs)
    assert not any(r.markers for r in recs)


def test_quantized_force_space():
    cfg = RunConfig(space="force", quantize_n=1.0)
    for r in generate_cohort(5, space="force", config=cfg):
        assert all(float(v).is_integer() for v in r.mvc_trials)
        assert all(float(m.value).is_integer() for m in r.sessions)


def test_coupling_recovers_correlation():
    rs = []
    for seed in range(50):
        recs = generate_cohort(40, seed=seed, space="force", config=RunConfig(space="force"))
        k = [r.truth["true_k"] for r in recs]
        s = [r.truth["true_capacity_max"] for r in recs]
        rs.append(pearson(k, s)[0])
    assert abs(np.mean(rs) - 0.6) < 0.15


def test_zero_coupling_independent():
    rng = np.random.default_rng(1)
    u1, u2 = coupled_draws(5000, 0.0, rng)
    assert abs(np.corrcoef(u1, u2)[0, 1]) < 3 / math.sqrt(5000)
    with pytest.raises(ValidationError):
        coupled_draws(10, 1.5, rng)


def test_marginals():
    recs = generate_cohort(2000, seed=3, space="force", config=RunConfig(space="force"))
    k = np.array([r.truth["true_k"] for r in recs])
    assert k.min() > 0
    # truncation at zero lifts the mean slightly above the location parameter
    assert k.mean() == pytest.approx(1.02, abs=0.06)
    assert k.std() == pytest.approx(0.49, abs=0.05)


def test_moment_cohort_geometry():
    recs = generate_cohort(3)
    for r in recs:
        assert r.truth["unit"] == "moment"
        frames = r.markers[0.0]
        p = posture_angles(frames[0])
        assert p.q1 == pytest.approx(46.4, abs=1e-9) and p.q2 == pytest.approx(50.1, abs=1e-9)
        assert len(frames) == 30
        assert all(m.value > 0 for m in r.sessions)


def test_hanging_posture_colinear():
    f = frame_from_posture(0.0, 0.0, 0.3, 0.25)
    for p in (f.e, f.w, f.d):
        assert p[0] == 0 and p[1] == 0
    assert f.s[2] > f.e[2] > f.w[2] > f.d[2]


def test_marker_trace_round_trip():
    traj = mean_posture_trajectory()
    frames = generate_marker_trace(Anthropometry(70.2, 1.712, 0.236, 0.256), traj, 30.0)
    assert check_posture_round_trip(frames, traj) < 1e-9
    assert frames[1].timestamp == pytest.approx(1 / 30)
    seg = [np.linalg.norm(f.e - f.s) for f in frames]
    np.testing.assert_allclose(seg, 0.236, rtol=1e-14)


def test_sessions_unit_tag():
    s = generate_sessions(SyntheticSubjectSpec(1.0, 40.0, 0.3, unit=Unit.MOMENT))
    assert all(m.unit is Unit.MOMENT for m in s)
