import json
import math
from pathlib import Path

import numpy as np
import pytest

import kinfit

REPO_ROOT = Path(__file__).resolve().parents[2]


def make_cloud(kind=kinfit.ShapeKind.CYLINDER, samples=500, noise=0.0, seed=1):
    spec = kinfit.ShapeSpec()
    spec.kind = kind
    spec.samples = samples
    spec.noise_sigma = noise
    spec.seed = seed
    return kinfit.generate(spec)


def test_generate_and_arrays():
    cloud = make_cloud()
    assert len(cloud) == 500
    assert cloud.positions.shape == (500, 3)
    norms = np.linalg.norm(cloud.normals, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-12)


def test_cloud_from_numpy_round_trip():
    cloud = make_cloud(samples=200)
    rebuilt = kinfit.PointCloud(cloud.positions, cloud.normals)
    assert np.allclose(rebuilt.positions, cloud.positions)
    assert np.allclose(rebuilt.normals, cloud.normals)


def test_first_order_cylinder_fit():
    cloud = make_cloud()
    config = kinfit.FitConfig()
    config.order = kinfit.FieldOrder.FIRST
    report = kinfit.fit(cloud, config)
    assert report.rmse < 1e-8
    axis = report.params.r / np.linalg.norm(report.params.r)
    assert abs(abs(axis[2]) - 1.0) < 1e-6


def test_velocity_evaluation_matches_definition():
    m = kinfit.FieldParams()
    m.order = kinfit.FieldOrder.FIRST
    m.r = np.array([0.0, 0.0, 1.0])
    m.c = np.array([0.1, -0.2, 0.3])
    m.gamma = 0.25
    p = np.array([1.0, 2.0, -0.5])
    expected = np.cross(m.r, p) + m.gamma * p + m.c
    assert np.allclose(kinfit.eval_velocity(p, m), expected, atol=1e-14)


def test_streamline_and_closed_form_agree():
    m = kinfit.FieldParams()
    m.order = kinfit.FieldOrder.FIRST
    m.r = np.array([0.0, 0.0, 1.0])
    m.gamma = 0.1
    opts = kinfit.StreamlineOptions()
    opts.step = 1e-3
    opts.n_steps = 1000
    seed = np.array([1.0, 0.0, 0.0])
    result = kinfit.streamline_integrate(m, seed, opts)
    exact = kinfit.streamline_closed_form(m, seed, opts.step * result.steps_taken)
    assert np.linalg.norm(result.line.points[-1] - exact) < 1e-9


def test_robust_fit_flags_outliers():
    base = make_cloud(kinfit.ShapeKind.CYLINDER, samples=700, noise=0.01, seed=3)
    outlier_spec = kinfit.ShapeSpec()
    outlier_spec.kind = kinfit.ShapeKind.CYLINDER_OUTLIER
    outlier_spec.samples = 150
    outlier_spec.radius = 0.3
    outlier_spec.seed = 7
    outlier_spec.offset = np.array([2.5, 1.5, 0.5])
    outlier_spec.axis = np.array([0.3, 0.2, 1.0])
    cloud, inlier = kinfit.merge_with_outlier(base, kinfit.generate(outlier_spec))

    config = kinfit.FitConfig()
    config.order = kinfit.FieldOrder.FIRST
    config.robust = True
    report = kinfit.fit(cloud, config)
    z = np.asarray(report.weights)
    labels = np.asarray(inlier)
    assert np.median(z[labels]) > np.median(z[~labels])
    assert report.nu is not None and report.nu > 0.0


def test_core_line_of_rotational_field():
    m = kinfit.FieldParams()
    m.order = kinfit.FieldOrder.FIRST
    m.r = np.array([0.1, -0.2, 0.9])
    m.c = np.array([0.15, 0.1, -0.05])
    m.gamma = -0.2
    lines = kinfit.extract_core_lines(m, kinfit.CoreLineConfig())
    assert len(lines) >= 1
    p0, direction = kinfit.symmetry_axis_first_order(m)
    for line in lines:
        offsets = line.points - p0
        dist = np.linalg.norm(offsets - np.outer(offsets @ direction, direction), axis=1)
        assert dist.max() < 1e-3


def test_projection_metric_and_classification():
    m = kinfit.FieldParams()
    m.order = kinfit.FieldOrder.SECOND
    m.t = np.array([0.0, 0.0, 0.5])
    m.r = np.array([0.0, 0.0, 2.0])
    assert math.isclose(kinfit.projection_metric(m), 0.5, rel_tol=1e-12)

    first = kinfit.FieldParams()
    first.order = kinfit.FieldOrder.FIRST
    first.r = np.array([0.0, 0.0, 1.0])
    first.gamma = -0.3
    name, eigenvalues = kinfit.classify_critical_point(np.zeros(3), first)
    assert name == "spiral-sink"
    assert len(eigenvalues) == 3


def test_report_json_matches_schema(tmp_path):
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((REPO_ROOT / "schemas" / "fit_report.schema.json").read_text())

    for robust in (False, True):
        config = kinfit.FitConfig()
        config.order = kinfit.FieldOrder.SECOND
        config.robust = robust
        report = kinfit.fit(make_cloud(kinfit.ShapeKind.LOG_SPIRAL_TUBE, 600, 0.005), config)
        doc = json.loads(report.to_json())
        jsonschema.validate(doc, schema)

    path = tmp_path / "report.json"
    kinfit.write_report(report, path)
    jsonschema.validate(json.loads(path.read_text()), schema)


def test_cloud_io_round_trip(tmp_path):
    cloud = make_cloud(samples=150)
    path = tmp_path / "cloud.xyzn"
    kinfit.save_cloud_xyzn(cloud, path)
    loaded = kinfit.load_cloud(path)
    assert np.allclose(loaded.positions, cloud.positions, atol=1e-9)
    assert np.allclose(loaded.normals, cloud.normals, atol=1e-9)


def test_invalid_spec_raises():
    spec = kinfit.ShapeSpec()
    spec.samples = 10
    with pytest.raises(kinfit.KinfitError):
        kinfit.generate(spec)
