import csv

import numpy as np
import pytest

from ckytool import charts as ch
from ckytool import forms as fm
from ckytool import flow as fl
from ckytool import shapes
from ckytool.identities import evaluate_F
from ckytool import surfaces as sf
from ckytool.charts import ANTI_DE_SITTER, DE_SITTER, MINKOWSKI


def _ambient_line_error(spacetime, steps, ds):
    """Null geodesics of the quadric are straight ambient lines y0 + s·dy(V0)."""
    mesh = sf.build_mesh(shapes.sphere(spacetime, 0.4), 6)
    state = fl.initial_state(mesh)
    y0 = np.asarray(ch.embed(spacetime, state.X))
    k = np.einsum("mak,ak->mk", np.asarray(ch.ambient_differentials(spacetime, state.X)), state.V)
    cfg = fl.FlowConfig(ds=ds)
    for _ in range(steps):
        state = fl.step_flow(state, cfg)
    return np.max(np.abs(np.asarray(ch.embed(spacetime, state.X)) - (y0 + steps * ds * k)))


@pytest.mark.parametrize("spacetime", [ANTI_DE_SITTER, DE_SITTER])
def test_null_geodesics_are_ambient_lines(spacetime):
    assert _ambient_line_error(spacetime, 10, 0.03) < 1e-6


def test_rk4_convergence_order():
    e1 = _ambient_line_error(DE_SITTER, 4, 0.1)
    e2 = _ambient_line_error(DE_SITTER, 8, 0.05)
    assert np.log2(e1 / e2) == pytest.approx(4.0, abs=0.5)


def test_minkowski_steps_are_straight():
    base = shapes.cap(MINKOWSKI, 0.75)
    state = fl.initial_state(sf.build_mesh(shapes.null_shifted(base, 0.3), 12))
    nxt = fl.step_flow(state, fl.FlowConfig(ds=0.1))
    np.testing.assert_allclose(nxt.X, state.X + 0.1 * state.V, atol=1e-14)
    np.testing.assert_allclose(nxt.V, state.V, atol=1e-14)


def test_null_shift_lands_on_slice():
    base = shapes.cap(MINKOWSKI, 0.75)
    surf = shapes.null_shifted(base, 0.5)
    mesh = sf.build_mesh(surf, 12)
    np.testing.assert_allclose(mesh.X[0], -0.5, atol=1e-14)
    assert np.max(sf.support_distance(mesh, surf.support)) < 1e-13


def test_round_cap_flow_is_shear_free_and_constant():
    surf = shapes.null_shifted(shapes.cap(MINKOWSKI, 0.75), 0.5)
    trace = fl.run_flow(sf.build_mesh(surf, 16), fl.FlowConfig(ds=0.05, max_steps=20), fm.composite(MINKOWSKI, 3))
    assert trace.status == "reached_slice"
    assert len(trace.records) == 11
    assert np.ptp(trace.F) < 1e-9
    assert max(r.shear for r in trace.records) < 1e-6
    assert max(r.boundary_residual for r in trace.records) < 1e-12
    assert max(r.lbar_orthogonality for r in trace.records) < 1e-12


def test_perturbed_cap_flow_decreases_F():
    surf = shapes.null_shifted(shapes.ellipsoidal_cap(MINKOWSKI, 0.75, bump=0.8), 0.5)
    Q = fm.composite(MINKOWSKI, 3)
    trace = fl.run_flow(sf.build_mesh(surf, 16), fl.FlowConfig(ds=0.05, max_steps=20), Q)
    assert trace.status == "reached_slice"
    assert trace.max_increase() < 0
    assert max(r.shear for r in trace.records) > 1e-2
    # the flow ends on the slice surface it was shifted from
    assert trace.F[-1] == pytest.approx(evaluate_F(sf.build_mesh(shapes.ellipsoidal_cap(MINKOWSKI, 0.75, bump=0.8), 16), Q), abs=1e-6)


def test_inward_surface_stops_gracefully():
    mesh = sf.build_mesh(shapes.sphere(MINKOWSKI, 1.0, inward=True, time_wiggle=0.1), 8)
    trace = fl.run_flow(mesh, fl.FlowConfig(max_steps=3), fm.composite(MINKOWSKI, 3))
    assert trace.status == "geometry_error"
    assert "<H, Lbar>" in trace.message


def test_max_steps_status():
    surf = shapes.null_shifted(shapes.cap(MINKOWSKI, 0.75), 0.5)
    trace = fl.run_flow(sf.build_mesh(surf, 12), fl.FlowConfig(ds=0.05, max_steps=3), fm.composite(MINKOWSKI, 3))
    assert trace.status == "max_steps"
    assert len(trace.records) == 4


def test_trace_csv(tmp_path):
    surf = shapes.null_shifted(shapes.cap(MINKOWSKI, 0.75), 0.1)
    trace = fl.run_flow(sf.build_mesh(surf, 12), fl.FlowConfig(ds=0.05), fm.composite(MINKOWSKI, 3))
    path = tmp_path / "trace.csv"
    trace.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["s", "F_value", "max_x0", "shear", "boundary_residual"]
    assert len(rows) == len(trace.records) + 1


@pytest.mark.parametrize(
    "kwargs", [dict(phi_mode="bogus"), dict(ds=0.0), dict(max_steps=-1), dict(slice_tolerance=0.0), dict(phi_scale=0.0)]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        fl.FlowConfig(**kwargs)


def test_null_shift_is_minkowski_only():
    with pytest.raises(ValueError):
        shapes.null_shifted(shapes.cap(DE_SITTER, 0.2), 0.1)
