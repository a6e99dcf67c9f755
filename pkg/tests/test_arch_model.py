import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from archdmem.arch_model import (
    GROUND,
    Material,
    MeshError,
    ModelMesh,
    annular_sector_volume,
    build_circular_arch,
    compute_element_geometry,
    extrados_point,
    make_interface,
    validate_mesh,
    with_point_load,
)

RECT = [(0.0, 0.0), (3.0, 0.0), (3.0, 2.0), (0.0, 2.0)]


class TestElementGeometry:
    def test_rectangle(self):
        el = compute_element_geometry(RECT, 5.0)
        assert el.area == pytest.approx(6.0)
        np.testing.assert_allclose(el.centroid, [1.5, 1.0])
        np.testing.assert_allclose(el.angles, np.full(4, math.pi / 2))
        np.testing.assert_allclose(el.side_lengths, [3, 2, 3, 2])
        np.testing.assert_allclose(el.e_x, [1, 0])
        np.testing.assert_allclose(el.e_y, [0, 1])

    def test_edges_are_one_based(self):
        el = compute_element_geometry(RECT, 1.0)
        a, b = el.edge(4)
        np.testing.assert_allclose(a, [0, 2])
        np.testing.assert_allclose(b, [0, 0])

    def test_trapezoid_centroid(self):
        el = compute_element_geometry([(0, 0), (4, 0), (3, 1), (1, 1)], 1.0)
        assert el.area == pytest.approx(3.0)
        # centroid height of a trapezoid: h (b + 2a) / (3 (a + b)) with a = top, b = bottom
        assert el.centroid[1] == pytest.approx(1.0 * (4 + 2 * 2) / (3 * 6))

    @pytest.mark.parametrize(
        "verts, msg",
        [
            (RECT[::-1], "anti-clockwise"),
            ([(0, 0), (1, 1), (1, 0), (0, 1)], "self-intersecting"),
            ([(0, 0), (2, 0), (1, 0.2), (1, 2)], "convex"),
            ([(0, 0), (0, 0), (1, 1), (0, 1)], "zero-length"),
        ],
    )
    def test_infeasible_quadrilaterals(self, verts, msg):
        with pytest.raises(MeshError, match=msg):
            compute_element_geometry(verts, 1.0)

    def test_nonpositive_thickness(self):
        with pytest.raises(MeshError, match="thickness"):
            compute_element_geometry(RECT, 0.0)

    @given(
        st.floats(0.5, 10), st.floats(0.5, 10), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.floats(0, 2 * math.pi)
    )
    def test_angles_sum_to_two_pi(self, a, h, skew, taper, rot):
        verts = np.array([(0, 0), (a, 0), (a + skew * a, h), (taper * a, h)], float)
        c, s = math.cos(rot), math.sin(rot)
        verts = verts @ np.array([[c, s], [-s, c]])
        el = compute_element_geometry(verts, 1.0)
        assert float(np.sum(el.angles)) == pytest.approx(2 * math.pi, abs=1e-12)
        assert el.area > 0


class TestMaterial:
    def test_default_shear_modulus(self):
        assert Material(E=2600.0, nu=0.3).G == pytest.approx(1000.0)

    def test_explicit_shear_modulus(self):
        assert Material(E=3790.0, G_shear=1516.0).G == 1516.0

    def test_violations(self):
        bad = Material(E=-1.0, nu=0.5, f_t=-1.0, mu=-0.1)
        msgs = " ".join(bad.violations())
        for key in ("E", "nu", "f_t", "mu"):
            assert key in msgs
        assert Material(E=1.0).violations() == []


class TestCircularArch:
    def test_counts_and_validity(self, small_arch):
        assert small_arch.n_elements == 13
        assert len(small_arch.interfaces) == 14
        assert small_arch.interfaces[0].p == GROUND
        assert small_arch.interfaces[-1].q == GROUND
        assert validate_mesh(small_arch) == []

    def test_volume_preserved(self, no_tension_material):
        m = build_circular_arch(8900, 2661, 600, 1000, 39, no_tension_material, 10)
        vol = sum(el.area * el.thickness for el in m.elements)
        assert vol == pytest.approx(annular_sector_volume(8900, 2661, 600, 1000), rel=1e-12)

    def test_mirror_symmetry(self, small_arch):
        n = small_arch.n_elements
        span = small_arch.meta["circular_arch"]["inner_span"]
        for k in range(n):
            a = small_arch.elements[k].vertices
            b = small_arch.elements[n - 1 - k].vertices
            # vertex 1 of k mirrors vertex 2 of the mirrored element, 4 mirrors 3
            mirrored = np.column_stack([span - b[[1, 0, 3, 2], 0], b[[1, 0, 3, 2], 1]])
            np.testing.assert_allclose(a, mirrored, atol=1e-9)

    @pytest.mark.parametrize(
        "args",
        [(0, 1, 1, 1, 5), (10, 6, 1, 1, 5), (10, 2, 1, 1, 2), (10, 2, -1, 1, 5)],
    )
    def test_rejects_infeasible(self, args, no_tension_material):
        with pytest.raises(MeshError):
            build_circular_arch(*args, no_tension_material)

    @settings(max_examples=25, deadline=None)
    @given(
        span=st.floats(1000, 20000),
        rise_ratio=st.floats(0.1, 0.5),
        t_ratio=st.floats(0.02, 0.2),
        n=st.integers(3, 40),
        n_f=st.integers(2, 12),
    )
    def test_generated_meshes_are_valid(self, span, rise_ratio, t_ratio, n, n_f):
        m = build_circular_arch(span, rise_ratio * span, t_ratio * span, 1000.0, n, Material(E=1000.0), n_f)
        assert validate_mesh(m) == []
        vol = sum(el.area * el.thickness for el in m.elements)
        assert vol == pytest.approx(annular_sector_volume(span, rise_ratio * span, t_ratio * span, 1000.0), rel=1e-10)


class TestLoadPosition:
    def test_crown(self, small_arch):
        e, p = extrados_point(small_arch, 0.5)
        assert e == 6
        assert p[0] == pytest.approx(2000.0)

    def test_overall_length_convention(self, small_arch):
        # x/L runs over span + 2 t starting one thickness left of the springing
        e, p = extrados_point(small_arch, 0.25)
        assert p[0] == pytest.approx(-300.0 + 0.25 * 4600.0)

    def test_outside(self, small_arch):
        with pytest.raises(MeshError, match="outside"):
            extrados_point(small_arch, 0.0002)

    def test_with_point_load_sets_monitor(self, small_arch):
        m = with_point_load(small_arch, 0.3)
        assert m.monitored == m.point_loads[0]
        assert m.meta["load_position"] == 0.3


class TestValidateMesh:
    def test_detects_orientation(self, small_arch):
        el = small_arch.elements[3]
        flipped = replace(el, vertices=el.vertices[::-1].copy())
        bad = ModelMesh([*small_arch.elements[:3], flipped, *small_arch.elements[4:]], small_arch.materials, small_arch.interfaces)
        assert any("orientation" in m for m in validate_mesh(bad))

    def test_detects_non_coincident_edges(self, small_arch):
        els = list(small_arch.elements)
        moved = compute_element_geometry(els[5].vertices + np.array([5.0, 0.0]), els[5].thickness)
        els[5] = moved
        bad = ModelMesh(els, small_arch.materials, small_arch.interfaces)
        assert any("coincidence" in m for m in validate_mesh(bad))

    def test_detects_missing_support(self, small_arch):
        inner = [itf for itf in small_arch.interfaces if not itf.is_ground]
        bad = ModelMesh(small_arch.elements, small_arch.materials, inner)
        assert any("unrestrained" in m for m in validate_mesh(bad))

    def test_detects_material_errors(self, small_arch):
        mats = [Material(E=-1.0)] * small_arch.n_elements
        bad = ModelMesh(small_arch.elements, mats, small_arch.interfaces)
        assert any("E must be" in m for m in validate_mesh(bad))


class TestInterfaces:
    def test_frame_and_sides(self, small_arch):
        for itf in small_arch.interfaces:
            assert itf.e_xi @ itf.e_eta == pytest.approx(0.0, abs=1e-12)
            assert np.linalg.norm(itf.e_eta) == pytest.approx(1.0)

    def test_fiber_areas_tile_interface(self, small_arch):
        itf = small_arch.interfaces[4]
        assert float(np.sum(itf.tributary_areas)) == pytest.approx(itf.length * 1000.0)
        np.testing.assert_allclose(itf.xi, (np.arange(8) + 0.5) / 8)

    def test_rejects_ground_to_ground(self, small_arch):
        with pytest.raises(MeshError):
            make_interface(small_arch.elements, GROUND, None, GROUND, None, 4)

    def test_rejects_single_fiber(self, small_arch):
        with pytest.raises(MeshError, match="n_f"):
            make_interface(small_arch.elements, 0, 2, 1, 4, 1)
