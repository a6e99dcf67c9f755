import json
import math

import numpy as np
import pytest

from archdmem.model_io import (
    DEFAULT_ANALYSIS,
    ModelFileError,
    fixture_path,
    load_model,
    model_from_dict,
    schema_diagnostics,
    set_parameter,
    set_thickness_ratio,
    with_overrides,
)


@pytest.fixture
def bridge_data():
    return json.loads(fixture_path("drosopoulos_bridge").read_text())


def two_blocks():
    return {
        "geometry": {
            "elements": [
                {"vertices": [[0, 0], [1000, 0], [1000, 500], [0, 500]], "thickness": 300},
                {"vertices": [[0, 500], [1000, 500], [1000, 1000], [0, 1000]], "thickness": 300},
            ],
            "interfaces": [{"p": "ground", "q": 0, "edge_q": 1}, {"p": 0, "q": 1, "edge_p": 3, "edge_q": 1}],
            "n_f": 6,
        },
        "material": {"E": 5000, "nu": 0.3, "w": 22},
        "loads": {"point_load": {"element": 1, "point": [0, 1000], "direction": [1, 0]}},
        "analysis": {},
    }


class TestFixtures:
    @pytest.mark.parametrize("name", ["ramos_arch", "drosopoulos_bridge"])
    def test_fixtures_load(self, name):
        model = load_model(fixture_path(name))
        assert model.mesh.n_elements == model.data["geometry"]["circular_arch"]["n_voussoirs"]
        assert model.mesh.monitored is not None

    def test_reference_values(self):
        ref = load_model(fixture_path("ramos_arch")).reference
        assert len(ref["frequencies"]) == 4
        assert ref["peak_load"] > ref["residual_load"] > 0

    def test_infinite_values(self):
        m = load_model(fixture_path("drosopoulos_bridge")).mesh.materials[0]
        assert math.isinf(m.f_m) and math.isinf(m.G_t)

    def test_missing_fixture(self):
        with pytest.raises(FileNotFoundError):
            fixture_path("nope")


class TestValidation:
    def test_schema_errors_name_the_field(self, bridge_data):
        bridge_data["material"]["E"] = -1
        del bridge_data["geometry"]["circular_arch"]["thickness"]
        with pytest.raises(ModelFileError) as err:
            model_from_dict(bridge_data, "bad.json")
        text = str(err.value)
        assert text.startswith("bad.json")
        assert "material/E" in text
        assert "thickness" in text
        assert len(err.value.diagnostics) >= 2

    def test_diagnostics_order_is_stable(self, bridge_data):
        bridge_data["material"]["mu"] = "x"
        bridge_data["analysis"]["tol"] = "y"
        assert schema_diagnostics(bridge_data) == schema_diagnostics(json.loads(json.dumps(bridge_data)))

    def test_material_invariants(self, bridge_data):
        bridge_data["material"]["nu"] = 0.6
        with pytest.raises(ModelFileError, match="nu"):
            model_from_dict(bridge_data)

    def test_bad_json_reports_position(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text('{"geometry": {,}')
        with pytest.raises(ModelFileError, match="line 1, column"):
            load_model(p)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ModelFileError, match="cannot read"):
            load_model(tmp_path / "missing.json")

    def test_unknown_element_reference(self):
        data = two_blocks()
        data["geometry"]["interfaces"][1]["q"] = 5
        with pytest.raises(ModelFileError, match="element 5 does not exist"):
            model_from_dict(data)

    def test_load_outside_geometry(self, bridge_data):
        bridge_data["loads"]["point_load"]["x_over_span"] = 1.5
        with pytest.raises(ModelFileError):
            model_from_dict(bridge_data)


class TestExplicitGeometry:
    def test_round_trip(self):
        model = model_from_dict(two_blocks())
        assert model.mesh.n_elements == 2
        assert len(model.mesh.interfaces) == 2
        assert model.mesh.interfaces[0].is_ground
        assert model.mesh.point_loads[0].direction == (1, 0)
        assert model.analysis == DEFAULT_ANALYSIS

    def test_gravity_switch(self):
        data = two_blocks()
        data["loads"]["gravity"] = False
        assert not model_from_dict(data).mesh.gravity


class TestOverrides:
    def test_precedence(self, bridge_data, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps(bridge_data))
        model = load_model(p, {"step": 0.5, "tol": None})
        assert model.analysis["step"] == 0.5
        assert model.analysis["tol"] == bridge_data["analysis"].get("tol", DEFAULT_ANALYSIS["tol"])
        assert model.analysis["gravity_steps"] == DEFAULT_ANALYSIS["gravity_steps"] or "gravity_steps" in bridge_data["analysis"]
        assert model.protocol.step_size == 0.5

    def test_does_not_mutate(self, bridge_data):
        before = json.dumps(bridge_data, sort_keys=True)
        with_overrides(bridge_data, {"target_displacement": 1.0})
        set_parameter(bridge_data, "mu", 0.3)
        assert json.dumps(bridge_data, sort_keys=True) == before

    def test_options(self, bridge_data):
        model = model_from_dict(with_overrides(bridge_data, {"rigid_shear": True, "penalty_factor": 3.0}))
        assert model.options.rigid_shear and model.options.penalty_factor == 3.0


class TestParameterEdits:
    def test_material_parameters(self, bridge_data):
        assert set_parameter(bridge_data, "mu", 0.3)["material"]["mu"] == 0.3
        assert set_parameter(bridge_data, "G_t", math.inf)["material"]["G_t"] == "inf"

    def test_load_position_keeps_direction(self, bridge_data):
        bridge_data["loads"]["point_load"]["direction"] = [0, -1]
        out = set_parameter(bridge_data, "x_over_span", 0.3)
        assert out["loads"]["point_load"] == {"x_over_span": 0.3, "direction": [0, -1]}

    def test_unknown_parameter(self, bridge_data):
        with pytest.raises(ValueError):
            set_parameter(bridge_data, "E", 1.0)

    @pytest.mark.parametrize("ratio", [0.05, 0.1, 0.3])
    def test_thickness_ratio_keeps_mean_radius_and_angle(self, bridge_data, ratio):
        def mean_radius_and_angle(ca):
            s, r, t = ca["inner_span"], ca["inner_rise"], ca["thickness"]
            R_i = (0.25 * s * s + r * r) / (2 * r)
            return R_i + 0.5 * t, math.asin(0.5 * s / R_i)

        ca = bridge_data["geometry"]["circular_arch"]
        out = set_thickness_ratio(bridge_data, ratio)["geometry"]["circular_arch"]
        R0, a0 = mean_radius_and_angle(ca)
        R1, a1 = mean_radius_and_angle(out)
        np.testing.assert_allclose([R1, a1], [R0, a0], rtol=1e-12)
        assert out["thickness"] == pytest.approx(ratio * R0)

    def test_thickness_ratio_limits(self, bridge_data):
        with pytest.raises(ValueError):
            set_thickness_ratio(bridge_data, 2.5)
        with pytest.raises(ValueError):
            set_thickness_ratio(two_blocks(), 0.1)
