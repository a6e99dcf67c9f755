import csv

import numpy as np
import pytest

from archdmem.exports import (
    deformed_vertices,
    fmt,
    write_capacity_curve,
    write_damage_map,
    write_deformed_shape,
    write_mechanism,
    write_mesh,
    write_modal,
)
from archdmem.solver import AnalysisProtocol, CapacityCurve, ModalResult, run_static


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestFormat:
    def test_significant_digits(self):
        assert fmt(1.0 / 3.0) == "0.333333"
        assert fmt(123456789.0) == "1.23457e+08"
        assert fmt(np.float64(2.5)) == "2.5"

    def test_full_precision_round_trips(self):
        v = 1.0 / 3.0
        assert float(fmt(v, True)) == v

    def test_non_floats(self):
        assert fmt(True) == "1" and fmt(np.bool_(False)) == "0"
        assert fmt(7) == "7" and fmt("hinge") == "hinge"


class TestWriters:
    def test_capacity_curve(self, tmp_path):
        curve = CapacityCurve([0.0, 0.5], [0.0, 1.25], [10.0, 11.25])
        rows = read(write_capacity_curve(tmp_path / "c.csv", curve))
        assert rows == [["step", "displacement_mm", "load_kN", "base_reaction_kN"], ["0", "0", "0", "10"], ["1", "0.5", "1.25", "11.25"]]

    def test_modal_periods(self, tmp_path):
        rows = read(write_modal(tmp_path / "m.csv", ModalResult(np.array([2.0, 4.0]), np.zeros((8, 2)))))
        assert rows[1] == ["1", "2", "0.5"] and rows[2] == ["2", "4", "0.25"]

    def test_mechanism_normalised_with_sign_convention(self, tmp_path):
        rows = read(write_mechanism(tmp_path / "k.csv", np.array([0.1, -0.4, 0.2, 0.0])))
        values = [float(r[2]) for r in rows[1:]]
        assert values == pytest.approx([-0.25, 1.0, -0.5, 0.0])
        assert [r[1] for r in rows[1:]] == ["U", "V", "Phi", "Gamma"]

    def test_mesh_files(self, tmp_path, small_arch):
        elements, interfaces = write_mesh(tmp_path, small_arch)
        assert len(read(elements)) == 1 + 4 * small_arch.n_elements
        rows = read(interfaces)
        assert len(rows) == 1 + len(small_arch.interfaces)
        assert rows[1][1] == "ground"


class TestDeformedShape:
    def test_rigid_translation(self, small_arch):
        d = np.tile([1.5, -2.0, 0.0, 0.0], small_arch.n_elements)
        np.testing.assert_allclose(deformed_vertices(small_arch, d), np.broadcast_to([1.5, -2.0], (small_arch.n_elements, 4, 2)))

    def test_magnified_columns(self, tmp_path, small_arch):
        d = np.tile([0.0, -0.01, 0.0, 0.0], small_arch.n_elements)
        rows = read(write_deformed_shape(tmp_path / "s.csv", small_arch, d, magnification=50.0))
        x, y, ux, uy, xd, yd = map(float, rows[1][2:])
        assert xd == pytest.approx(x + 50 * ux) and yd == pytest.approx(y + 50 * uy)


class TestDeterminism:
    def test_repeated_runs_write_identical_files(self, tmp_path, small_arch_crown_load):
        proto = AnalysisProtocol(target_displacement=0.5)
        texts = []
        for k in range(2):
            res = run_static(small_arch_crown_load, proto)
            out = tmp_path / str(k)
            paths = [
                write_capacity_curve(out / "curve.csv", res.curve, True),
                write_damage_map(out / "damage.csv", res.structure, res.snapshots[-1], True),
            ]
            texts.append([p.read_text() for p in paths])
        assert texts[0] == texts[1]
