import json

import numpy as np
import pytest
from numpy.random import default_rng

from trimlpf import (MpsConstraint, MpsFormatError, MpsModel, MpsVariable,
                     RegressionProblem, TrimConfig, build_trim_model,
                     export_mps, parse_mps, write_mps)


def tiny_problem():
    # values chosen exactly representable in <= 12 significant digits
    return RegressionProblem(np.array([[1.0], [2.0]]),
                             np.array([[2.0], [5.0]]), fit_intercept=False)


def dyadic_problem(seed=0, m=6, n_x=2, n_y=2):
    rng = default_rng(seed)
    x = rng.integers(-16, 17, size=(m, n_x)) / 8.0
    y = rng.integers(-16, 17, size=(m, n_y)) / 8.0
    return RegressionProblem(x, y)


class TestMiqpStructure:
    def setup_method(self):
        self.model = build_trim_model(tiny_problem(), TrimConfig(p=0.5),
                                      which="miqp")

    def test_column_census(self):
        kinds = [v.kind for v in self.model.variables]
        assert kinds.count("coef") == 1
        assert kinds.count("aux_quad") == 2
        assert kinds.count("flag") == 2
        assert len(kinds) == 5

    def test_flags_are_binary_and_last(self):
        flags = [v for v in self.model.variables if v.kind == "flag"]
        assert all(v.integer and v.bound == "BV" for v in flags)
        assert self.model.variables[-2:] == flags
        assert not any(v.integer for v in self.model.variables[:-2])

    def test_quadratic_diagonal(self):
        quad = self.model.objective_quadratic
        aux = [v.name for v in self.model.variables if v.kind == "aux_quad"]
        assert set(quad) == {(u, u) for u in aux}
        assert all(c == 2.0 for c in quad.values())
        assert self.model.objective_linear == {}

    def test_row_census(self):
        names = self.model.constraint_names()
        assert len(names) == 5
        assert names[-1] == "CARD"
        assert sum(n.startswith("RA") for n in names) == 2
        assert sum(n.startswith("RB") for n in names) == 2
        assert all(c.sense == "L" for c in self.model.constraints)

    def test_residual_rows_encode_the_data(self):
        prob = tiny_problem()
        coef = next(v.name for v in self.model.variables if v.kind == "coef")
        flags = [v.name for v in self.model.variables if v.kind == "flag"]
        by_name = {c.name: c for c in self.model.constraints}
        for i in range(2):
            ra = by_name[f"RA{i + 1:06d}"]
            rb = by_name[f"RB{i + 1:06d}"]
            assert ra.coeffs[coef] == prob.x[i, 0]
            assert rb.coeffs[coef] == -prob.x[i, 0]
            assert ra.rhs == prob.y[i, 0]
            assert rb.rhs == -prob.y[i, 0]
            assert ra.coeffs[flags[i]] == -1e6

    def test_budget_row(self):
        card = self.model.constraints[-1]
        assert card.rhs == 1.0
        assert set(card.coeffs) == {v.name for v in self.model.variables
                                    if v.kind == "flag"}

    def test_meta_block(self):
        meta = self.model.meta
        assert meta["which"] == "miqp"
        assert meta["budget"] == 1
        assert meta["m"] == 2 and meta["n_x"] == 1 and meta["n_y"] == 1
        assert meta["fit_intercept"] is False
        assert len(meta["columns"]) == 5


class TestMilpStructure:
    def setup_method(self):
        self.model = build_trim_model(tiny_problem(), TrimConfig(p=0.5),
                                      which="milp")

    def test_column_census(self):
        kinds = [v.kind for v in self.model.variables]
        assert kinds.count("coef") == 1
        assert kinds.count("slack") == 2
        assert kinds.count("pos_part") == 2
        assert kinds.count("neg_part") == 2
        assert kinds.count("flag") == 2
        assert len(kinds) == 9

    def test_row_census(self):
        names = self.model.constraint_names()
        assert len(names) == 7
        assert sum(n.startswith("RD") for n in names) == 2
        assert sum(n.startswith("RA") for n in names) == 2
        assert sum(n.startswith("RB") for n in names) == 2

    def test_linear_objective_sums_residual_parts(self):
        parts = {v.name for v in self.model.variables
                 if v.kind in ("pos_part", "neg_part")}
        assert set(self.model.objective_linear) == parts
        assert all(c == 1.0 for c in self.model.objective_linear.values())
        assert self.model.objective_quadratic == {}

    def test_split_rows_balance(self):
        by_name = {c.name: c for c in self.model.constraints}
        rd = by_name["RD000001"]
        assert rd.sense == "E"
        pos = [n for n in rd.coeffs if n.startswith("P")]
        neg = [n for n in rd.coeffs if n.startswith("N")]
        assert rd.coeffs[pos[0]] == -1.0 and rd.coeffs[neg[0]] == 1.0


def test_zero_budget_card_row_has_zero_rhs(tmp_path):
    model = build_trim_model(dyadic_problem(), TrimConfig(p=0.0))
    assert model.constraints[-1].rhs == 0.0
    path = tmp_path / "zero.mps"
    write_mps(model, path)
    rhs_lines = [ln for ln in path.read_text().splitlines()
                 if ln.startswith("    RHS")]
    assert all("CARD" not in ln for ln in rhs_lines)
    assert parse_mps(path).constraints[-1].rhs == 0.0


def test_writer_uses_fixed_fields(tmp_path):
    path = tmp_path / "tiny.mps"
    export_mps(tiny_problem(), TrimConfig(p=0.5), "miqp", path)
    text = path.read_text().splitlines()
    col_lines = [ln for ln in text if ln[1:].lstrip().startswith("OM")]
    assert col_lines
    for ln in col_lines:
        assert ln[4:6] == "OM"          # name field opens at column 5
        assert ln[14] not in (" ", "")  # row name field at column 15
        assert ln[24] != " "            # first value field at column 25
    marker_lines = [ln for ln in text if "'MARKER'" in ln]
    assert any("'INTORG'" in ln for ln in marker_lines)
    assert any("'INTEND'" in ln for ln in marker_lines)
    assert text[-1] == "ENDATA"


def test_sidecar_describes_columns(tmp_path):
    path = tmp_path / "tiny.mps"
    model = export_mps(tiny_problem(), TrimConfig(p=0.5), "miqp", path)
    sidecar = json.loads(path.with_suffix(".json").read_text())
    assert sidecar["schema"] == 1
    assert sidecar["which"] == "miqp"
    assert sidecar["budget"] == 1
    assert set(sidecar["columns"]) == {v.name for v in model.variables}
    roles = {c["kind"] for c in sidecar["columns"].values()}
    assert roles == {"coef", "aux_quad", "flag"}


@pytest.mark.parametrize("which", ["miqp", "milp"])
def test_round_trip_preserves_model(tmp_path, which):
    prob = dyadic_problem(seed=3)
    cfg = TrimConfig(p=0.25, big_m=1024.0)
    path = tmp_path / f"{which}.mps"
    model = export_mps(prob, cfg, which, path)
    back = parse_mps(path)
    assert back.objective_name == model.objective_name
    assert back.objective_linear == model.objective_linear
    assert back.objective_quadratic == model.objective_quadratic
    assert [v.name for v in back.variables] == [v.name for v in model.variables]
    assert [(v.bound, v.integer) for v in back.variables] == \
        [(v.bound, v.integer) for v in model.variables]
    assert len(back.constraints) == len(model.constraints)
    for got, want in zip(back.constraints, model.constraints):
        assert got.name == want.name and got.sense == want.sense
        assert got.rhs == want.rhs
        assert got.coeffs == want.coeffs


def test_second_write_is_byte_identical(tmp_path):
    first = tmp_path / "a.mps"
    second = tmp_path / "b.mps"
    export_mps(dyadic_problem(seed=9, m=8), TrimConfig(p=0.25), "miqp", first)
    write_mps(parse_mps(first), second)
    assert first.read_bytes() == second.read_bytes()


def test_unknown_encoding_rejected():
    with pytest.raises(ValueError):
        build_trim_model(tiny_problem(), TrimConfig(p=0.5), which="qp")


def test_validate_catches_undeclared_columns():
    model = MpsModel("X", "OBJ", {}, {},
                     [MpsVariable("A", "coef", "FR")],
                     [MpsConstraint("R1", "L", {"A": 1.0, "GHOST": 2.0}, 0.0)])
    with pytest.raises(MpsFormatError):
        model.validate()


def test_parser_rejects_malformed_input(tmp_path):
    bad = tmp_path / "bad.mps"
    bad.write_text("NAME X\nROWS\n Q R1\nENDATA\n")
    with pytest.raises(MpsFormatError):
        parse_mps(bad)
    bad.write_text("NAME X\nROWS\n L R1\nENDATA\n")
    with pytest.raises(MpsFormatError):
        parse_mps(bad)  # no objective row
    bad.write_text("NAME X\nROWS\n N OBJ\n N OBJ2\nENDATA\n")
    with pytest.raises(MpsFormatError):
        parse_mps(bad)


def test_export_without_path_only_builds(tmp_path):
    model = export_mps(tiny_problem(), TrimConfig(p=0.5))
    assert isinstance(model, MpsModel)
    assert not list(tmp_path.iterdir())
