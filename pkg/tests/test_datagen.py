import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trimlpf import (Dataset, DatasetError, DatasetSchemaError, OutlierSpec,
                     build_ybus, generate_samples, inject_outliers,
                     injections_from_voltages, load_dataset, row_voltages,
                     save_dataset, solve_newton, strip_injected, to_problem)


def synthetic_dataset(m=30, n_x=3, n_y=2, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(m, n_x))
    w = rng.normal(size=(n_y, n_x))
    y = x @ w.T + 0.1 * rng.normal(size=(m, n_y))
    meta = {"case": "synthetic", "direction": "volt_to_power", "seed": seed}
    return Dataset(x, y, np.zeros(m, dtype=bool), meta)


def test_single_sample_unit_scale_is_the_base_solve(ieee9_case):
    ds = generate_samples(ieee9_case, 1, load_scale_lo=1.0,
                          load_scale_hi=1.0, seed=5)
    sol = solve_newton(ieee9_case)
    ns = [i for i in range(9) if i != ieee9_case.slack_index]
    assert np.array_equal(ds.x[0], np.concatenate([sol.v_mag[ns],
                                                   sol.v_ang[ns]]))
    assert np.array_equal(ds.y[0], np.concatenate([sol.p_inj[ns],
                                                   sol.q_inj[ns]]))


def test_generation_is_deterministic_in_seed(ieee9_case):
    a = generate_samples(ieee9_case, 12, seed=3)
    b = generate_samples(ieee9_case, 12, seed=3)
    c = generate_samples(ieee9_case, 12, seed=4)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
    assert not np.array_equal(a.x, c.x)


def test_generated_rows_close_the_power_flow_equations(ieee9_case):
    ds = generate_samples(ieee9_case, 40, seed=11)
    ybus = build_ybus(ieee9_case)
    ns = [i for i in range(9) if i != ieee9_case.slack_index]
    for i in range(ds.m):
        v_mag, v_ang = row_voltages(ds, ieee9_case, i)
        p, q = injections_from_voltages(ybus, v_mag, v_ang)
        assert np.max(np.abs(p[ns] - ds.y[i, :8])) <= 1e-6
        assert np.max(np.abs(q[ns] - ds.y[i, 8:])) <= 1e-6


def test_labels_follow_direction(ieee9_case):
    volt = generate_samples(ieee9_case, 2, seed=0)
    assert volt.meta["x_labels"][0].startswith("vm:")
    assert volt.meta["y_labels"][0].startswith("p:")
    power = generate_samples(ieee9_case, 2, direction="power_to_volt", seed=0)
    assert power.meta["x_labels"][0].startswith("p:")
    assert power.meta["y_labels"][0].startswith("vm:")
    v_mag, _ = row_voltages(power, ieee9_case, 0)
    assert v_mag[ieee9_case.slack_index] == 1.04


def test_impossible_loading_reports_dataset_error(ieee9_case):
    with pytest.raises(DatasetError) as err:
        generate_samples(ieee9_case, 2, load_scale_lo=50.0,
                         load_scale_hi=60.0)
    assert "converged" in str(err.value)


def test_generate_samples_validates_arguments(ieee9_case):
    with pytest.raises(ValueError):
        generate_samples(ieee9_case, 0)
    with pytest.raises(ValueError):
        generate_samples(ieee9_case, 5, load_scale_lo=1.2, load_scale_hi=0.8)
    with pytest.raises(ValueError):
        generate_samples(ieee9_case, 5, load_scale_lo=0.0, load_scale_hi=1.0)


def test_zero_ratio_injection_is_identity():
    clean = synthetic_dataset()
    out = inject_outliers(clean, OutlierSpec(ratio=0.0))
    assert np.array_equal(out.x, clean.x)
    assert np.array_equal(out.y, clean.y)
    assert not out.outlier_mask.any()
    out.x[0, 0] = 99.0  # returned object must be an independent copy
    assert clean.x[0, 0] != 99.0


def test_flag_count_is_floor_of_ratio():
    out = inject_outliers(synthetic_dataset(m=100), OutlierSpec(ratio=0.08))
    assert int(out.outlier_mask.sum()) == 8
    assert out.meta["actual_outlier_ratio"] == 0.08


def test_too_small_ratio_for_m_is_rejected():
    with pytest.raises(ValueError):
        inject_outliers(synthetic_dataset(m=10), OutlierSpec(ratio=0.05))


def test_injected_magnitudes_scale_with_column_deviation():
    clean = synthetic_dataset(m=60)
    sigma = np.hstack([clean.x, clean.y]).std(axis=0)
    spec = OutlierSpec(ratio=0.1, magnitude_lo=5.0, magnitude_hi=7.0, seed=2)
    out = inject_outliers(clean, spec)
    assert out.meta["injected"]
    for row, col, delta, original in out.meta["injected"]:
        assert 5.0 * sigma[col] - 1e-12 <= abs(delta) <= 7.0 * sigma[col] + 1e-12
        assert out.outlier_mask[row]
        stacked_clean = np.hstack([clean.x, clean.y])
        assert original == stacked_clean[row, col]


def test_unflagged_rows_are_untouched():
    clean = synthetic_dataset(m=50)
    out = inject_outliers(clean, OutlierSpec(ratio=0.1, seed=7))
    keep = ~out.outlier_mask
    assert np.array_equal(out.x[keep], clean.x[keep])
    assert np.array_equal(out.y[keep], clean.y[keep])


def test_all_components_mode_perturbs_every_varying_column():
    clean = synthetic_dataset(m=40)
    spec = OutlierSpec(ratio=0.1, components_per_sample="all", seed=1)
    out = inject_outliers(clean, spec)
    stacked_clean = np.hstack([clean.x, clean.y])
    stacked_out = np.hstack([out.x, out.y])
    for row in np.flatnonzero(out.outlier_mask):
        assert np.all(stacked_out[row] != stacked_clean[row])


def test_strip_injected_restores_clean_set_bitwise():
    clean = synthetic_dataset(m=50)
    out = inject_outliers(clean, OutlierSpec(ratio=0.12, seed=3))
    back = strip_injected(out)
    assert np.array_equal(back.x, clean.x)
    assert np.array_equal(back.y, clean.y)
    assert not back.outlier_mask.any()
    assert "injected" not in back.meta


def test_component_count_range_is_respected():
    clean = synthetic_dataset(m=100, n_x=4, n_y=3)
    spec = OutlierSpec(ratio=0.2, components_per_sample=(2, 2), seed=9)
    out = inject_outliers(clean, spec)
    per_row = {}
    for row, col, _d, _o in out.meta["injected"]:
        per_row.setdefault(row, set()).add(col)
    assert per_row
    assert all(len(cols) == 2 for cols in per_row.values())


@pytest.mark.parametrize("kwargs", [
    dict(ratio=0.5),
    dict(ratio=-0.1),
    dict(magnitude_lo=0.0),
    dict(magnitude_lo=5.0, magnitude_hi=4.0),
    dict(components_per_sample=(0, 2)),
    dict(components_per_sample=(3, 1)),
    dict(components_per_sample="some"),
    dict(components_per_sample=0),
])
def test_outlier_spec_validation(kwargs):
    with pytest.raises(ValueError):
        OutlierSpec(**kwargs)


@settings(max_examples=60, deadline=None)
@given(m=st.integers(min_value=5, max_value=120),
       ratio=st.floats(min_value=0.0, max_value=0.49))
def test_flag_count_property(m, ratio):
    clean = synthetic_dataset(m=m)
    expected = int(np.floor(ratio * m + 1e-9))
    if ratio > 0 and expected < 1:
        with pytest.raises(ValueError):
            inject_outliers(clean, OutlierSpec(ratio=ratio))
    else:
        out = inject_outliers(clean, OutlierSpec(ratio=ratio))
        assert int(out.outlier_mask.sum()) == expected


def test_to_problem_drops_constant_pv_columns(ieee9_case):
    ds = generate_samples(ieee9_case, 30, seed=1)
    prob, kept = to_problem(ds)
    const = np.flatnonzero(np.ptp(ds.x, axis=0) == 0)
    assert const.size == 2  # the two held PV magnitudes
    assert not set(const) & set(kept)
    assert prob.x.shape == (30, ds.n_x - 2)
    full, kept_all = to_problem(ds, drop_constant_columns=False)
    assert full.x.shape == (30, ds.n_x)
    assert np.array_equal(kept_all, np.arange(ds.n_x))


def test_save_load_round_trip(tmp_path, ieee9_case):
    ds = inject_outliers(generate_samples(ieee9_case, 25, seed=8),
                         OutlierSpec(ratio=0.08, seed=8))
    path = tmp_path / "train.csv"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert np.array_equal(back.x, ds.x)
    assert np.array_equal(back.y, ds.y)
    assert np.array_equal(back.outlier_mask, ds.outlier_mask)
    assert back.meta["case"] == "ieee9"
    assert back.meta["direction"] == "volt_to_power"
    assert back.meta["seed"] == 8
    assert back.meta["x_labels"] == ds.meta["x_labels"]


def test_save_load_round_trip_synthetic_bitwise(tmp_path):
    rng = np.random.default_rng(42)
    ds = Dataset(rng.normal(size=(1000, 4)) * 10.0 ** rng.integers(-8, 8),
                 rng.normal(size=(1000, 2)),
                 rng.random(1000) < 0.1,
                 {"case": "blob", "direction": "volt_to_power", "seed": 0})
    save_dataset(ds, tmp_path / "blob.csv")
    back = load_dataset(tmp_path / "blob.csv")
    assert np.array_equal(back.x, ds.x)
    assert np.array_equal(back.y, ds.y)
    assert np.array_equal(back.outlier_mask, ds.outlier_mask)


def test_load_missing_files(tmp_path):
    with pytest.raises(DatasetSchemaError):
        load_dataset(tmp_path / "nope.csv")
    (tmp_path / "lonely.csv").write_text("x0,y0\n1.0,2.0\n")
    with pytest.raises(DatasetSchemaError) as err:
        load_dataset(tmp_path / "lonely.csv")
    assert "sidecar" in str(err.value)


def make_pair(tmp_path, csv_text, sidecar_text):
    (tmp_path / "d.csv").write_text(csv_text)
    (tmp_path / "d.json").write_text(sidecar_text)
    return tmp_path / "d.csv"


def test_load_rejects_wrong_schema_version(tmp_path):
    p = make_pair(tmp_path, "x0,y0\n1.0,2.0\n",
                  '{"schema": 99, "outlier_mask": [false], "meta": {}}')
    with pytest.raises(DatasetSchemaError) as err:
        load_dataset(p)
    assert "schema" in str(err.value)


def test_load_rejects_bad_header(tmp_path):
    p = make_pair(tmp_path, "z0,y0\n1.0,2.0\n",
                  '{"schema": 1, "outlier_mask": [false], "meta": {}}')
    with pytest.raises(DatasetSchemaError):
        load_dataset(p)
    p = make_pair(tmp_path, "x0,x1\n1.0,2.0\n",
                  '{"schema": 1, "outlier_mask": [false], "meta": {}}')
    with pytest.raises(DatasetSchemaError):
        load_dataset(p)


def test_load_rejects_ragged_rows(tmp_path):
    p = make_pair(tmp_path, "x0,y0\n1.0,2.0\n3.0\n",
                  '{"schema": 1, "outlier_mask": [false, false], "meta": {}}')
    with pytest.raises(DatasetSchemaError) as err:
        load_dataset(p)
    assert ":3:" in str(err.value)


def test_load_rejects_mask_length_mismatch(tmp_path):
    p = make_pair(tmp_path, "x0,y0\n1.0,2.0\n3.0,4.0\n",
                  '{"schema": 1, "outlier_mask": [false], "meta": {}}')
    with pytest.raises(DatasetSchemaError) as err:
        load_dataset(p)
    assert "mask" in str(err.value)


def test_dataset_copy_is_deep():
    ds = synthetic_dataset(m=5)
    dup = ds.copy()
    dup.x[0, 0] += 1.0
    dup.meta["case"] = "other"
    assert ds.x[0, 0] != dup.x[0, 0]
    assert ds.meta["case"] == "synthetic"
