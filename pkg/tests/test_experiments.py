from dataclasses import replace
from pathlib import Path

import pytest

from gossipfresh.experiments import (
    CSV_HEADER,
    ConfigError,
    DEFAULT_RATE_CASES,
    ExperimentConfig,
    emit_plot_data,
    read_csv,
    report_optimal_k,
    run_experiment,
    write_csv,
)

FLAT_SMALL = {
    "name": "flat_small",
    "mode": "flat_sweep_n",
    "policies": ["DC_noRC", "DC_RC", "FC_noRC", "FC_sRC", "FC_allRC"],
    "rates": {"lambda_s": 1.0, "lambda_g": 1.0, "alpha": [0.1, 1.0]},
    "n_range": [1, 10],
}

CLUSTERED_SMALL = {
    "name": "clustered_small",
    "mode": "clustered_sweep_k",
    "policies": [["DC_noRC", "DC_noRC"], ["DC_RC", "FC_allRC"]],
    "rates": {"lambda_e": 1.0, "lambda_s": 1.0, "lambda_c": 1.0, "lambda_g": 1.0},
    "n": 12,
}


# --- config parsing ----------------------------------------------------------


def test_flat_config_expands_alpha_cases():
    config = ExperimentConfig.from_dict(FLAT_SMALL)
    assert [c.label for c in config.cases] == ["alpha0.1", "alpha1"]
    assert config.cases[0].rates.lambda_e == pytest.approx(0.1)
    assert len(config.policies) == 5


def test_unknown_keys_rejected_everywhere():
    with pytest.raises(ConfigError, match="typo_key"):
        ExperimentConfig.from_dict(dict(FLAT_SMALL, typo_key=1))
    with pytest.raises(ConfigError, match="lambda_x"):
        ExperimentConfig.from_dict(
            dict(FLAT_SMALL, rates={"lambda_s": 1.0, "lambda_x": 2.0, "alpha": [1.0]})
        )
    bad_sim = dict(FLAT_SMALL, sim={"cycles": 10, "seed": 0, "warmup": 5})
    with pytest.raises(ConfigError, match="warmup"):
        ExperimentConfig.from_dict(bad_sim)


def test_alpha_and_lambda_e_are_exclusive():
    with pytest.raises(ConfigError, match="mutually exclusive"):
        ExperimentConfig.from_dict(
            dict(FLAT_SMALL, rates={"lambda_s": 1.0, "lambda_e": 1.0, "alpha": [1.0]})
        )


def test_alpha_rejected_for_clustered_sweeps():
    with pytest.raises(ConfigError, match="alpha"):
        ExperimentConfig.from_dict(
            dict(CLUSTERED_SMALL, rates={"lambda_s": 1.0, "alpha": [1.0]})
        )


def test_config_reports_every_problem_at_once():
    raw = dict(FLAT_SMALL, typo_key=1, policies=["DC_noRC", "NOT_A_POLICY"], n_range=[5, 2])
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict(raw)
    text = str(err.value)
    assert "typo_key" in text
    assert "NOT_A_POLICY" in text
    assert "n_range" in text


def test_clustered_single_point_needs_divisible_k():
    raw = {
        "name": "pt",
        "mode": "single_point",
        "policies": [["DC_RC", "FC_allRC"]],
        "rates": {"lambda_e": 1.0, "lambda_s": 1.0, "lambda_c": 1.0},
        "n": 10,
        "k": 4,
    }
    with pytest.raises(ConfigError, match="divide"):
        ExperimentConfig.from_dict(raw)


def test_clustered_defaults_ship_four_rate_cases():
    config = ExperimentConfig.from_dict(
        {k: v for k, v in CLUSTERED_SMALL.items() if k != "rates"}
    )
    assert config.cases == DEFAULT_RATE_CASES
    assert len(config.cases) == 4


def test_named_cases_parse():
    raw = dict(
        CLUSTERED_SMALL,
        cases=[
            {"label": "even", "lambda_e": 1.0, "lambda_s": 2.0, "lambda_c": 2.0},
            {"lambda_e": 2.0, "lambda_s": 1.0, "lambda_c": 4.0},
        ],
    )
    del raw["rates"]
    config = ExperimentConfig.from_dict(raw)
    assert [c.label for c in config.cases] == ["even", "case2"]


# --- running sweeps ----------------------------------------------------------


def test_single_point_trivial_race(tmp_path):
    raw = {
        "name": "pt",
        "mode": "single_point",
        "policies": ["DC_noRC"],
        "rates": {"lambda_e": 1.0, "lambda_s": 1.0},
        "n": 1,
        "output": str(tmp_path / "pt.csv"),
    }
    rows = run_experiment(ExperimentConfig.from_dict(raw))
    assert len(rows) == 1
    assert rows[0].p_analytic == rows[0].p_oracle == 0.5
    assert (tmp_path / "pt.csv").exists()


def test_flat_sweep_grid_and_orderings():
    rows = run_experiment(ExperimentConfig.from_dict(FLAT_SMALL))
    assert len(rows) == 100  # 2 cases x 5 policies x 10 sizes
    by_point = {}
    for row in rows:
        by_point.setdefault((row.lambda_e, row.n), {})[row.policy_source] = row.p_oracle
    for values in by_point.values():
        assert values["FC_allRC"] >= values["FC_sRC"] >= values["FC_noRC"]
        assert values["DC_RC"] >= values["DC_noRC"]
    for row in rows:
        assert 0.0 <= row.p_oracle <= 1.0
        if row.p_analytic is not None:
            assert abs(row.p_analytic - row.p_oracle) <= 1e-12
        if row.policy_source == "FC_sRC":
            assert row.p_analytic is None
        if row.policy_source.startswith("DC"):
            assert row.lambda_g is None
        assert row.k is None and row.m is None and row.lambda_c is None


def test_clustered_sweep_grid():
    rows = run_experiment(ExperimentConfig.from_dict(CLUSTERED_SMALL))
    assert len(rows) == 2 * 6  # pairs x divisors(12)
    for row in rows:
        assert row.k * row.m == row.n == 12
        if row.policy_cluster.startswith("DC"):
            assert row.lambda_g is None
        else:
            assert row.lambda_g == 1.0
        if row.p_analytic is not None:
            assert abs(row.p_analytic - row.p_oracle) <= 1e-12


def test_sim_columns_are_consistent(tmp_path):
    raw = dict(FLAT_SMALL, n_range=[1, 3], policies=["DC_RC"], sim={"cycles": 20000, "seed": 5})
    rows = run_experiment(ExperimentConfig.from_dict(raw))
    for row in rows:
        assert row.cycles == 20000
        assert row.sim_ci_lo <= row.p_sim <= row.sim_ci_hi
        assert abs(row.p_sim - row.p_oracle) <= 0.05
        assert row.seed is not None


# --- CSV ---------------------------------------------------------------------


def test_csv_round_trip_exact(tmp_path):
    raw = dict(
        CLUSTERED_SMALL,
        sim={"cycles": 2000, "seed": 3},
        output=str(tmp_path / "rows.csv"),
    )
    rows = run_experiment(ExperimentConfig.from_dict(raw))
    parsed = read_csv(tmp_path / "rows.csv")
    assert parsed == rows
    header = (tmp_path / "rows.csv").read_text().splitlines()[0]
    assert header == ",".join(CSV_HEADER)


def test_csv_bytes_deterministic(tmp_path):
    raw = dict(FLAT_SMALL, n_range=[1, 4], sim={"cycles": 1000, "seed": 2})
    blobs = []
    for name in ("a.csv", "b.csv"):
        cfg = ExperimentConfig.from_dict(dict(raw, output=str(tmp_path / name)))
        run_experiment(cfg)
        blobs.append((tmp_path / name).read_bytes())
    assert blobs[0] == blobs[1]
    assert b"\r" not in blobs[0]  # LF line endings


def test_read_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "alien.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError, match="header"):
        read_csv(path)


# --- plot series -------------------------------------------------------------


def test_plot_series_per_policy_and_alpha(tmp_path):
    rows = run_experiment(ExperimentConfig.from_dict(FLAT_SMALL))
    paths = emit_plot_data(rows, out_dir=tmp_path)
    assert len(paths) == 10  # 5 policies x 2 alphas
    names = sorted(p.name for p in paths)
    assert "flat_small__FC_allRC__alpha0.1.dat" in names
    text = (tmp_path / "flat_small__DC_noRC__alpha1.dat").read_text().splitlines()
    assert text[0].startswith("#")
    x, y = text[2].split()  # first data line after two comment lines
    assert int(x) == 1
    assert float(y) == pytest.approx(0.5)


def test_plot_series_clustered_pairs(tmp_path):
    rows = run_experiment(ExperimentConfig.from_dict(CLUSTERED_SMALL))
    paths = emit_plot_data(rows, out_dir=tmp_path)
    assert len(paths) == 2
    assert {p.name for p in paths} == {
        "clustered_small__DC_noRC+DC_noRC__case1.dat",
        "clustered_small__DC_RC+FC_allRC__case1.dat",
    }
    # x column is the cluster size
    lines = paths[0].read_text().splitlines()
    xs = [int(line.split()[0]) for line in lines[2:]]
    assert xs == [1, 2, 3, 4, 6, 12]


def test_plot_series_empty_group_warns(tmp_path):
    rows = run_experiment(ExperimentConfig.from_dict(CLUSTERED_SMALL))
    with pytest.warns(UserWarning, match="no rows"):
        paths = emit_plot_data(
            rows, group_by=[("DC_RC+FC_allRC", "case1"), ("nope", "case9")], out_dir=tmp_path
        )
    assert len(paths) == 1


def test_plot_series_needs_rows():
    with pytest.raises(ValueError):
        emit_plot_data([])


# --- optimal-k report --------------------------------------------------------


def test_report_optimal_k_square_grid():
    raw = {
        "name": "opt",
        "mode": "clustered_sweep_k",
        "policies": [["DC_noRC", "DC_noRC"]],
        "rates": {"lambda_e": 1.0, "lambda_s": 1.0, "lambda_c": 1.0},
        "n": 16,
    }
    report = report_optimal_k(ExperimentConfig.from_dict(raw))
    entry = report.entries[0]
    assert (entry.k_star, entry.m_star) == (4, 4)
    assert entry.p_star == pytest.approx(0.04, abs=1e-15)


def test_report_optimal_k_placement_notes():
    raw = {
        "name": "opt",
        "mode": "clustered_sweep_k",
        "policies": [["DC_RC", "DC_noRC"], ["DC_noRC", "DC_RC"]],
        "cases": [
            {"label": "even", "lambda_e": 1.0, "lambda_s": 1.0, "lambda_c": 1.0},
            {"label": "src_hi", "lambda_e": 1.0, "lambda_s": 2.0, "lambda_c": 1.0},
            {"label": "cl_hi", "lambda_e": 1.0, "lambda_s": 1.0, "lambda_c": 2.0},
        ],
        "n": 120,
    }
    report = report_optimal_k(ExperimentConfig.from_dict(raw))
    notes = "\n".join(report.notes)
    assert "even: lambda_s == lambda_c" in notes
    assert "src_hi: lambda_s > lambda_c, source-side placement wins" in notes
    assert "cl_hi: lambda_s < lambda_c, cluster-side placement wins" in notes
    assert "UNEXPECTEDLY" not in notes
    even = [e for e in report.entries if e.case == "even"]
    assert even[0].p_star == pytest.approx(even[1].p_star, abs=1e-12)
    assert even[0].k_star != even[1].k_star


def test_report_optimal_k_requires_clustered_mode():
    with pytest.raises(ConfigError):
        report_optimal_k(ExperimentConfig.from_dict(FLAT_SMALL))


def test_full_stale_targeting_peak_wins_in_sweep_rows():
    raw = {
        "name": "dc120",
        "mode": "clustered_sweep_k",
        "policies": [
            ["DC_noRC", "DC_noRC"],
            ["DC_noRC", "DC_RC"],
            ["DC_RC", "DC_noRC"],
            ["DC_RC", "DC_RC"],
        ],
        "rates": {"lambda_e": 1.0, "lambda_s": 1.0, "lambda_c": 1.0},
        "n": 120,
    }
    rows = run_experiment(ExperimentConfig.from_dict(raw))
    peaks = {}
    for row in rows:
        key = (row.policy_source, row.policy_cluster)
        peaks[key] = max(peaks.get(key, 0.0), row.p_oracle)
    best = peaks.pop(("DC_RC", "DC_RC"))
    assert all(best > p for p in peaks.values())


# --- shipped configs ---------------------------------------------------------

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize(
    "name,rows_expected",
    [
        ("flat_policies.json", 2 * 5 * 50),
        ("clustered_dc.json", 4 * 4 * 16),
        ("clustered_fc.json", 4 * 3 * 16),
    ],
)
def test_shipped_configs_parse_and_size_their_grids(name, rows_expected, tmp_path):
    config = ExperimentConfig.from_json(CONFIG_DIR / name)
    config = replace(config, output=None)
    rows = run_experiment(config)
    assert len(rows) == rows_expected


def test_fc_sweep_emits_three_series_per_rate_case(tmp_path):
    config = ExperimentConfig.from_json(CONFIG_DIR / "clustered_fc.json")
    rows = run_experiment(replace(config, output=None))
    paths = emit_plot_data(rows, out_dir=tmp_path)
    per_case = {}
    for p in paths:
        case = p.stem.split("__")[-1]
        per_case[case] = per_case.get(case, 0) + 1
    assert per_case == {"case1": 3, "case2": 3, "case3": 3, "case4": 3}
