import json

import pytest
import pandas as pd

from asymdpop.experiment import (
    CSV_COLUMNS,
    ExperimentSpec,
    instance_seed,
    preset,
    run_experiment,
    summarize,
    write_outputs,
)

def _medians(spec):
    return summarize(run_experiment(spec)).set_index(["kp", "ke"])

class TestExperimentSpec:
    def test_defaults(self):
        spec = ExperimentSpec()
        assert spec.kp == ["w*"] and spec.ke == ["all"]
        assert len(spec.points()) == 1

    def test_integer_knobs_are_normalised(self):
        assert ExperimentSpec(kp=[2, "w*"], ke=[1]).kp == ["2", "w*"]

    @pytest.mark.parametrize("field,value", [("kp", ["1"]), ("ke", ["none"]), ("instances", 0), ("agents", [])])
    def test_rejects_bad_values(self, field, value):
        with pytest.raises(ValueError):
            ExperimentSpec(**{field: value})

    def test_tightness_only_for_maxdcsp(self):
        assert ExperimentSpec(tightness=[0.1, 0.2]).points() == [(8, 0.25, 3, None)]
        assert len(ExperimentSpec(family="maxdcsp", tightness=[0.1, 0.2]).points()) == 2

    def test_preset(self):
        spec = preset("tightness", instances=2)
        assert spec.family == "maxdcsp"
        assert spec.instances == 2
        with pytest.raises(ValueError, match="unknown preset"):
            preset("nope")

    def test_instance_seed_is_stable(self):
        assert instance_seed(0, 8, 0.25, 3, None, 1) == instance_seed(0, 8, 0.25, 3, None, 1)
        assert instance_seed(0, 8, 0.25, 3, None, 1) != instance_seed(0, 8, 0.25, 3, None, 2)

    def test_instance_seed_without_tightness(self):
        """ADCOP points have no tightness and still get a valid, distinct seed"""
        seed = instance_seed(0, 8, 0.25, 3, None, 1)
        assert seed >= 0
        assert seed != instance_seed(0, 8, 0.25, 3, 0.0, 1)

    def test_rejects_negative_base_seed(self):
        with pytest.raises(ValueError):
            ExperimentSpec(seed=-1)

class TestRunExperiment:
    def test_single_point(self, tmp_path):
        spec = ExperimentSpec(agents=[5], density=[0.5], domain=[2], instances=1)
        rows = run_experiment(spec)
        assert len(rows) == 1
        assert rows.loc[0, "cost"] == rows.loc[0, "oracle_cost"]
        assert rows.loc[0, "message_count"] == 8
        paths = write_outputs(rows, tmp_path / "out.csv")
        written = pd.read_csv(paths["rows"])
        assert list(written.columns) == CSV_COLUMNS
        medians = pd.read_csv(paths["medians"], sep="\t")
        assert len(medians) == 1
        assert medians.loc[0, "instances"] == 1

    def test_metadata_sidecar(self, tmp_path):
        spec = ExperimentSpec(agents=[4], domain=[2], seed=3)
        paths = write_outputs(run_experiment(spec), tmp_path / "out.csv", spec)
        assert paths["meta"] == tmp_path / "out.meta.json"
        meta = json.loads(paths["meta"].read_text())
        assert meta["columns"] == CSV_COLUMNS
        assert set(meta["units"]) >= {"nclo", "network_load", "max_dims", "privacy_loss", "table_sets"}
        assert meta["spec"]["seed"] == 3

    def test_grid_and_order(self):
        spec = ExperimentSpec(agents=[4, 5], density=[0.6], domain=[2], kp=["2", "w*"], ke=["1", "all"], instances=2)
        rows = run_experiment(spec)
        assert len(rows) == 2 * 4 * 2
        assert list(rows["n"].unique()) == [4, 5]
        first = rows[rows["n"] == 4]
        assert list(first["kp"].iloc[:4]) == ["2", "2", "2", "2"]
        assert list(first["ke"].iloc[:4]) == ["1", "1", "all", "all"]
        assert (rows["cost"] == rows["oracle_cost"]).all()

    def test_oracle_skipped_above_cap(self):
        rows = run_experiment(ExperimentSpec(agents=[6], domain=[3], oracle_cap=10))
        assert rows.loc[0, "oracle_cost"] == "n/a"

    def test_byte_identical_reruns(self, tmp_path):
        spec = ExperimentSpec(family="maxdcsp", agents=[6], density=[0.4], domain=[3],
                              tightness=[0.3], kp=["2", "3"], ke=["1", "all"], instances=3, seed=9)
        first = write_outputs(run_experiment(spec), tmp_path / "a.csv")
        second = write_outputs(run_experiment(spec), tmp_path / "b.csv")
        assert first["rows"].read_bytes() == second["rows"].read_bytes()
        assert first["medians"].read_bytes() == second["medians"].read_bytes()

    def test_parallel_matches_serial(self):
        spec = ExperimentSpec(agents=[5, 6], density=[0.5], domain=[2], instances=2)
        serial = run_experiment(spec)
        parallel = run_experiment(spec.model_copy(update={"jobs": 2}))
        pd.testing.assert_frame_equal(serial.drop(columns=["trace"]), parallel.drop(columns=["trace"]))

    def test_trace_file(self, tmp_path):
        spec = ExperimentSpec(agents=[4], domain=[2], density=[0.6], trace=True)
        paths = write_outputs(run_experiment(spec), tmp_path / "t.csv")
        lines = paths["trace"].read_text().splitlines()
        assert lines[0].startswith("# n=4")
        assert len(lines) == 1 + 6

    def test_sparse_eight_agents_leave_batch_size_idle(self):
        """Seven edges on eight agents form a spanning tree, so every elimination set is a single child"""
        spec = ExperimentSpec(agents=[8], density=[0.25], domain=[3], kp=["2"], ke=["1", "all"],
                              instances=5, oracle_cap=0)
        rows = run_experiment(spec)
        one = rows[rows["ke"] == "1"].reset_index(drop=True)
        whole = rows[rows["ke"] == "all"].reset_index(drop=True)
        for column in ("nclo", "max_dims", "network_load"):
            assert list(one[column]) == list(whole[column])

    def test_wall_time_column(self):
        rows = run_experiment(ExperimentSpec(agents=[4], domain=[2], wall_time=True))
        assert rows.loc[0, "wall_ms"] != ""

@pytest.mark.slow
class TestTradeoffTrends:
    def test_table_sets_cut_network_load_on_dense_problems(self):
        spec = ExperimentSpec(agents=[8], density=[1.0], domain=[4], kp=["2", "w*"], instances=20, oracle_cap=0)
        medians = _medians(spec)
        assert medians.loc[("2", "all"), "network_load"] < medians.loc[("w*", "all"), "network_load"]

    def test_small_batches_trade_time_for_dimensions(self):
        # at n=8 density 0.25 every instance is a spanning tree and batches are singletons
        spec = ExperimentSpec(agents=[16], density=[0.25], domain=[3], kp=["2"], ke=["1", "all"], instances=20, oracle_cap=0)
        medians = _medians(spec)
        assert medians.loc[("2", "1"), "nclo"] < medians.loc[("2", "all"), "nclo"]
        assert medians.loc[("2", "1"), "max_dims"] >= medians.loc[("2", "all"), "max_dims"]

    def test_privacy_against_tightness(self):
        tightness = [0.1, 0.3, 0.5, 0.8]
        spec = ExperimentSpec(family="maxdcsp", agents=[10], density=[0.4], domain=[4], tightness=tightness,
                              kp=["2", "3"], instances=20, oracle_cap=0)
        medians = summarize(run_experiment(spec))
        binary = medians[medians["kp"] == "2"]["privacy_loss"]
        assert binary.between(0.4, 0.55).all()
        wider = list(medians[medians["kp"] == "3"].sort_values("tightness")["privacy_loss"])
        assert all(a > b for a, b in zip(wider, wider[1:]))
