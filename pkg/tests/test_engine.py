import pytest
import numpy as np

from asymdpop.engine import (
    METRIC_UNITS,
    MessageRecord,
    SimulationDeadlock,
    StepRecord,
    nclo_accounting,
    privacy_accounting,
    run,
)
from asymdpop.problem import Problem, random_adcop, random_maxdcsp
from asymdpop.pseudotree import build_dfs
from asymdpop.solver import Agent, SolverConfig, UtilMessage
from asymdpop.tables import from_side, join

def _problem_on(edges, n, domain=3, seed=0):
    rng = np.random.default_rng(seed)
    block = rng.integers(0, 10, size=(domain, domain))
    sides = {}
    for i, j in edges:
        sides[(i, j)] = block
        sides[(j, i)] = block.T
    return Problem.from_sides([domain] * n, sides)

def _two_branches():
    """Root 0 over the identical chains 1-3-5 and 2-4-6."""
    return _problem_on([(0, 1), (1, 3), (3, 5), (0, 2), (2, 4), (4, 6)], 7)

def _path(n):
    return _problem_on([(k, k + 1) for k in range(n - 1)], n)

class TestRun:
    def test_single_agent(self):
        result = run(Problem.from_sides([3], {}))
        assert result.assignment == {0: 0}
        assert result.cost == 0
        assert result.metrics.message_count == 0
        assert result.metrics.nclo == 0
        assert result.metrics.privacy_loss == 0

    @pytest.mark.parametrize("seed", range(10))
    def test_linear_message_count(self, seed):
        problem = random_adcop(8, 0.4, 2, seed=seed)
        for config in (SolverConfig(), SolverConfig.parse(2, 1)):
            result = run(problem, build_dfs(problem), config)
            kinds = [r.message.kind for r in result.records]
            assert sum(k != "VALUE" for k in kinds) == 7
            assert kinds.count("VALUE") == 7

    def test_cost_is_recomputed(self, four_agent):
        result = run(four_agent, build_dfs(four_agent, root=0))
        assert set(result.assignment) == {0, 1, 2, 3}
        assert result.cost == result.reported_cost

    def test_deterministic(self):
        problem = random_adcop(9, 0.35, 3, seed=3)
        tree = build_dfs(problem)
        first = run(problem, tree, SolverConfig.parse(2, 1), seed=5, trace=True)
        second = run(problem, tree, SolverConfig.parse(2, 1), seed=5, trace=True)
        assert first.trace == second.trace
        assert first.metrics == second.metrics
        assert first.assignment == second.assignment

    def test_scheduler_seed_keeps_the_answer(self):
        problem = random_adcop(9, 0.35, 3, seed=4)
        tree = build_dfs(problem)
        costs = {run(problem, tree, seed=s).cost for s in range(5)}
        assert len(costs) == 1

    def test_trace_format(self, four_agent):
        result = run(four_agent, build_dfs(four_agent, root=0), trace=True)
        assert len(result.trace) == 6
        assert result.trace[-1].split()[2] == "VALUE"
        util_3 = next(line for line in result.trace if line.split()[1] == "3->1")
        assert util_3.split()[2:] == ["UTIL", "dims=[[0,1,3]]", "units=9"]

    def test_network_load(self, four_agent):
        result = run(four_agent, build_dfs(four_agent, root=0))
        # UTIL: 8 + 4 + 8 cells, VALUE: 3 + 3 + 2 pairs, one envelope unit each
        assert result.metrics.utility_cells == 20
        assert result.metrics.network_load == 20 + 8 + 6
        assert result.metrics.max_message_cells == 8

    def test_gnle_network_load_matches_separators(self):
        problem = random_adcop(7, 0.5, 2, seed=8)
        tree = build_dfs(problem)
        result = run(problem, tree)
        expected = sum(
            2 ** (len(tree.separators(a)) + len(tree.interface_descendants(a)) + 1)
            for a in tree.order if a != tree.root
        )
        assert result.metrics.utility_cells == expected

    def test_metadata_names_mode_and_units(self, four_agent):
        tree = build_dfs(four_agent, root=0)
        gnle = run(four_agent, tree).metadata
        tsps = run(four_agent, tree, SolverConfig.parse(2, 1)).metadata
        assert gnle["mode"] == "GNLE" and tsps["mode"] == "TSPS"
        assert tsps["config"] == "AsymDPOP(k_p=2, k_e=1)"
        assert gnle["induced_width"] == "3"
        assert set(METRIC_UNITS) <= set(gnle)

    def test_deadlock_names_the_agent(self, four_agent, monkeypatch):
        """Agent 1 never hears from leaf 2 and is reported as the blocker"""
        original = Agent.absorb_child_message

        def drop_leaf_two(self, msg, counter):
            if msg.sender != 2:
                original(self, msg, counter)

        monkeypatch.setattr(Agent, "absorb_child_message", drop_leaf_two)
        with pytest.raises(SimulationDeadlock, match="agent 1 never finished: 1 of 2"):
            run(four_agent, build_dfs(four_agent, root=0))

class TestNclo:
    def test_replay(self):
        steps = [
            StepRecord(agent=2, trigger=None, work=10, sent=(0,)),
            StepRecord(agent=3, trigger=None, work=4, sent=(1,)),
            StepRecord(agent=1, trigger=0, work=5, sent=()),
            StepRecord(agent=1, trigger=1, work=5, sent=(2,)),
            StepRecord(agent=0, trigger=2, work=1, sent=()),
        ]
        assert nclo_accounting(steps) == 21

    def test_empty_history(self):
        assert nclo_accounting([]) == 0

    def test_independent_branches_run_concurrently(self):
        problem = _two_branches()
        result = run(problem, build_dfs(problem, root=0))
        total = sum(step.work for step in result.steps)
        assert result.metrics.nclo <= 0.75 * total

    def test_chain_has_no_concurrency(self):
        problem = _path(6)
        tree = build_dfs(problem, root=0)
        assert all(len(c) <= 1 for c in tree.children.values())
        result = run(problem, tree)
        assert result.metrics.nclo == sum(step.work for step in result.steps)

class TestPrivacy:
    def test_binary_child_tables_leak_child_sides(self, four_agent):
        tree = build_dfs(four_agent, root=0)
        result = run(four_agent, tree, SolverConfig.parse(2, "all"))
        assert 0 < result.metrics.privacy_loss <= 1

    def test_leaf_side_fully_exposed(self):
        problem = Problem.from_sides([2, 2], {(0, 1): [[1, 2], [3, 4]], (1, 0): [[5, 6], [7, 8]]})
        tree = build_dfs(problem, root=0)
        msg = UtilMessage(1, 0, (from_side(problem, 1, 0),), {1: 1})
        records = [MessageRecord(id=0, tick=0, message=msg)]
        assert privacy_accounting(records, problem, tree) == pytest.approx(0.5)

    def test_zero_entries_leak_child_sides_only(self):
        """Agent 1 forwards its own side toward agent 2; the root learns only f_10"""
        problem = Problem.from_sides([2, 2, 2], {
            (0, 1): np.ones((2, 2)), (1, 0): [[0, 1], [1, 1]],
            (1, 2): [[0, 1], [1, 1]], (2, 1): np.ones((2, 2)),
        })
        tree = build_dfs(problem, root=0)
        joined = join(from_side(problem, 1, 0), from_side(problem, 1, 2))
        msg = UtilMessage(1, 0, (joined,), {})
        records = [MessageRecord(id=0, tick=0, message=msg)]
        # the single zero cell exposes one entry of f_10 out of 16
        assert privacy_accounting(records, problem, tree) == pytest.approx(1 / 16)

    def test_pseudo_child_zero_cells_leak(self):
        problem = Problem.from_sides([2, 2, 2], {
            (0, 1): np.ones((2, 2)), (1, 0): np.ones((2, 2)),
            (1, 2): np.ones((2, 2)), (2, 1): np.zeros((2, 2)),
            (0, 2): np.ones((2, 2)), (2, 0): [[0, 1], [1, 1]],
        })
        tree = build_dfs(problem, root=0)
        assert 2 in tree.lower_neighbors(0)
        joined = join(from_side(problem, 2, 0), from_side(problem, 2, 1))
        msg = UtilMessage(1, 0, (joined,), {})
        records = [MessageRecord(id=0, tick=0, message=msg)]
        # zero cells at x_2 = x_0 = 0 expose f_20[0][0]; f_21 is not a side toward the root
        assert privacy_accounting(records, problem, tree) == pytest.approx(1 / 24)

    def test_all_zero_maxdcsp_leaks_more_than_tight(self):
        loose = random_maxdcsp(8, 0.4, 3, tightness=0.0, seed=1)
        tight = random_maxdcsp(8, 0.4, 3, tightness=0.9, seed=1)
        config = SolverConfig.parse(3, "all")
        assert run(loose, config=config).metrics.privacy_loss > run(tight, config=config).metrics.privacy_loss

    def test_no_messages(self):
        assert privacy_accounting([], Problem.from_sides([2], {}), build_dfs(Problem.from_sides([2], {}))) == 0
