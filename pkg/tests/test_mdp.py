import math
import unittest

import numpy as np

from src.config.exceptions import IllegalActionError, TerminalStateError, TransitionModelError
from src.decision.forest import ForestConfig
from src.decision.synthetic import load_presets
from src.domains.credit import SyntheticFicoDecision, build_simple_credit_mdp, load_credit_preset
from src.domains.household import build_realistic_credit_mdp, load_scenario
from src.domains.lattice import build_preset_mdp
from src.domains.recidivism import FULL, train_risk_models
from src.domains.registry import RecidivismDomain
from src.mdp.agency_mdp import (
    ActionId, AgencyMdp, AgencyState, TransitionModel, TransitionOutcome, estimate_policy_value,
    expected_decision, rollout, state_key,
)
from src.mdp.commitment import COMMITMENT, CommitmentModel
from src.mdp.tabular import build_tabular_mdp, random_tabular_mdp, tabular_state
from src.policies.baselines import GreedyPolicy, RandomPolicy, fixed_policy
from tests.fixtures import compas_records


class LeakyModel(TransitionModel):
    """Outcome probabilities sum to 0.9"""

    def __init__(self, base: TransitionModel):
        super().__init__(base.actions)
        self.base = base

    def is_legal(self, state, action):
        return self.base.is_legal(state, action)

    def outcomes(self, state, action):
        return [TransitionOutcome(o.state, 0.9) for o in self.base.outcomes(state, action)]


def coin_mdp():
    """Node 0 flips to node 1 or node 2; decisions 1, 2, 4"""
    table = {(0, 0): [(1, 0.5), (2, 0.5)], (1, 0): [(1, 1.0)], (2, 0): [(2, 1.0)]}
    return build_tabular_mdp(table, [1.0, 2.0, 4.0], n_actions=1, start=0, resources=1)


class TestAgencyMdp(unittest.TestCase):

    def test_terminal_state_has_no_actions(self):
        mdp = build_preset_mdp("fig1_default", resources=0)
        with self.assertRaises(TerminalStateError):
            mdp.legal_actions(mdp.initial_state)

    def test_reward_only_at_terminal(self):
        mdp = build_preset_mdp("fig1_default", resources=1)
        self.assertEqual(mdp.reward(mdp.initial_state), 0.0)
        done = mdp.initial_state.evolve(resources=0)
        self.assertAlmostEqual(mdp.reward(done), mdp.decision(done))

    def test_illegal_action_rejected(self):
        mdp = build_preset_mdp("fig1_default", resources=1, start=[8.0])
        right = mdp.model.action("right")
        self.assertNotIn(right, mdp.legal_actions(mdp.initial_state))
        with self.assertRaises(IllegalActionError):
            mdp.enumerate_outcomes(mdp.initial_state, right)

    def test_outcomes_must_sum_to_one(self):
        base = build_preset_mdp("fig1_default", resources=1)
        mdp = AgencyMdp(base.decision_function, LeakyModel(base.model), initial_state=base.initial_state)
        with self.assertRaises(TransitionModelError):
            mdp.enumerate_outcomes(mdp.initial_state, mdp.actions[0])

    def test_stochastic_expected_decision(self):
        mdp = coin_mdp()
        self.assertFalse(mdp.is_deterministic)
        self.assertAlmostEqual(expected_decision(mdp, mdp.initial_state, mdp.actions[0]), 3.0)

    def test_state_key_rounds_features(self):
        mdp = build_preset_mdp("fig1_default", resources=2)
        state = mdp.initial_state
        nudged = state.evolve(features=state.features.replace(x0=1e-12))
        self.assertEqual(state_key(state), state_key(nudged))
        self.assertNotEqual(state_key(state), state_key(state.evolve(resources=1)))

    def test_negative_resources_rejected(self):
        mdp = build_preset_mdp("fig1_default", resources=1)
        with self.assertRaises(ValueError):
            mdp.initial_state.evolve(resources=-1)


def outcome_totals(mdp, depth):
    """Probability mass of every (state, legal action) within depth steps of the start"""
    totals = []
    frontier = [mdp.initial_state]
    seen = {state_key(mdp.initial_state)}
    for _ in range(depth):
        nxt = []
        for state in frontier:
            if mdp.is_terminal(state):
                continue
            for action in mdp.legal_actions(state):
                outcomes = mdp.enumerate_outcomes(state, action)
                totals.append(math.fsum(o.probability for o in outcomes))
                for o in outcomes:
                    if state_key(o.state) not in seen:
                        seen.add(state_key(o.state))
                        nxt.append(o.state)
        frontier = nxt
    return totals


class TestShippedDomains(unittest.TestCase):

    def assert_outcomes_sum_to_one(self, mdp):
        totals = outcome_totals(mdp, 3)
        self.assertTrue(totals, mdp.name)
        for total in totals:
            self.assertAlmostEqual(total, 1.0, places=12, msg=mdp.name)

    def test_lattice_presets(self):
        for name in load_presets():
            self.assert_outcomes_sum_to_one(build_preset_mdp(name, resources=3))

    def test_credit_domains(self):
        preset = load_credit_preset()
        self.assert_outcomes_sum_to_one(build_simple_credit_mdp(SyntheticFicoDecision(preset), [0] * 10, 3,
                                                                allow_stop=True))
        for scenario in ("sudden_debt", "debt_free_average"):
            household = load_scenario(scenario).household
            self.assert_outcomes_sum_to_one(build_realistic_credit_mdp(SyntheticFicoDecision(preset), household,
                                                                       3, preset))

    def test_recidivism_domain(self):
        records = compas_records(200)
        models = train_risk_models(records, ForestConfig(n_trees=5, max_depth=4, min_leaf=5, seed=2))
        domain = RecidivismDomain(records, models, FULL, min_initial_score=1)
        mdp, _ = domain.mdp_for(records[0], 3)
        self.assert_outcomes_sum_to_one(mdp)

    def test_stochastic_tabular(self):
        self.assert_outcomes_sum_to_one(coin_mdp())


class TestRollout(unittest.TestCase):

    def test_greedy_climbs_the_nearer_peak(self):
        mdp = build_preset_mdp("fig1_default", resources=3)
        trajectory = rollout(mdp, GreedyPolicy(), mdp.initial_state, rng_seed=0)
        self.assertEqual(trajectory.labels(), ["left", "left", "stay"])
        self.assertAlmostEqual(trajectory.final_decision, 2.5, places=6)
        self.assertEqual(trajectory.final_state.resources, 0)
        self.assertEqual(trajectory.rewards()[:2], [0.0, 0.0])

    def test_terminal_start_gives_empty_trajectory(self):
        mdp = build_preset_mdp("fig1_default", resources=0)
        trajectory = rollout(mdp, GreedyPolicy(), mdp.initial_state, rng_seed=0)
        self.assertEqual(len(trajectory), 0)
        self.assertEqual(trajectory.final_decision, mdp.decision(mdp.initial_state))

    def test_illegal_fixed_action_reports_step(self):
        mdp = build_preset_mdp("fig1_default", resources=4, start=[6.0])
        with self.assertRaises(IllegalActionError) as ctx:
            rollout(mdp, fixed_policy("right"), mdp.initial_state, rng_seed=0)
        self.assertEqual(ctx.exception.step, 2)

    def test_same_seed_same_trajectory(self):
        mdp = build_preset_mdp("fig2_default", resources=5)
        first = rollout(mdp, RandomPolicy(), mdp.initial_state, rng_seed=42)
        second = rollout(mdp, RandomPolicy(), mdp.initial_state, rng_seed=42)
        self.assertEqual(first.labels(), second.labels())


class TestPolicyValueEstimate(unittest.TestCase):

    def test_deterministic_pair_collapses_to_one_rollout(self):
        mdp = build_preset_mdp("fig1_default", resources=3)
        estimate = estimate_policy_value(mdp, GreedyPolicy(), mdp.initial_state, n_samples=100, rng_seed=1)
        self.assertEqual(estimate.evaluations, 1)
        self.assertEqual(estimate.stderr, 0.0)
        self.assertAlmostEqual(estimate.mean, 2.5, places=6)

    def test_single_sample_has_zero_stderr(self):
        mdp = build_preset_mdp("fig2_default", resources=3)
        estimate = estimate_policy_value(mdp, RandomPolicy(), mdp.initial_state, n_samples=1, rng_seed=1)
        self.assertEqual(estimate.stderr, 0.0)
        self.assertEqual(estimate.evaluations, 1)

    def test_stochastic_estimate_is_reproducible(self):
        mdp = coin_mdp()
        first = estimate_policy_value(mdp, GreedyPolicy(), mdp.initial_state, n_samples=400, rng_seed=9)
        second = estimate_policy_value(mdp, GreedyPolicy(), mdp.initial_state, n_samples=400, rng_seed=9)
        self.assertEqual(first.values, second.values)
        self.assertEqual(first.evaluations, 400)
        self.assertAlmostEqual(first.mean, 3.0, delta=0.3)
        self.assertGreater(first.stderr, 0.0)

    def test_needs_a_sample(self):
        mdp = coin_mdp()
        with self.assertRaises(ValueError):
            estimate_policy_value(mdp, GreedyPolicy(), mdp.initial_state, n_samples=0, rng_seed=1)


class TestTabular(unittest.TestCase):

    def test_random_tabular_is_seeded(self):
        first = random_tabular_mdp(np.random.default_rng(5))
        second = random_tabular_mdp(np.random.default_rng(5))
        self.assertEqual(first.model.table, second.model.table)
        self.assertEqual(first.initial_state, second.initial_state)
        self.assertTrue(first.is_deterministic)

    def test_every_node_has_a_legal_action(self):
        mdp = random_tabular_mdp(np.random.default_rng(6), illegal_fraction=0.9)
        for node in range(30):
            state = tabular_state(mdp.decision_function.schema, node, 1)
            self.assertTrue(mdp.legal_actions(state))


class TestCommitment(unittest.TestCase):

    def test_fallback_replaces_advice_once_commitment_runs_out(self):
        base = build_preset_mdp("fig1_default", resources=3)
        model = CommitmentModel(base.model, {"left": 1.0}, threshold=1.0,
                                fallback=lambda state: base.model.action("stay"))
        start = base.initial_state.evolve(**{COMMITMENT: 1.5})
        mdp = AgencyMdp(base.decision_function, model, initial_state=start)
        left = model.action("left")

        first = mdp.enumerate_outcomes(start, left)[0].state
        self.assertEqual(first.x.tolist(), [-1.0])
        self.assertAlmostEqual(first.extra(COMMITMENT), 0.5)

        second = mdp.enumerate_outcomes(first, left)[0].state
        self.assertEqual(second.x.tolist(), [-1.0])
        self.assertEqual(second.resources, 1)

    def test_illegal_fallback_leaves_the_advice_in_place(self):
        base = build_preset_mdp("fig1_default", resources=2, start=[8.0])
        model = CommitmentModel(base.model, {}, threshold=1.0,
                                fallback=lambda state: base.model.action("right"))
        start = base.initial_state.evolve(**{COMMITMENT: 0.0})
        mdp = AgencyMdp(base.decision_function, model, initial_state=start)
        left = model.action("left")

        self.assertFalse(base.model.is_legal(start, model.action("right")))
        self.assertEqual(model.effective_action(start, left), left)
        self.assertNotIn(model.action("right"), mdp.legal_actions(start))
        after = mdp.enumerate_outcomes(start, left)[0].state
        self.assertEqual(after.x.tolist(), [7.0])

    def test_legal_fallback_overrides_the_advice(self):
        base = build_preset_mdp("fig1_default", resources=2)
        model = CommitmentModel(base.model, {}, threshold=1.0,
                                fallback=lambda state: base.model.action("right"))
        start = base.initial_state.evolve(**{COMMITMENT: 0.0})
        after = model.outcomes(start, model.action("left"))[0].state
        self.assertEqual(after.x.tolist(), [1.0])


if __name__ == '__main__':
    unittest.main()
