#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>
#include <ope/domains.hpp>
#include <ope/model.hpp>

namespace {

ope::Trajectory make_traj(std::vector<int> states, std::vector<int> actions,
                          std::vector<double> rewards) {
  ope::Trajectory t;
  t.states = std::move(states);
  t.actions = std::move(actions);
  t.rewards = std::move(rewards);
  t.behavior_probs.assign(t.actions.size(), 1.0);
  return t;
}

TEST(FitModel, SingleTrajectoryCounts) {
  // 0 -a0-> 1 (r 2), 1 -a0-> 2 (r 0); states {0,1,2}, terminal 2.
  ope::Dataset data;
  data.horizon = 2;
  data.trajectories.push_back(make_traj({0, 1, 2}, {0, 0}, {2.0, 0.0}));
  const ope::LearnedModel m = ope::fit_mle_model(data, 3, 2, 2);
  EXPECT_DOUBLE_EQ(m.initial_hat[0], 1.0);
  EXPECT_DOUBLE_EQ(m.trans_prob(0, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(m.trans_prob(1, 0, 2), 1.0);
  EXPECT_DOUBLE_EQ(m.reward_hat_at(0, 0, 1), 2.0);
  EXPECT_DOUBLE_EQ(m.expected_reward(0, 0), 2.0);
}

TEST(FitModel, PoolsCountsAcrossTimeAndAveragesRewards) {
  // Same (s,a) visited twice with different rewards and destinations.
  ope::Dataset data;
  data.horizon = 2;
  data.trajectories.push_back(make_traj({0, 0, 1}, {0, 0}, {1.0, 3.0}));
  const ope::LearnedModel m = ope::fit_mle_model(data, 2, 1, 2);
  EXPECT_DOUBLE_EQ(m.trans_prob(0, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(m.trans_prob(0, 0, 1), 0.5);
  EXPECT_DOUBLE_EQ(m.reward_hat_at(0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.reward_hat_at(0, 0, 1), 3.0);
  EXPECT_DOUBLE_EQ(m.expected_reward(0, 0), 2.0);
}

TEST(FitModel, UnseenPairsFallToTerminal) {
  ope::Dataset data;
  data.horizon = 1;
  data.trajectories.push_back(make_traj({0, 2}, {0}, {0.0}));
  const ope::LearnedModel m = ope::fit_mle_model(data, 3, 2, 1);
  // (0,1), (1,0), (1,1) were never observed.
  EXPECT_DOUBLE_EQ(m.trans_prob(0, 1, 2), 1.0);
  EXPECT_DOUBLE_EQ(m.trans_prob(1, 0, 2), 1.0);
  EXPECT_DOUBLE_EQ(m.expected_reward(1, 1), 0.0);
}

TEST(FitModel, TerminalRowIsAbsorbingRegardlessOfData) {
  ope::Dataset data;
  data.horizon = 2;
  data.trajectories.push_back(make_traj({0, 2, 2}, {0, 1}, {1.0, 0.0}));
  const ope::LearnedModel m = ope::fit_mle_model(data, 3, 2, 2);
  for (int a = 0; a < 2; ++a) {
    EXPECT_DOUBLE_EQ(m.trans_prob(2, a, 2), 1.0);
    EXPECT_DOUBLE_EQ(m.expected_reward(2, a), 0.0);
  }
}

TEST(FitModel, RejectsOutOfRangeIndices) {
  ope::Dataset data;
  data.horizon = 1;
  data.trajectories.push_back(make_traj({0, 5}, {0}, {0.0}));
  EXPECT_THROW(ope::fit_mle_model(data, 3, 2, 1), std::invalid_argument);
}

TEST(FitModel, TransitionFrequencyConvergesOnModelWin) {
  const ope::DomainSpec mw = ope::build_modelwin();
  const ope::Dataset data = ope::sample_domain_dataset(mw, mw.behavior, 20000, ope::Rng(11));
  const ope::LearnedModel m =
      ope::fit_mle_model(data, mw.num_observed_states, mw.mdp.num_actions, mw.model_horizon);
  // True P(good | start, action 0) = 0.4; counts are pooled over ~10 visits
  // per trajectory, so the standard error is far below 0.01.
  EXPECT_NEAR(m.trans_prob(0, 0, 1), 0.4, 0.01);
  EXPECT_NEAR(m.expected_reward(0, 0), 0.4 * 1.0 + 0.6 * (-1.0), 0.02);
}

TEST(ValueTables, ExactModelReproducesExactValue) {
  for (const char* name : {"modelwin", "gridworld-th"}) {
    const ope::DomainSpec d = ope::domain_by_name(name);
    const ope::LearnedModel m = ope::model_from_mdp(d.mdp, d.mdp.horizon);
    const ope::ValueTables t = ope::value_tables(m, d.evaluation, d.mdp.gamma);
    EXPECT_NEAR(ope::am_estimate(m, t), ope::true_value(d, d.evaluation), 1e-9) << name;
  }
}

TEST(ValueTables, ModelWinLastStepActionValue) {
  // At the final decision epoch the start state's action 0 is worth its
  // expected immediate reward: 0.4*1 + 0.6*(-1) = -0.2.
  const ope::DomainSpec mw = ope::build_modelwin();
  const ope::LearnedModel m = ope::model_from_mdp(mw.mdp, mw.mdp.horizon);
  const ope::ValueTables t = ope::value_tables(m, mw.evaluation, mw.mdp.gamma);
  EXPECT_NEAR(t.q_at(19, 0, 0), -0.2, 1e-12);
  EXPECT_NEAR(t.q_at(19, 0, 1), 0.2, 1e-12);
}

TEST(ValueTables, ZeroBeyondDepthAndTerminalAlwaysZero) {
  const ope::DomainSpec mw = ope::build_modelwin();
  const ope::LearnedModel m = ope::model_from_mdp(mw.mdp, mw.mdp.horizon);
  const ope::ValueTables t = ope::value_tables(m, mw.evaluation, mw.mdp.gamma);
  EXPECT_EQ(t.v_at(20, 0), 0.0);
  EXPECT_EQ(t.q_at(25, 0, 1), 0.0);
  for (int tt = 0; tt < 20; ++tt) {
    ASSERT_EQ(t.v_at(tt, 3), 0.0) << "terminal state must be worth exactly zero at t=" << tt;
  }
}

TEST(ValueTables, DeeperHorizonAddsLookahead) {
  // One extra DP level on the 20-step alternating chain adds one more
  // rewarding visit: the start-state value scales by 11/10.
  const ope::DomainSpec mw = ope::build_modelwin();
  const ope::LearnedModel m20 = ope::model_from_mdp(mw.mdp, 20);
  const ope::LearnedModel m21 = ope::model_from_mdp(mw.mdp, 21);
  const ope::ValueTables t20 = ope::value_tables(m20, mw.evaluation, 1.0);
  const ope::ValueTables t21 = ope::value_tables(m21, mw.evaluation, 1.0);
  const double v20 = ope::am_estimate(m20, t20);
  const double v21 = ope::am_estimate(m21, t21);
  EXPECT_NEAR(v21, v20 * 11.0 / 10.0, 1e-12);
}

TEST(ValueTables, AmUsesFittedInitialDistribution) {
  // Two trajectories starting in different states: the fitted initial
  // distribution is (0.5, 0.5), so the estimate averages the two row
  // values.
  ope::Dataset data;
  data.horizon = 1;
  data.trajectories.push_back(make_traj({0, 2}, {0}, {4.0}));
  data.trajectories.push_back(make_traj({1, 2}, {0}, {1.0}));
  const ope::LearnedModel m = ope::fit_mle_model(data, 3, 1, 1);
  const ope::ValueTables t = ope::value_tables(m, ope::uniform_policy(3, 1), 1.0);
  EXPECT_DOUBLE_EQ(t.v_at(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(t.v_at(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(ope::am_estimate(m, t), 2.5);
}

}  // namespace
