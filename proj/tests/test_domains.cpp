#include <cmath>
#include <set>
#include <stdexcept>

#include <gtest/gtest.h>
#include <ope/domains.hpp>

namespace {

TEST(Softmax, TwoActionValues) {
  // Preference gap 2 and gap 1 give the classic logistic probabilities.
  const ope::Policy p = ope::softmax_policy({{1.0, -1.0}, {0.0, 1.0}});
  EXPECT_NEAR(p.prob(0, 0), 0.8807970779778823, 1e-15);
  EXPECT_NEAR(p.prob(0, 1), 0.1192029220221177, 1e-15);
  EXPECT_NEAR(p.prob(1, 1), 0.7310585786300049, 1e-15);
  EXPECT_NEAR(p.prob(1, 0), 0.2689414213699951, 1e-15);
}

TEST(Softmax, ShiftInvariantAndNormalized) {
  const ope::Policy a = ope::softmax_policy({{5.0, 3.0, 1.0}});
  const ope::Policy b = ope::softmax_policy({{105.0, 103.0, 101.0}});
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(a.prob(0, k), b.prob(0, k), 1e-12);
  EXPECT_NO_THROW(a.validate());
}

TEST(DomainRegistry, NamesRoundTrip) {
  const auto names = ope::domain_names();
  ASSERT_EQ(names.size(), 5u);
  for (const auto& name : names) {
    const ope::DomainSpec d = ope::domain_by_name(name);
    EXPECT_EQ(d.name, name);
    EXPECT_NO_THROW(d.mdp.validate());
    EXPECT_NO_THROW(d.behavior.validate());
    EXPECT_NO_THROW(d.evaluation.validate());
    ASSERT_EQ(d.observation_map.size(), static_cast<std::size_t>(d.mdp.num_states));
    for (int obs : d.observation_map) {
      ASSERT_GE(obs, 0);
      ASSERT_LT(obs, d.num_observed_states);
    }
    // Policies are defined over observed states.
    EXPECT_EQ(d.behavior.num_states, d.num_observed_states);
    EXPECT_EQ(d.evaluation.num_states, d.num_observed_states);
  }
  EXPECT_EQ(ope::domain_by_name("MODELFAIL").name, "modelfail");
  EXPECT_THROW(ope::domain_by_name("nope"), std::invalid_argument);
}

TEST(ModelFail, TrajectoryStructure) {
  const ope::DomainSpec d = ope::build_modelfail();
  EXPECT_EQ(d.mdp.horizon, 2);
  EXPECT_EQ(d.num_observed_states, 2);
  const ope::Dataset data = ope::sample_domain_dataset(d, d.behavior, 256, ope::Rng(71));
  for (const auto& traj : data.trajectories) {
    // Both live latent states collapse to observation 0; the terminal
    // state is observation 1.
    ASSERT_EQ(traj.states[0], 0);
    ASSERT_EQ(traj.states[1], 0);
    ASSERT_EQ(traj.states[2], 1);
    ASSERT_DOUBLE_EQ(traj.rewards[0], 0.0);
    ASSERT_NE(traj.rewards[1], 0.0);
    ASSERT_DOUBLE_EQ(std::abs(traj.rewards[1]), 1.0);
    // The exit reward carries the sign of the hidden first action.
    ASSERT_DOUBLE_EQ(traj.rewards[1], traj.actions[0] == 0 ? 1.0 : -1.0);
  }
}

TEST(ModelFail, BehaviorFavorsTheGoodArm) {
  const ope::DomainSpec d = ope::build_modelfail();
  EXPECT_NEAR(d.behavior.prob(0, 0), 0.8807970779778823, 1e-12);
  EXPECT_NEAR(d.evaluation.prob(0, 0), 0.1192029220221177, 1e-12);
  EXPECT_NEAR(ope::true_value(d, d.evaluation), -std::tanh(1.0), 1e-12);
  EXPECT_NEAR(ope::true_value(d, d.behavior), std::tanh(1.0), 1e-12);
}

TEST(ModelWin, TrajectoryAlternatesBetweenHubAndSpokes) {
  const ope::DomainSpec d = ope::build_modelwin();
  EXPECT_EQ(d.mdp.horizon, 20);
  const ope::Dataset data = ope::sample_domain_dataset(d, d.behavior, 64, ope::Rng(72));
  for (const auto& traj : data.trajectories) {
    int hub_decisions = 0;
    for (int t = 0; t <= 20; ++t) {
      const int s = traj.states[t];
      if (t % 2 == 0) {
        ASSERT_EQ(s, 0) << "even steps sit in the hub; the horizon, not a terminal "
                        << "state, ends the episode";
        if (t < 20) ++hub_decisions;
      } else {
        ASSERT_TRUE(s == 1 || s == 2) << "odd steps sit in a spoke";
        ASSERT_DOUBLE_EQ(traj.rewards[t - 1], s == 1 ? 1.0 : -1.0);
        ASSERT_DOUBLE_EQ(traj.rewards[t], 0.0) << "returning to the hub pays nothing";
      }
    }
    ASSERT_EQ(hub_decisions, 10);
  }
}

TEST(ModelWin, SpokeProbabilitiesMatchTheDesign) {
  const ope::DomainSpec d = ope::build_modelwin();
  EXPECT_NEAR(d.behavior.prob(0, 0), 0.7310585786300049, 1e-12);
  EXPECT_NEAR(d.evaluation.prob(0, 0), 0.2689414213699951, 1e-12);
  EXPECT_DOUBLE_EQ(d.mdp.trans_prob(0, 0, 1), 0.4);
  EXPECT_DOUBLE_EQ(d.mdp.trans_prob(0, 0, 2), 0.6);
  EXPECT_DOUBLE_EQ(d.mdp.trans_prob(0, 1, 1), 0.6);
  EXPECT_DOUBLE_EQ(d.mdp.trans_prob(0, 1, 2), 0.4);
  EXPECT_NEAR(ope::true_value(d, d.evaluation), 2.0 * std::tanh(0.5), 1e-12);
}

TEST(Gridworld, GeometryAndRewards) {
  const ope::DomainSpec d = ope::build_gridworld(false);
  EXPECT_EQ(d.mdp.num_states, 16);
  EXPECT_EQ(d.mdp.num_actions, 4);
  EXPECT_EQ(d.mdp.horizon, 100);
  EXPECT_EQ(d.model_horizon, 100);
  EXPECT_EQ(ope::build_gridworld(true).model_horizon, 101);
  // Moving off the grid stays put; moving into the goal pays +10.
  EXPECT_DOUBLE_EQ(d.mdp.trans_prob(0, 0, 0), 1.0);   // up from the top row bumps
  EXPECT_DOUBLE_EQ(d.mdp.trans_prob(0, 3, 1), 1.0);   // right moves one column
  EXPECT_DOUBLE_EQ(d.mdp.trans_prob(14, 3, 15), 1.0); // into the goal
  EXPECT_DOUBLE_EQ(d.mdp.reward_at(14, 3, 15), 10.0);
  EXPECT_DOUBLE_EQ(d.mdp.reward_at(0, 3, 1), -1.0);
  EXPECT_DOUBLE_EQ(d.mdp.initial[0], 1.0);
}

TEST(Gridworld, PolicyLadder) {
  const ope::Policy p1 = ope::gridworld_policy(1);
  for (int a = 0; a < 4; ++a) EXPECT_DOUBLE_EQ(p1.prob(5, a), 0.25);
  // Higher-index policies sharpen toward the optimal action; compare the
  // probability each assigns to moving right from the start cell.
  double last = p1.prob(0, 3) + p1.prob(0, 1);
  for (int k = 2; k <= 5; ++k) {
    const ope::Policy p = ope::gridworld_policy(k);
    const double toward_goal = p.prob(0, 3) + p.prob(0, 1);
    EXPECT_GT(toward_goal, last) << "policy " << k;
    last = toward_goal;
  }
  const ope::DomainSpec d = ope::build_gridworld(false);
  double v_prev = -1e9;
  for (int k = 1; k <= 5; ++k) {
    ope::Policy p = ope::gridworld_policy(k);
    const double v = ope::true_value(d, p);
    EXPECT_GT(v, v_prev) << "policy " << k << " must improve on policy " << k - 1;
    v_prev = v;
  }
  EXPECT_THROW(ope::gridworld_policy(0), std::invalid_argument);
  EXPECT_THROW(ope::gridworld_policy(6), std::invalid_argument);
}

TEST(Gridworld, DeterministicPolicyGivesIdenticalTrajectories) {
  ope::DomainSpec d = ope::build_gridworld(false);
  ope::Policy go = d.behavior;
  for (int s = 0; s < 16; ++s) {
    const int col = s % 4;
    for (int a = 0; a < 4; ++a) {
      go.probs[static_cast<std::size_t>(s) * 4 + a] = 0.0;
    }
    go.probs[static_cast<std::size_t>(s) * 4 + (col < 3 ? 3 : 1)] = 1.0;
  }
  d.behavior = d.evaluation = go;
  const ope::Dataset a = ope::sample_domain_dataset(d, d.behavior, 3, ope::Rng(1));
  const ope::Dataset b = ope::sample_domain_dataset(d, d.behavior, 3, ope::Rng(999));
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(a.trajectories[i].states, b.trajectories[i].states);
    EXPECT_EQ(a.trajectories[i].actions, b.trajectories[i].actions);
  }
  // Right, right, right, then down the last column: goal entered at step 6.
  EXPECT_EQ(a.trajectories[0].states[6], 15);
  EXPECT_DOUBLE_EQ(ope::episode_return(a.trajectories[0], 1.0), -5.0 + 10.0);
}

TEST(Hybrid, StitchesTheTwoDesigns) {
  const ope::DomainSpec d = ope::build_hybrid();
  EXPECT_EQ(d.mdp.horizon, 22);
  EXPECT_EQ(d.num_observed_states, 5);
  EXPECT_NEAR(ope::true_value(d, d.evaluation), -std::tanh(1.0) + 2.0 * std::tanh(0.5), 1e-12);
  const ope::Dataset data = ope::sample_domain_dataset(d, d.behavior, 64, ope::Rng(73));
  std::set<int> observed;
  for (const auto& traj : data.trajectories) {
    // First two steps replay the confounded stage: observation 0 twice,
    // zero reward then the +-1 exit reward.
    ASSERT_EQ(traj.states[0], 0);
    ASSERT_EQ(traj.states[1], 0);
    ASSERT_DOUBLE_EQ(traj.rewards[0], 0.0);
    ASSERT_DOUBLE_EQ(std::abs(traj.rewards[1]), 1.0);
    ASSERT_DOUBLE_EQ(traj.rewards[1], traj.actions[0] == 0 ? 1.0 : -1.0);
    // Then the hub-and-spokes stage runs to the horizon.
    for (int t = 2; t < 22; t += 2) {
      ASSERT_EQ(traj.states[t], 1) << "hub observation";
      ASSERT_TRUE(traj.states[t + 1] == 2 || traj.states[t + 1] == 3);
      ASSERT_DOUBLE_EQ(traj.rewards[t], traj.states[t + 1] == 2 ? 1.0 : -1.0);
    }
    ASSERT_EQ(traj.states[22], 1) << "the horizon ends the episode back in the hub";
    for (int s : traj.states) observed.insert(s);
  }
  // The padding observation (index 4) is never reached; everything else is.
  EXPECT_EQ(observed, (std::set<int>{0, 1, 2, 3}));
}

TEST(Hybrid, LatentStatesStayHidden) {
  const ope::DomainSpec d = ope::build_hybrid();
  EXPECT_EQ(d.mdp.num_states, 7);
  // The two confounded latent states map to one observation.
  EXPECT_EQ(d.observation_map[1], d.observation_map[2]);
  EXPECT_EQ(d.observation_map[0], d.observation_map[1]);
}

}  // namespace
