#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "ope/mdp.hpp"

namespace ope {

/// Parse a tabular MDP from JSON. Expected shape:
///
/// {
///   "num_states": 4, "num_actions": 2, "gamma": 1.0, "horizon": 2,
///   "initial": [1.0, 0.0, 0.0, 0.0],
///   "transitions": [[[...s'...], ...a...], ...s...],
///   "rewards":     [[[...s'...], ...a...], ...s...],
///   "reward_min": -1.0, "reward_max": 1.0   // optional; derived if absent
/// }
///
/// The last state is the terminal state and must self-loop with zero
/// reward, matching TabularMDP::validate().
inline TabularMDP mdp_from_json(const nlohmann::json& j) {
  TabularMDP mdp;
  mdp.num_states = j.at("num_states").get<int>();
  mdp.num_actions = j.at("num_actions").get<int>();
  mdp.gamma = j.at("gamma").get<double>();
  mdp.horizon = j.at("horizon").get<int>();
  detail::require(mdp.num_states >= 1 && mdp.num_actions >= 1,
                  "mdp json: num_states and num_actions must be positive");

  mdp.initial = j.at("initial").get<std::vector<double>>();
  detail::require(static_cast<int>(mdp.initial.size()) == mdp.num_states,
                  "mdp json: initial distribution has wrong length");

  const auto& trans = j.at("transitions");
  const auto& rewards = j.at("rewards");
  detail::require(static_cast<int>(trans.size()) == mdp.num_states,
                  "mdp json: transitions must have num_states rows");
  detail::require(static_cast<int>(rewards.size()) == mdp.num_states,
                  "mdp json: rewards must have num_states rows");
  const std::size_t table = static_cast<std::size_t>(mdp.num_states) * mdp.num_actions *
                            mdp.num_states;
  mdp.trans.assign(table, 0.0);
  mdp.reward.assign(table, 0.0);
  for (int s = 0; s < mdp.num_states; ++s) {
    detail::require(static_cast<int>(trans[s].size()) == mdp.num_actions,
                    "mdp json: transitions[" + std::to_string(s) + "] must have num_actions rows");
    detail::require(static_cast<int>(rewards[s].size()) == mdp.num_actions,
                    "mdp json: rewards[" + std::to_string(s) + "] must have num_actions rows");
    for (int a = 0; a < mdp.num_actions; ++a) {
      const auto& t_row = trans[s][a];
      const auto& r_row = rewards[s][a];
      detail::require(static_cast<int>(t_row.size()) == mdp.num_states,
                      "mdp json: transitions[" + std::to_string(s) + "][" + std::to_string(a) +
                          "] must have num_states entries");
      detail::require(static_cast<int>(r_row.size()) == mdp.num_states,
                      "mdp json: rewards[" + std::to_string(s) + "][" + std::to_string(a) +
                          "] must have num_states entries");
      for (int s2 = 0; s2 < mdp.num_states; ++s2) {
        mdp.trans[mdp.sa(s, a) + s2] = t_row[s2].get<double>();
        mdp.reward[mdp.sa(s, a) + s2] = r_row[s2].get<double>();
      }
    }
  }

  if (j.contains("reward_min")) {
    mdp.reward_min = j.at("reward_min").get<double>();
    mdp.reward_max = j.at("reward_max").get<double>();
  } else {
    // Derive bounds from rewards on transitions that can actually occur.
    double lo = 0.0;
    double hi = 0.0;
    for (int s = 0; s < mdp.num_states; ++s) {
      for (int a = 0; a < mdp.num_actions; ++a) {
        for (int s2 = 0; s2 < mdp.num_states; ++s2) {
          if (mdp.trans_prob(s, a, s2) > 0.0) {
            lo = std::min(lo, mdp.reward_at(s, a, s2));
            hi = std::max(hi, mdp.reward_at(s, a, s2));
          }
        }
      }
    }
    mdp.reward_min = lo;
    mdp.reward_max = hi;
  }
  mdp.validate();
  return mdp;
}

inline TabularMDP load_mdp_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  detail::require(in.good(), "load_mdp_json: cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  return mdp_from_json(j);
}

inline nlohmann::json mdp_to_json(const TabularMDP& mdp) {
  nlohmann::json j;
  j["num_states"] = mdp.num_states;
  j["num_actions"] = mdp.num_actions;
  j["gamma"] = mdp.gamma;
  j["horizon"] = mdp.horizon;
  j["initial"] = mdp.initial;
  j["reward_min"] = mdp.reward_min;
  j["reward_max"] = mdp.reward_max;
  auto trans = nlohmann::json::array();
  auto rewards = nlohmann::json::array();
  for (int s = 0; s < mdp.num_states; ++s) {
    auto t_s = nlohmann::json::array();
    auto r_s = nlohmann::json::array();
    for (int a = 0; a < mdp.num_actions; ++a) {
      auto t_sa = nlohmann::json::array();
      auto r_sa = nlohmann::json::array();
      for (int s2 = 0; s2 < mdp.num_states; ++s2) {
        t_sa.push_back(mdp.trans_prob(s, a, s2));
        r_sa.push_back(mdp.reward_at(s, a, s2));
      }
      t_s.push_back(std::move(t_sa));
      r_s.push_back(std::move(r_sa));
    }
    trans.push_back(std::move(t_s));
    rewards.push_back(std::move(r_s));
  }
  j["transitions"] = std::move(trans);
  j["rewards"] = std::move(rewards);
  return j;
}

}  // namespace ope
