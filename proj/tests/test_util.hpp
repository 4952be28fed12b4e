#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "planforge/domains.hpp"
#include "planforge/pddl.hpp"

namespace testutil {

inline std::string read_data(const std::string& name) {
  std::ifstream in(std::string(PLANFORGE_TEST_DATA) + "/" + name, std::ios::binary);
  if (!in) throw std::runtime_error("missing test data " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::shared_ptr<const planforge::Domain> blocks() {
  static auto d = std::make_shared<const planforge::Domain>(planforge::parse_domain(planforge::domains::kBlocksWorld));
  return d;
}

inline planforge::Problem bw3() { return planforge::parse_problem(read_data("bw3.problem.pddl"), blocks()); }

inline planforge::GroundAtom atom(std::string pred, std::vector<std::string> args = {}) {
  return {std::move(pred), std::move(args)};
}

}  // namespace testutil

#include "planforge/rng.hpp"

namespace testutil {

// Random tower configuration over blocks b1..bn, all with hand empty.
inline planforge::State random_towers(std::size_t n, planforge::Rng& rng) {
  std::vector<std::string> blocks;
  for (std::size_t i = 1; i <= n; ++i) blocks.push_back("b" + std::to_string(i));
  rng.shuffle(blocks);
  planforge::State s{atom("handempty")};
  std::vector<std::string> tops;
  for (const auto& b : blocks) {
    if (tops.empty() || rng.chance(0.4)) {
      s.insert(atom("ontable", {b}));
      tops.push_back(b);
    } else {
      std::size_t k = rng.below(tops.size());
      s.insert(atom("on", {b, tops[k]}));
      tops[k] = b;
    }
  }
  for (const auto& t : tops) s.insert(atom("clear", {t}));
  return s;
}

inline planforge::Problem random_bw(std::size_t n, std::uint64_t seed, bool full_goal = false) {
  planforge::Rng rng(seed);
  std::string text = "(define (problem r" + std::to_string(seed) + ") (:domain blocksworld) (:objects";
  for (std::size_t i = 1; i <= n; ++i) text += " b" + std::to_string(i);
  text += ") (:init) (:goal (and)))";
  planforge::Problem q = planforge::parse_problem(text, blocks());
  q.init = random_towers(n, rng);
  planforge::State g = random_towers(n, rng);
  if (full_goal) {
    q.goal = g;
  } else {
    for (const auto& a : g)
      if (a.predicate == "on" || (a.predicate == "ontable" && rng.chance(0.3))) q.goal.insert(a);
  }
  return q;
}

}  // namespace testutil
