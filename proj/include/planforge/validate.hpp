#pragma once

// Plan execution with valid-prefix semantics, success indicator and the
// Jaccard progress score as exact rationals.

#include <numeric>

#include <nlohmann/json.hpp>

#include "planforge/planner.hpp"

namespace planforge {

// Exact non-negative rational num/den in lowest terms, den > 0.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Ratio() = default;
  Ratio(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("ratio with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    auto g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  bool operator==(const Ratio&) const = default;
  bool operator<(const Ratio& o) const { return static_cast<__int128>(num) * o.den < static_cast<__int128>(o.num) * den; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

// |a ∩ b| / |a ∪ b|; two empty sets score 1.
inline Ratio jaccard(const State& a, const State& b) {
  std::size_t inter = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  if (uni == 0) return {1, 1};
  return {static_cast<std::int64_t>(inter), static_cast<std::int64_t>(uni)};
}

enum class GoalSemantics { containment, equality };
enum class ProgressMode { last_valid_state, strict_absorbing };

inline const char* to_string(GoalSemantics g) { return g == GoalSemantics::containment ? "containment" : "equality"; }
inline const char* to_string(ProgressMode p) {
  return p == ProgressMode::last_valid_state ? "last_valid_state" : "strict_absorbing";
}
inline GoalSemantics goal_semantics_from(std::string_view s) {
  if (s == "containment") return GoalSemantics::containment;
  if (s == "equality") return GoalSemantics::equality;
  throw std::invalid_argument("unknown goal semantics '" + std::string(s) + "'");
}
inline ProgressMode progress_mode_from(std::string_view s) {
  if (s == "last_valid_state") return ProgressMode::last_valid_state;
  if (s == "strict_absorbing") return ProgressMode::strict_absorbing;
  throw std::invalid_argument("unknown progress mode '" + std::string(s) + "'");
}

struct ValidationConfig {
  GoalSemantics goal_semantics = GoalSemantics::containment;
  ProgressMode progress_mode = ProgressMode::last_valid_state;
};

// One step of a candidate plan as it arrived: the source text and, when the
// text parsed, the action call it denotes.
struct RawAction {
  std::string text;
  std::optional<ActionCall> call;

  static RawAction of(const ActionCall& c) { return {c.str(), c}; }
};

inline std::vector<RawAction> raw_actions(const Plan& p) {
  std::vector<RawAction> out;
  out.reserve(p.actions.size());
  for (const auto& c : p.actions) out.push_back(RawAction::of(c));
  return out;
}

struct FirstFailure {
  std::size_t step = 0;
  std::string action;
  std::string reason;  // "unparseable", "unknown-action" or "precondition"
  std::vector<GroundAtom> missing;

  bool operator==(const FirstFailure&) const = default;
};

struct PrefixResult {
  std::size_t m = 0;
  State state;  // state after the valid prefix
  std::optional<FirstFailure> failure;

  // Execution hit an invalid action, so the algebraic state is the ∅ absorber.
  bool absorbed() const { return failure.has_value(); }
};

inline PrefixResult execute_prefix(const GroundUniverse& u, std::span<const RawAction> tau) {
  PrefixResult r;
  BitState x = u.init();
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const RawAction& ra = tau[i];
    if (!ra.call) {
      r.failure = FirstFailure{i, ra.text, "unparseable", {}};
      break;
    }
    const GroundAction* a = u.find_action(ra.call->name, ra.call->args);
    if (!a) {
      r.failure = FirstFailure{i, ra.call->str(), "unknown-action", {}};
      break;
    }
    if (!u.applicable(x, *a)) {
      r.failure = FirstFailure{i, a->str(), "precondition", u.missing(x, *a)};
      break;
    }
    x = u.successor(x, *a);
    r.m = i + 1;
  }
  r.state = u.decode(x);
  return r;
}

inline PrefixResult execute_prefix(const GroundUniverse& u, const Plan& p) {
  auto raw = raw_actions(p);
  return execute_prefix(u, raw);
}

struct ValidationReport {
  std::string problem_id;
  std::size_t m = 0;
  std::size_t length = 0;
  State final_state;
  bool absorbed = false;
  bool success = false;
  Ratio progress;
  std::optional<FirstFailure> first_failure;
  GoalSemantics goal_semantics = GoalSemantics::containment;
  ProgressMode progress_mode = ProgressMode::last_valid_state;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["problem_id"] = problem_id;
    j["m"] = m;
    j["length"] = length;
    j["success"] = success;
    j["progress_num"] = progress.num;
    j["progress_den"] = progress.den;
    j["goal_semantics"] = to_string(goal_semantics);
    j["progress_mode"] = to_string(progress_mode);
    if (first_failure) {
      nlohmann::json f;
      f["step"] = first_failure->step;
      f["action"] = first_failure->action;
      f["reason"] = first_failure->reason;
      f["missing"] = nlohmann::json::array();
      for (const auto& a : first_failure->missing) f["missing"].push_back(a.str());
      j["first_failure"] = f;
    } else {
      j["first_failure"] = nullptr;
    }
    return j;
  }
};

inline bool goal_holds(const State& x, const State& goal, GoalSemantics g) {
  if (g == GoalSemantics::equality) return x == goal;
  return std::includes(x.begin(), x.end(), goal.begin(), goal.end());
}

// The state the Jaccard score is taken on: the state after the valid prefix,
// or ∅ when execution was absorbed and either strict mode is on or nothing
// executed.
inline State progress_state(const PrefixResult& r, ProgressMode mode) {
  if (!r.absorbed()) return r.state;
  if (mode == ProgressMode::strict_absorbing || r.m == 0) return {};
  return r.state;
}

inline ValidationReport validate_plan(const GroundUniverse& u, std::span<const RawAction> tau,
                                      const ValidationConfig& cfg = {}, std::string problem_id = {}) {
  PrefixResult r = execute_prefix(u, tau);
  const State& goal = u.problem().goal;
  ValidationReport rep;
  rep.problem_id = std::move(problem_id);
  rep.m = r.m;
  rep.length = tau.size();
  rep.absorbed = r.absorbed();
  rep.success = !r.absorbed() && goal_holds(r.state, goal, cfg.goal_semantics);
  rep.progress = jaccard(progress_state(r, cfg.progress_mode), goal);
  rep.first_failure = r.failure;
  rep.final_state = std::move(r.state);
  rep.goal_semantics = cfg.goal_semantics;
  rep.progress_mode = cfg.progress_mode;
  return rep;
}

inline ValidationReport validate_plan(const GroundUniverse& u, const Plan& p, const ValidationConfig& cfg = {},
                                      std::string problem_id = {}) {
  auto raw = raw_actions(p);
  return validate_plan(u, raw, cfg, std::move(problem_id));
}

// A response that yielded no plan at all: m = 0, ∅ state.
inline ValidationReport absent_plan_report(const GroundUniverse& u, const ValidationConfig& cfg = {},
                                           std::string problem_id = {}, std::string reason = "no-plan") {
  ValidationReport rep;
  rep.problem_id = std::move(problem_id);
  rep.absorbed = true;
  rep.success = false;
  rep.progress = jaccard(State{}, u.problem().goal);
  rep.first_failure = FirstFailure{0, "", std::move(reason), {}};
  rep.final_state = u.problem().init;
  rep.goal_semantics = cfg.goal_semantics;
  rep.progress_mode = cfg.progress_mode;
  return rep;
}

inline int success_rate(const GroundUniverse& u, const Plan& p, const ValidationConfig& cfg = {}) {
  return validate_plan(u, p, cfg).success ? 1 : 0;
}

inline Ratio progress_score(const GroundUniverse& u, const Plan& p, const ValidationConfig& cfg = {}) {
  return validate_plan(u, p, cfg).progress;
}

// True when the plan executes fully and reaches the goal (containment).
inline bool plan_is_valid(const GroundUniverse& u, const Plan& p) {
  auto rep = validate_plan(u, p);
  return rep.success;
}

// Text table with the per-family success columns and the overall pair.
inline std::string report_table(const std::vector<std::pair<std::string, std::string>>& columns) {
  std::string head, rule, row;
  for (const auto& [name, value] : columns) {
    std::size_t w = std::max(name.size(), value.size());
    auto pad = [&](const std::string& s) { return s + std::string(w - s.size(), ' '); };
    head += (head.empty() ? "" : " | ") + pad(name);
    row += (row.empty() ? "" : " | ") + pad(value);
    rule += (rule.empty() ? "" : "-+-") + std::string(w, '-');
  }
  return head + "\n" + rule + "\n" + row + "\n";
}

}  // namespace planforge
