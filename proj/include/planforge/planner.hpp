#pragma once

// Forward state-space planning over a GroundUniverse:
//   - breadth-first search (optimal in plan length; proves unsolvability),
//   - FF-style search: enforced hill-climbing on the relaxed-plan heuristic
//     with helpful actions, falling back to complete greedy best-first search,
//   - diversification of a base plan with reversible detours.

#include <deque>
#include <functional>
#include <queue>
#include <unordered_set>

#include "planforge/ground.hpp"
#include "planforge/rng.hpp"

namespace planforge {

// A ground action identified by name; resolvable against any universe of the
// same domain.
struct ActionCall {
  std::string name;
  std::vector<std::string> args;

  auto operator<=>(const ActionCall&) const = default;

  std::string str() const {
    std::string out = "(" + name;
    for (const auto& a : args) out += " " + a;
    return out + ")";
  }

  static ActionCall of(const GroundAction& a) { return {a.schema, a.args}; }
};

enum class Provenance { optimal, heuristic, diversified };
enum class StepRole { base, detour, corrective };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::optimal: return "optimal";
    case Provenance::heuristic: return "heuristic";
    case Provenance::diversified: return "diversified";
  }
  return "?";
}

inline Provenance provenance_from(std::string_view s) {
  if (s == "optimal") return Provenance::optimal;
  if (s == "heuristic") return Provenance::heuristic;
  if (s == "diversified") return Provenance::diversified;
  throw std::invalid_argument("unknown provenance '" + std::string(s) + "'");
}

inline const char* to_string(StepRole r) {
  switch (r) {
    case StepRole::base: return "base";
    case StepRole::detour: return "detour";
    case StepRole::corrective: return "corrective";
  }
  return "?";
}

struct Plan {
  std::vector<ActionCall> actions;
  Provenance provenance = Provenance::heuristic;
  // Empty, or one entry per action. Empty means every step is a base step.
  std::vector<StepRole> roles;

  std::size_t length() const { return actions.size(); }
  StepRole role(std::size_t i) const { return roles.empty() ? StepRole::base : roles[i]; }
  bool operator==(const Plan&) const = default;
};

// ---------------------------------------------------------------------------
// Plan files: one `(action args)` per line, `;` comments. Non-base roles are
// written as a trailing `; detour` / `; corrective` comment and read back.
// ---------------------------------------------------------------------------

inline std::string render_plan(const Plan& p) {
  std::string out = "; provenance: " + std::string(to_string(p.provenance)) + "\n";
  out += "; length: " + std::to_string(p.length()) + "\n";
  for (std::size_t i = 0; i < p.actions.size(); ++i) {
    out += p.actions[i].str();
    if (p.role(i) != StepRole::base) out += std::string(" ; ") + to_string(p.role(i));
    out += "\n";
  }
  return out;
}

inline std::optional<ActionCall> parse_action_call(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text.size() < 3 || text.front() != '(' || text.back() != ')') return std::nullopt;
  std::istringstream is(std::string(text.substr(1, text.size() - 2)));
  ActionCall c;
  if (!(is >> c.name)) return std::nullopt;
  c.name = detail::lower(c.name);
  if (!detail::is_identifier(c.name)) return std::nullopt;
  for (std::string tok; is >> tok;) {
    tok = detail::lower(tok);
    if (!detail::is_identifier(tok)) return std::nullopt;
    c.args.push_back(std::move(tok));
  }
  return c;
}

inline Plan parse_plan(std::string_view text) {
  Plan p;
  bool any_role = false;
  std::vector<StepRole> roles;
  std::istringstream is{std::string(text)};
  std::size_t lineno = 0;
  for (std::string line; std::getline(is, line);) {
    ++lineno;
    std::string_view body = line;
    std::string comment;
    if (auto semi = body.find(';'); semi != std::string_view::npos) {
      comment = detail::lower(std::string(body.substr(semi + 1)));
      body = body.substr(0, semi);
    }
    auto trimmed = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    std::string b = trimmed(std::string(body));
    comment = trimmed(comment);
    if (b.empty()) {
      if (comment.rfind("provenance:", 0) == 0) p.provenance = provenance_from(trimmed(comment.substr(11)));
      continue;
    }
    auto call = parse_action_call(b);
    if (!call) throw SyntaxError({static_cast<int>(lineno), 1}, "(action args...)", b);
    p.actions.push_back(std::move(*call));
    StepRole r = StepRole::base;
    if (comment == "detour") r = StepRole::detour;
    if (comment == "corrective") r = StepRole::corrective;
    any_role = any_role || r != StepRole::base;
    roles.push_back(r);
  }
  if (any_role) p.roles = std::move(roles);
  return p;
}

// ---------------------------------------------------------------------------
// Configuration and results
// ---------------------------------------------------------------------------

enum class SearchMode { bfs_optimal, heuristic_ff, diversified };

inline SearchMode search_mode_from(std::string_view s) {
  if (s == "bfs" || s == "bfs_optimal") return SearchMode::bfs_optimal;
  if (s == "ff" || s == "heuristic" || s == "heuristic_ff") return SearchMode::heuristic_ff;
  if (s == "diversified") return SearchMode::diversified;
  throw std::invalid_argument("unknown search mode '" + std::string(s) + "'");
}

struct SearchConfig {
  SearchMode mode = SearchMode::heuristic_ff;
  std::size_t max_expansions = 1'000'000;
  std::uint64_t seed = 0;
  double detour_rate = 0.0;  // diversified mode only
  GroundLimits limits{};

  void check() const {
    if (max_expansions == 0) throw std::invalid_argument("max_expansions must be > 0");
    if (!(detour_rate >= 0.0 && detour_rate <= 1.0)) throw std::invalid_argument("detour_rate must be in [0,1]");
  }
};

enum class SolveStatus { solved, unsolvable, exhausted };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::solved: return "solved";
    case SolveStatus::unsolvable: return "unsolvable";
    case SolveStatus::exhausted: return "exhausted";
  }
  return "?";
}

struct SearchStats {
  std::size_t expanded = 0;
  std::size_t generated = 0;
  std::size_t evaluated = 0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::exhausted;
  std::optional<Plan> plan;
  SearchStats stats;
  // Heuristic search ran out of states rather than budget: every reachable
  // state was visited or pruned as a relaxed dead end.
  bool space_exhausted = false;
};

// ---------------------------------------------------------------------------
// Relaxed planning graph (FF heuristic)
// ---------------------------------------------------------------------------

inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

class RelaxedPlanGraph {
 public:
  explicit RelaxedPlanGraph(const GroundUniverse& u)
      : u_(u),
        consumers_(u.atom_count()),
        achievers_(u.atom_count()),
        atom_level_(u.atom_count()),
        queued_(u.atom_count(), 0),
        sel_layer_(u.atom_count(), 0),
        sel_epoch_(u.atom_count(), 0),
        action_level_(u.actions().size()),
        remaining_(u.actions().size()),
        selected_(u.actions().size(), 0) {
    for (const auto& a : u.actions()) {
      if (a.pre.empty()) no_pre_.push_back(a.index);
      for (AtomId p : a.pre) consumers_[p].push_back(a.index);
      for (AtomId p : a.add) achievers_[p].push_back(a.index);
    }
  }

  // Length of an FF relaxed plan from `s` to `goal`, or kUnreachable.
  // Optionally reports helpful actions (applicable in `s`, adding a layer-1
  // subgoal) and the relaxed plan itself, both ascending by action id.
  std::size_t evaluate(const BitState& s, std::span<const AtomId> goal,
                       std::vector<ActionId>* helpful = nullptr,
                       std::vector<ActionId>* relaxed_plan = nullptr) {
    if (helpful) helpful->clear();
    if (relaxed_plan) relaxed_plan->clear();
    if (!expand(s, goal)) return kUnreachable;
    return extract(goal, helpful, relaxed_plan);
  }

  // Level of an atom in the last expanded graph (kInf when unreached).
  unsigned atom_level(AtomId a) const { return atom_level_[a]; }
  static constexpr unsigned kInf = std::numeric_limits<unsigned>::max();

 private:
  bool expand(const BitState& s, std::span<const AtomId> goal) {
    std::fill(atom_level_.begin(), atom_level_.end(), kInf);
    std::fill(action_level_.begin(), action_level_.end(), kInf);
    const auto& acts = u_.actions();
    for (std::size_t i = 0; i < acts.size(); ++i) remaining_[i] = static_cast<unsigned>(acts[i].pre.size());

    frontier_.clear();
    for (AtomId i = 0; i < atom_level_.size(); ++i)
      if (s.test(i)) {
        atom_level_[i] = 0;
        frontier_.push_back(i);
      }
    auto goals_left = [&] {
      std::size_t n = 0;
      for (AtomId g : goal)
        if (atom_level_[g] == kInf) ++n;
      return n;
    };
    std::size_t open_goals = goals_left();
    unsigned level = 0;
    while (open_goals > 0) {
      triggered_.clear();
      if (level == 0)
        for (ActionId a : no_pre_) {
          action_level_[a] = 0;
          triggered_.push_back(a);
        }
      for (AtomId p : frontier_)
        for (ActionId a : consumers_[p])
          if (--remaining_[a] == 0) {
            action_level_[a] = level;
            triggered_.push_back(a);
          }
      next_.clear();
      for (ActionId a : triggered_)
        for (AtomId q : acts[a].add)
          if (atom_level_[q] == kInf) {
            atom_level_[q] = level + 1;
            next_.push_back(q);
          }
      if (next_.empty()) break;
      ++level;
      frontier_.swap(next_);
      open_goals = goals_left();
    }
    return open_goals == 0;
  }

  std::size_t extract(std::span<const AtomId> goal, std::vector<ActionId>* helpful,
                      std::vector<ActionId>* relaxed_plan) {
    ++epoch_;
    unsigned top = 0;
    for (AtomId g : goal) top = std::max(top, atom_level_[g]);
    if (layers_.size() < top + 1) layers_.resize(top + 1);
    for (unsigned i = 0; i <= top; ++i) layers_[i].clear();
    auto queue_goal = [&](AtomId g) {
      if (atom_level_[g] == 0 || queued_[g] == epoch_) return;
      queued_[g] = epoch_;
      layers_[atom_level_[g]].push_back(g);
    };
    for (AtomId g : goal) queue_goal(g);

    // An atom added by an action selected at layer j counts as true at times
    // j and j-1; sel_layer_ keeps the lowest such j (layers are visited top-down).
    auto marked_at = [&](AtomId p, unsigned t) {
      if (sel_epoch_[p] != epoch_) return false;
      return sel_layer_[p] == t || sel_layer_[p] == t + 1;
    };

    std::size_t h = 0;
    for (unsigned i = top; i >= 1; --i) {
      for (std::size_t k = 0; k < layers_[i].size(); ++k) {
        AtomId g = layers_[i][k];
        if (marked_at(g, i)) continue;
        ActionId best = 0;
        unsigned best_cost = kInf;
        for (ActionId a : achievers_[g]) {
          if (action_level_[a] != i - 1) continue;
          unsigned cost = 0;
          for (AtomId p : u_.actions()[a].pre) cost += atom_level_[p];
          if (cost < best_cost) {
            best_cost = cost;
            best = a;
          }
        }
        const GroundAction& act = u_.actions()[best];
        if (selected_[best] != epoch_) {
          selected_[best] = epoch_;
          ++h;
          if (relaxed_plan) relaxed_plan->push_back(best);
        }
        for (AtomId p : act.pre)
          if (!marked_at(p, i - 1)) queue_goal(p);
        for (AtomId f : act.add) {
          sel_epoch_[f] = epoch_;
          sel_layer_[f] = i;
        }
      }
    }
    if (helpful && top >= 1) {
      for (AtomId g : layers_[1])
        for (ActionId a : achievers_[g])
          if (action_level_[a] == 0) helpful->push_back(a);
      std::sort(helpful->begin(), helpful->end());
      helpful->erase(std::unique(helpful->begin(), helpful->end()), helpful->end());
    }
    if (relaxed_plan) std::sort(relaxed_plan->begin(), relaxed_plan->end());
    return h;
  }

  const GroundUniverse& u_;
  std::vector<std::vector<ActionId>> consumers_;
  std::vector<std::vector<ActionId>> achievers_;
  std::vector<ActionId> no_pre_;
  std::vector<unsigned> atom_level_;
  std::vector<std::uint32_t> queued_;
  std::vector<unsigned> sel_layer_;
  std::vector<std::uint32_t> sel_epoch_;
  std::vector<unsigned> action_level_;
  std::vector<unsigned> remaining_;
  std::vector<std::uint32_t> selected_;
  std::vector<AtomId> frontier_, next_;
  std::vector<ActionId> triggered_;
  std::vector<std::vector<AtomId>> layers_;
  std::uint32_t epoch_ = 0;
};

inline std::size_t relaxed_plan_heuristic(const State& x, const GroundUniverse& u) {
  RelaxedPlanGraph g(u);
  return g.evaluate(u.encode(x), u.goal_ids());
}

inline std::size_t relaxed_plan_heuristic(const State& x, const Problem& q, const GroundUniverse& u) {
  (void)q;
  return relaxed_plan_heuristic(x, u);
}

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

namespace detail {

struct SearchNode {
  BitState state;
  std::uint32_t parent;
  ActionId action;
};

inline Plan trace_back(const GroundUniverse& u, const std::vector<SearchNode>& nodes, std::uint32_t leaf,
                       Provenance prov) {
  std::vector<ActionCall> rev;
  for (std::uint32_t n = leaf; nodes[n].parent != n; n = nodes[n].parent)
    rev.push_back(ActionCall::of(u.actions()[nodes[n].action]));
  Plan p;
  p.actions.assign(rev.rbegin(), rev.rend());
  p.provenance = prov;
  return p;
}

// Greedy action elimination: drop an action (and any later actions that stop
// being applicable) whenever the goal is still reached.
inline std::vector<ActionId> eliminate_redundant(const GroundUniverse& u, std::vector<ActionId> plan) {
  for (std::size_t i = 0; i < plan.size();) {
    BitState s = u.init();
    for (std::size_t k = 0; k < i; ++k) s = u.successor(s, u.actions()[plan[k]]);
    std::vector<ActionId> kept(plan.begin(), plan.begin() + static_cast<std::ptrdiff_t>(i));
    for (std::size_t k = i + 1; k < plan.size(); ++k) {
      const GroundAction& a = u.actions()[plan[k]];
      if (u.applicable(s, a)) {
        s = u.successor(s, a);
        kept.push_back(plan[k]);
      }
    }
    if (u.goal_reached(s))
      plan = std::move(kept);
    else
      ++i;
  }
  return plan;
}

}  // namespace detail

inline SolveResult bfs_search(const GroundUniverse& u, const SearchConfig& cfg) {
  SolveResult r;
  std::vector<detail::SearchNode> nodes;
  std::unordered_map<BitState, std::uint32_t, BitStateHash> seen;
  nodes.push_back({u.init(), 0, 0});
  seen.emplace(u.init(), 0);
  if (u.goal_reached(u.init())) {
    r.status = SolveStatus::solved;
    r.plan = Plan{{}, Provenance::optimal, {}};
    return r;
  }
  for (std::uint32_t head = 0; head < nodes.size(); ++head) {
    if (r.stats.expanded >= cfg.max_expansions) {
      r.status = SolveStatus::exhausted;
      return r;
    }
    ++r.stats.expanded;
    const BitState cur = nodes[head].state;
    for (ActionId a : u.applicable(cur)) {
      BitState next = u.successor(cur, u.actions()[a]);
      ++r.stats.generated;
      if (seen.count(next)) continue;
      auto id = static_cast<std::uint32_t>(nodes.size());
      seen.emplace(next, id);
      nodes.push_back({std::move(next), head, a});
      if (u.goal_reached(nodes.back().state)) {
        r.status = SolveStatus::solved;
        r.plan = detail::trace_back(u, nodes, id, Provenance::optimal);
        return r;
      }
    }
  }
  r.status = SolveStatus::unsolvable;
  return r;
}

inline SolveResult ff_search(const GroundUniverse& u, const SearchConfig& cfg) {
  SolveResult r;
  RelaxedPlanGraph rpg(u);
  auto finish = [&](std::vector<ActionId> ids) {
    ids = detail::eliminate_redundant(u, std::move(ids));
    Plan p;
    p.provenance = Provenance::heuristic;
    for (ActionId a : ids) p.actions.push_back(ActionCall::of(u.actions()[a]));
    r.status = SolveStatus::solved;
    r.plan = std::move(p);
    return r;
  };

  std::vector<ActionId> helpful;
  std::size_t h = rpg.evaluate(u.init(), u.goal_ids(), &helpful);
  ++r.stats.evaluated;
  if (h == kUnreachable) {
    r.status = SolveStatus::exhausted;
    r.space_exhausted = true;
    return r;
  }

  // Enforced hill-climbing over helpful actions.
  {
    BitState current = u.init();
    std::vector<ActionId> plan;
    std::vector<ActionId> cur_helpful = helpful;
    bool failed = false;
    while (h > 0 && !failed) {
      struct Node {
        BitState state;
        std::int64_t parent;
        ActionId action;
        std::vector<ActionId> helpful;
      };
      std::vector<Node> nodes;
      std::unordered_set<BitState, BitStateHash> visited;
      nodes.push_back({current, -1, 0, cur_helpful});
      visited.insert(current);
      bool improved = false;
      for (std::size_t head = 0; head < nodes.size() && !improved; ++head) {
        if (r.stats.expanded >= cfg.max_expansions) {
          r.status = SolveStatus::exhausted;
          return r;
        }
        ++r.stats.expanded;
        const std::vector<ActionId> ops = nodes[head].helpful;
        const BitState from = nodes[head].state;
        for (ActionId a : ops) {
          BitState next = u.successor(from, u.actions()[a]);
          ++r.stats.generated;
          if (!visited.insert(next).second) continue;
          std::vector<ActionId> next_helpful;
          std::size_t hn = rpg.evaluate(next, u.goal_ids(), &next_helpful);
          ++r.stats.evaluated;
          if (hn == kUnreachable) continue;
          nodes.push_back({std::move(next), static_cast<std::int64_t>(head), a, std::move(next_helpful)});
          if (hn < h) {
            std::vector<ActionId> seg;
            for (std::int64_t n = static_cast<std::int64_t>(nodes.size()) - 1; nodes[n].parent >= 0;
                 n = nodes[n].parent)
              seg.push_back(nodes[n].action);
            plan.insert(plan.end(), seg.rbegin(), seg.rend());
            current = nodes.back().state;
            cur_helpful = nodes.back().helpful;
            h = hn;
            improved = true;
            break;
          }
        }
      }
      if (!improved) failed = true;
    }
    if (!failed) return finish(std::move(plan));
  }

  // Complete greedy best-first search on h, ties broken by generation order.
  std::vector<detail::SearchNode> nodes;
  std::unordered_set<BitState, BitStateHash> closed;
  using Entry = std::tuple<std::size_t, std::uint32_t>;  // (h, node id)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  nodes.push_back({u.init(), 0, 0});
  closed.insert(u.init());
  open.emplace(rpg.evaluate(u.init(), u.goal_ids()), 0);
  while (!open.empty()) {
    auto [hv, id] = open.top();
    open.pop();
    if (u.goal_reached(nodes[id].state)) {
      Plan p = detail::trace_back(u, nodes, id, Provenance::heuristic);
      std::vector<ActionId> ids;
      for (const auto& c : p.actions) ids.push_back(u.find_action(c.name, c.args)->index);
      return finish(std::move(ids));
    }
    if (r.stats.expanded >= cfg.max_expansions) {
      r.status = SolveStatus::exhausted;
      return r;
    }
    ++r.stats.expanded;
    const BitState cur = nodes[id].state;
    for (ActionId a : u.applicable(cur)) {
      BitState next = u.successor(cur, u.actions()[a]);
      ++r.stats.generated;
      if (!closed.insert(next).second) continue;
      std::size_t hn = rpg.evaluate(next, u.goal_ids());
      ++r.stats.evaluated;
      if (hn == kUnreachable) continue;
      nodes.push_back({std::move(next), id, a});
      open.emplace(hn, static_cast<std::uint32_t>(nodes.size() - 1));
    }
  }
  r.status = SolveStatus::exhausted;
  r.space_exhausted = true;
  return r;
}

// ---------------------------------------------------------------------------
// Diversification
// ---------------------------------------------------------------------------

namespace detail {

// Shortest action sequence (≤ max_depth) from `from` to exactly `to`.
inline std::optional<std::vector<ActionId>> path_between(const GroundUniverse& u, const BitState& from,
                                                         const BitState& to, unsigned max_depth) {
  if (from == to) return std::vector<ActionId>{};
  std::vector<SearchNode> nodes{{from, 0, 0}};
  std::vector<unsigned> depth{0};
  std::unordered_set<BitState, BitStateHash> seen{from};
  for (std::uint32_t head = 0; head < nodes.size(); ++head) {
    if (depth[head] >= max_depth) continue;
    const BitState cur = nodes[head].state;
    for (ActionId a : u.applicable(cur)) {
      BitState next = u.successor(cur, u.actions()[a]);
      if (!seen.insert(next).second) continue;
      nodes.push_back({next, head, a});
      depth.push_back(depth[head] + 1);
      if (next == to) {
        std::vector<ActionId> rev;
        for (std::uint32_t n = static_cast<std::uint32_t>(nodes.size() - 1); n != 0; n = nodes[n].parent)
          rev.push_back(nodes[n].action);
        return std::vector<ActionId>(rev.rbegin(), rev.rend());
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Inserts, with probability cfg.detour_rate at each position (before every base
// action and after the last), a detour: one random applicable action followed
// by a corrective segment (its inverse when one exists, else a shortest path of
// at most 4 steps) that restores the exact pre-detour state.
inline Plan diversify(const GroundUniverse& u, const Plan& base, const SearchConfig& cfg) {
  cfg.check();
  if (cfg.detour_rate <= 0.0) return base;
  Rng rng(cfg.seed);
  Plan out;
  out.provenance = Provenance::diversified;
  bool inserted = false;
  BitState x = u.init();
  constexpr unsigned kMaxCorrective = 4;
  constexpr int kCandidates = 8;
  for (std::size_t pos = 0; pos <= base.length(); ++pos) {
    if (rng.chance(cfg.detour_rate)) {
      std::vector<ActionId> cands;
      for (ActionId a : u.applicable(x))
        if (!(u.successor(x, u.actions()[a]) == x)) cands.push_back(a);
      rng.shuffle(cands);
      for (int tries = 0; tries < kCandidates && tries < static_cast<int>(cands.size()); ++tries) {
        const GroundAction& d = u.actions()[cands[static_cast<std::size_t>(tries)]];
        BitState x1 = u.successor(x, d);
        std::optional<std::vector<ActionId>> back;
        for (ActionId b : u.applicable(x1))
          if (u.successor(x1, u.actions()[b]) == x) {
            back = std::vector<ActionId>{b};
            break;
          }
        if (!back) back = detail::path_between(u, x1, x, kMaxCorrective);
        if (!back) continue;
        out.actions.push_back(ActionCall::of(d));
        out.roles.push_back(StepRole::detour);
        for (ActionId b : *back) {
          out.actions.push_back(ActionCall::of(u.actions()[b]));
          out.roles.push_back(StepRole::corrective);
        }
        inserted = true;
        break;
      }
    }
    if (pos < base.length()) {
      const auto& c = base.actions[pos];
      const GroundAction* a = u.find_action(c.name, c.args);
      if (!a) throw std::invalid_argument("base plan action " + c.str() + " is not a ground action");
      x = u.apply(x, *a);
      out.actions.push_back(c);
      out.roles.push_back(base.role(pos) == StepRole::base ? StepRole::base : base.role(pos));
    }
  }
  if (!inserted) return base;
  return out;
}

inline Plan diversify(const Problem& q, const Plan& base, const SearchConfig& cfg) {
  GroundUniverse u(q, cfg.limits);
  return diversify(u, base, cfg);
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline SolveResult solve(const GroundUniverse& u, const SearchConfig& cfg) {
  cfg.check();
  switch (cfg.mode) {
    case SearchMode::bfs_optimal: return bfs_search(u, cfg);
    case SearchMode::heuristic_ff: return ff_search(u, cfg);
    case SearchMode::diversified: {
      SolveResult r = ff_search(u, cfg);
      if (r.plan) r.plan = diversify(u, *r.plan, cfg);
      return r;
    }
  }
  return {};
}

inline SolveResult solve(const Problem& q, const SearchConfig& cfg) {
  GroundUniverse u(q, cfg.limits);
  return solve(u, cfg);
}

}  // namespace planforge
