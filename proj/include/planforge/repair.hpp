#pragma once

// Domain validation against a problem suite, LLM-driven repair from solver
// feedback, and greedy pruning of redundant predicates and actions.

#include <regex>

#include "planforge/digest.hpp"
#include "planforge/llm.hpp"
#include "planforge/parallel.hpp"
#include "planforge/planner.hpp"
#include "planforge/prompts.hpp"

namespace planforge {

enum class SuiteStatus { solvable, unsolvable, exhausted, parse_error, semantic_error };

inline const char* to_string(SuiteStatus s) {
  switch (s) {
    case SuiteStatus::solvable: return "solvable";
    case SuiteStatus::unsolvable: return "unsolvable";
    case SuiteStatus::exhausted: return "exhausted";
    case SuiteStatus::parse_error: return "parse_error";
    case SuiteStatus::semantic_error: return "semantic_error";
  }
  return "?";
}

struct SuiteEntry {
  std::string problem_id;
  SuiteStatus status = SuiteStatus::solvable;
  std::optional<Plan> plan;
  std::string error;  // verbatim error trace, empty when solvable
  SearchStats stats;
};

struct SuiteReport {
  std::vector<SuiteEntry> entries;

  bool passes() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const SuiteEntry& e) { return e.status == SuiteStatus::solvable; });
  }
  std::vector<bool> pass_vector() const {
    std::vector<bool> v;
    for (const auto& e : entries) v.push_back(e.status == SuiteStatus::solvable);
    return v;
  }
  const SuiteEntry* first_failure() const {
    for (const auto& e : entries)
      if (e.status != SuiteStatus::solvable) return &e;
    return nullptr;
  }
};

struct SuiteBudget {
  std::size_t ff_expansions = 20000;
  std::size_t bfs_expansions = 200000;
  unsigned jobs = 1;
};

namespace repair_detail {

inline std::string stats_block(const char* search, const SearchStats& s) {
  std::ostringstream o;
  o << "statistics:\n"
    << "  search: " << search << "\n"
    << "  expanded: " << s.expanded << "\n"
    << "  generated: " << s.generated << "\n"
    << "  evaluated: " << s.evaluated << "\n";
  return o.str();
}

// Goal atoms that stay false even when deletes are ignored.
inline std::vector<GroundAtom> relaxed_unreachable_goals(const GroundUniverse& u) {
  BitState x = u.init();
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& a : u.actions()) {
      if (!x.contains_all(a.pre)) continue;
      for (AtomId p : a.add)
        if (!x.test(p)) {
          x.set(p);
          grew = true;
        }
    }
  }
  std::vector<GroundAtom> out;
  for (const auto& g : u.problem().goal) {
    auto id = u.atom_index(g);
    if (!id || !x.test(*id)) out.push_back(g);
  }
  return out;
}

inline SuiteEntry solve_entry(const Problem& q, const SuiteBudget& b) {
  SuiteEntry e;
  e.problem_id = q.name;
  try {
    check_problem(q);
    GroundUniverse u(q);
    SearchConfig ff;
    ff.mode = SearchMode::heuristic_ff;
    ff.max_expansions = b.ff_expansions;
    SolveResult r = solve(u, ff);
    const char* used = "ff";
    if (!r.plan && !r.space_exhausted) {
      SearchConfig bfs;
      bfs.mode = SearchMode::bfs_optimal;
      bfs.max_expansions = b.bfs_expansions;
      r = solve(u, bfs);
      used = "bfs";
    }
    e.stats = r.stats;
    if (r.plan) {
      e.plan = r.plan;
      return e;
    }
    const bool proven = r.space_exhausted || r.status == SolveStatus::unsolvable;
    e.status = proven ? SuiteStatus::unsolvable : SuiteStatus::exhausted;
    std::string msg = proven ? "unsolvable: the goal is not reachable from the initial state\n"
                             : "exhausted: search budget used up before a plan was found\n";
    msg += stats_block(used, r.stats);
    auto missing = relaxed_unreachable_goals(u);
    if (!missing.empty()) {
      msg += "relaxed-unreachable goals:";
      for (const auto& g : missing) msg += " " + g.str();
      msg += "\n";
    }
    e.error = msg;
  } catch (const SemanticError& ex) {
    e.status = SuiteStatus::semantic_error;
    e.error = std::string("semantic error: ") + ex.what() + "\n";
  } catch (const UniverseTooLarge& ex) {
    e.status = SuiteStatus::exhausted;
    e.error = std::string("exhausted: ") + ex.what() + "\n";
  }
  return e;
}

}  // namespace repair_detail

// Rebinds every suite problem to `d` and solves it.
inline SuiteReport validate_domain(std::shared_ptr<const Domain> d, const std::vector<Problem>& suite,
                                   const SuiteBudget& b = {}) {
  if (suite.empty()) throw std::invalid_argument("validation suite is empty");
  SuiteReport rep;
  rep.entries.resize(suite.size());
  parallel_for(suite.size(), b.jobs, [&](std::size_t i) {
    try {
      rep.entries[i] = repair_detail::solve_entry(rebind(suite[i], d), b);
    } catch (const SemanticError& ex) {
      rep.entries[i] = {suite[i].name, SuiteStatus::semantic_error, std::nullopt,
                        std::string("semantic error: ") + ex.what() + "\n", {}};
    }
  });
  return rep;
}

inline SuiteReport validate_domain(const Domain& d, const std::vector<Problem>& suite, const SuiteBudget& b = {}) {
  return validate_domain(std::make_shared<const Domain>(d), suite, b);
}

// Domain text variant: parse failures mark every entry.
inline SuiteReport validate_domain_text(std::string_view text, const std::vector<Problem>& suite,
                                        const SuiteBudget& b = {}) {
  if (suite.empty()) throw std::invalid_argument("validation suite is empty");
  auto fail_all = [&](SuiteStatus s, const std::string& msg) {
    SuiteReport rep;
    for (const auto& q : suite) rep.entries.push_back({q.name, s, std::nullopt, msg, {}});
    return rep;
  };
  try {
    return validate_domain(std::make_shared<const Domain>(parse_domain(text)), suite, b);
  } catch (const SemanticError& e) {
    return fail_all(SuiteStatus::semantic_error, std::string("semantic error: ") + e.what() + "\n");
  } catch (const PddlError& e) {
    return fail_all(SuiteStatus::parse_error, std::string("parse error: ") + e.what() + "\n");
  }
}

struct DiagnosticFeedback {
  std::string error;
  std::string problem_id;
  std::string prompt_text;
};

inline DiagnosticFeedback build_feedback(const std::string& error, const Problem& q, std::string_view domain_text) {
  DiagnosticFeedback f;
  f.error = error;
  f.problem_id = q.name;
  f.prompt_text = prompts::fill(prompts::kDomainFix, {{"Current domain", std::string(domain_text)},
                                                      {"Planning Problem", render_problem(q)},
                                                      {"Error Trace", error}});
  return f;
}

inline DiagnosticFeedback build_feedback(const SuiteEntry& e, const Problem& q, std::string_view domain_text) {
  return build_feedback(e.error, q, domain_text);
}

// Last balanced `(define (domain ...) ...)` form in free text.
inline std::optional<std::string> extract_domain_text(std::string_view text) {
  static const std::regex head(R"(\(\s*define\s*\(\s*domain\b)", std::regex::icase);
  std::optional<std::string> found;
  std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), head); it != std::sregex_iterator(); ++it) {
    std::size_t start = static_cast<std::size_t>(it->position());
    int depth = 0;
    bool comment = false;
    for (std::size_t i = start; i < s.size(); ++i) {
      char c = s[i];
      if (comment) {
        comment = c != '\n';
        continue;
      }
      if (c == ';') comment = true;
      if (c == '(') ++depth;
      if (c == ')' && --depth == 0) {
        found = s.substr(start, i - start + 1);
        break;
      }
    }
  }
  return found;
}

struct RepairRound {
  std::size_t round = 0;
  std::string domain_digest;
  std::vector<bool> passes;
  std::string note;
};

class RepairFailed : public std::runtime_error {
 public:
  explicit RepairFailed(std::vector<RepairRound> h)
      : std::runtime_error("domain repair failed after " + std::to_string(h.empty() ? 0 : h.back().round) +
                           " rounds"),
        history_(std::move(h)) {}
  const std::vector<RepairRound>& history() const { return history_; }

 private:
  std::vector<RepairRound> history_;
};

struct RepairOptions {
  std::size_t max_rounds = 5;
  SuiteBudget budget;
  LLMConfig llm;
};

struct RepairResult {
  std::string domain_text;
  std::shared_ptr<const Domain> domain;
  std::size_t rounds = 0;
  std::vector<RepairRound> history;
};

// Validates, and while some suite problem fails, sends the feedback prompt
// for the first failure and adopts the domain in the reply. Every round
// re-validates the whole suite.
inline RepairResult repair_loop(std::string domain_text, const std::vector<Problem>& suite, LLMClient& llm,
                                const RepairOptions& opt = {}) {
  if (opt.max_rounds == 0) throw std::invalid_argument("max_rounds must be > 0");
  RepairResult res;
  for (std::size_t round = 0;; ++round) {
    SuiteReport rep = validate_domain_text(domain_text, suite, opt.budget);
    res.history.push_back({round, sha256_hex(domain_text), rep.pass_vector(), ""});
    if (rep.passes()) {
      res.domain_text = domain_text;
      res.domain = std::make_shared<const Domain>(parse_domain(domain_text));
      res.rounds = round;
      return res;
    }
    if (round == opt.max_rounds) throw RepairFailed(res.history);
    const SuiteEntry* bad = rep.first_failure();
    const Problem& q = *std::find_if(suite.begin(), suite.end(), [&](const Problem& p) {
      return p.name == bad->problem_id;
    });
    DiagnosticFeedback fb = build_feedback(*bad, q, domain_text);
    std::string reply;
    try {
      reply = llm.complete(opt.llm, "", fb.prompt_text);
    } catch (const LLMUnavailable&) {
      throw;
    } catch (const LLMError& e) {
      res.history.back().note = std::string("llm error: ") + e.what();
      continue;
    }
    auto next = extract_domain_text(reply);
    if (!next) {
      res.history.back().note = "reply contained no domain";
      continue;
    }
    res.history.back().note = "feedback on " + bad->problem_id + " (" + to_string(bad->status) + ")";
    domain_text = *next;
  }
}

// ---------------------------------------------------------------------------
// Pruning
// ---------------------------------------------------------------------------

struct Component {
  enum class Kind { action, predicate } kind;
  std::string name;

  std::string str() const { return std::string(kind == Kind::action ? "action " : "predicate ") + name; }
  auto operator<=>(const Component&) const = default;
};

// Canonical (kind, name) order: actions first, then predicates.
inline std::vector<Component> components(const Domain& d) {
  std::vector<Component> out;
  for (const auto& a : d.actions) out.push_back({Component::Kind::action, a.name});
  for (const auto& p : d.predicates) out.push_back({Component::Kind::predicate, p.name});
  std::sort(out.begin(), out.end());
  return out;
}

inline Domain without(const Domain& d, const Component& c) {
  Domain out = d;
  if (c.kind == Component::Kind::action) {
    std::erase_if(out.actions, [&](const ActionSchema& a) { return a.name == c.name; });
  } else {
    std::erase_if(out.predicates, [&](const PredicateSchema& p) { return p.name == c.name; });
    auto drop = [&](std::vector<AtomTemplate>& ts) {
      std::erase_if(ts, [&](const AtomTemplate& t) { return t.predicate == c.name; });
    };
    for (auto& a : out.actions) {
      drop(a.pre);
      drop(a.add);
      drop(a.del);
    }
  }
  return out;
}

struct PruneResult {
  std::shared_ptr<const Domain> domain;
  std::vector<Component> removed;  // in acceptance order
  std::size_t evaluations = 0;
};

// Greedy first-improvement hill climbing: try removals in canonical order,
// accept the first that keeps the whole suite solvable, restart; stop when no
// single removal is acceptable.
inline PruneResult hill_climb_prune(const Domain& d, const std::vector<Problem>& suite, const SuiteBudget& b = {}) {
  PruneResult res;
  auto cur = std::make_shared<const Domain>(d);
  ++res.evaluations;
  if (!validate_domain(cur, suite, b).passes())
    throw std::invalid_argument("hill_climb_prune needs a domain that solves the suite");
  for (bool improved = true; improved;) {
    improved = false;
    for (const auto& c : components(*cur)) {
      auto cand = std::make_shared<const Domain>(without(*cur, c));
      ++res.evaluations;
      bool ok = false;
      try {
        check_domain(*cand);
        ok = validate_domain(cand, suite, b).passes();
      } catch (const PddlError&) {
      }
      if (ok) {
        cur = cand;
        res.removed.push_back(c);
        improved = true;
        break;
      }
    }
  }
  res.domain = cur;
  return res;
}

}  // namespace planforge
