#pragma once

// Symbolic transition traces and the chain-of-thought text built on them.
// Every atom or action a trajectory mentions is written inline as
// `(name arg ...)`, which is what makes the faithfulness check decidable.

#include <regex>

#include "planforge/domains.hpp"
#include "planforge/llm.hpp"
#include "planforge/planner.hpp"
#include "planforge/prompts.hpp"
#include "planforge/rng.hpp"
#include "planforge/validate.hpp"

namespace planforge {

class InvalidPlan : public std::runtime_error {
 public:
  InvalidPlan(const std::string& msg, std::optional<FirstFailure> f)
      : std::runtime_error(msg), failure_(std::move(f)) {}
  const std::optional<FirstFailure>& failure() const { return failure_; }

 private:
  std::optional<FirstFailure> failure_;
};

struct TraceStep {
  State pre;
  ActionId action = 0;
  ActionCall call;
  State post;
  StepRole role = StepRole::base;
};

struct TransitionTrace {
  State init;
  State goal;
  std::vector<TraceStep> steps;

  const State& final_state() const { return steps.empty() ? init : steps.back().post; }
};

// Requires the plan to execute fully and reach the goal.
inline TransitionTrace extract_trace(const GroundUniverse& u, const Plan& plan) {
  auto rep = validate_plan(u, plan);
  if (!rep.success) {
    std::string why = rep.first_failure ? "step " + std::to_string(rep.first_failure->step) + " " +
                                              rep.first_failure->action + ": " + rep.first_failure->reason
                                        : "goal not reached";
    throw InvalidPlan("plan is not valid: " + why, rep.first_failure);
  }
  TransitionTrace tr;
  tr.init = u.problem().init;
  tr.goal = u.problem().goal;
  BitState x = u.init();
  State cur = tr.init;
  for (std::size_t i = 0; i < plan.length(); ++i) {
    const GroundAction* a = u.find_action(plan.actions[i].name, plan.actions[i].args);
    BitState y = u.successor(x, *a);
    TraceStep st;
    st.pre = cur;
    st.action = a->index;
    st.call = plan.actions[i];
    st.post = u.decode(y);
    st.role = plan.role(i);
    cur = st.post;
    x = std::move(y);
    tr.steps.push_back(std::move(st));
  }
  return tr;
}

inline TransitionTrace extract_trace(const Problem& q, const Plan& plan) {
  GroundUniverse u(q);
  return extract_trace(u, plan);
}

enum class Aspect { plan_explanation, state_check, alternative_exploration, failure_backtracking };

inline const char* to_string(Aspect a) {
  switch (a) {
    case Aspect::plan_explanation: return "plan_explanation";
    case Aspect::state_check: return "state_check";
    case Aspect::alternative_exploration: return "alternative_exploration";
    case Aspect::failure_backtracking: return "failure_backtracking";
  }
  return "?";
}

struct CoTStep {
  std::size_t index = 0;
  ActionCall action;
  std::string explanation;
  std::set<Aspect> aspects;
  std::vector<GroundAtom> checked_preconditions;
  std::vector<ActionCall> alternatives_considered;
};

struct CoTTrajectory {
  std::vector<CoTStep> steps;
  std::string rendered;  // `<REASON>...</REASON>`
};

// ---------------------------------------------------------------------------
// Inline term notation
// ---------------------------------------------------------------------------

struct Term {
  std::string head;
  std::vector<std::string> args;

  std::string str() const {
    std::string out = "(" + head;
    for (const auto& a : args) out += " " + a;
    return out + ")";
  }
  bool operator==(const Term&) const = default;
};

// Innermost `( ... )` groups whose tokens all look like identifiers.
inline std::vector<Term> scan_terms(std::string_view text) {
  std::vector<Term> out;
  std::size_t i = 0;
  while ((i = text.find('(', i)) != std::string_view::npos) {
    std::size_t j = text.find_first_of("()", i + 1);
    if (j == std::string_view::npos) break;
    if (text[j] == '(') {
      i = j;
      continue;
    }
    std::istringstream ss{std::string(text.substr(i + 1, j - i - 1))};
    std::vector<std::string> toks;
    bool ok = true;
    for (std::string t; ss >> t;) {
      t = detail::lower(t);
      ok = ok && detail::is_identifier(t);
      toks.push_back(std::move(t));
    }
    if (ok && !toks.empty()) out.push_back({toks[0], {toks.begin() + 1, toks.end()}});
    i = j + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Template expansion
// ---------------------------------------------------------------------------

namespace cot {

using Bank = std::vector<std::string_view>;

inline const Bank kPlanDirect{
    "{a} directly achieves part of the goal: {g}.",
    "Applying {a} makes {g} true, which is part of the goal.",
    "The goal requires {g}, and {a} establishes it.",
    "{a} is chosen because it completes {g} from the goal.",
    "With {a} the goal condition {g} becomes satisfied.",
    "{a} moves us closer to the goal by producing {g}.",
};
inline const Bank kPlanEnable{
    "{a} yields {e}, which {n} needs on the way to {g}.",
    "{a} is a preparatory step: it provides {e} for the later action {n}, leading toward {g}.",
    "To reach {g} we first need {e}; {a} provides it so that {n} can follow.",
    "{a} sets up {e}, a precondition of {n} in the plan toward {g}.",
    "The plan continues with {n}, which depends on {e}; {a} produces that, advancing {g}.",
    "Choosing {a} now gives {e}, enabling {n} and ultimately {g}.",
};
inline const Bank kPlanOther{
    "{a} changes {d}; no later step depends on it directly.",
    "{a} is part of the plan but none of its effects {d} is consumed later.",
    "The plan applies {a}, affecting {d}, before continuing.",
    "{a} rearranges {d} without directly enabling a later step.",
    "Next comes {a}, which touches {d}.",
    "{a} adjusts {d} as the plan proceeds.",
};
inline const Bank kPlanDetour{
    "{a} is a detour: it changes {d} without advancing the goal.",
    "This step explores {a}, which alters {d} but is not needed for the goal.",
    "{a} is taken as an exploratory move; it affects {d} and is reverted afterwards.",
    "Here the plan tries {a}; the change to {d} does not serve the goal.",
    "{a} is a redundant move that touches {d}.",
    "As a side excursion, {a} modifies {d}.",
};
inline const Bank kPlanCorrective{
    "{a} corrects the earlier detour by changing {d}.",
    "{a} is a corrective step that restores {d}.",
    "The plan now applies {a} to undo the side excursion on {d}.",
    "{a} brings {d} back in line with the main plan.",
    "To recover the previous state, {a} adjusts {d}.",
    "{a} returns {d} to where the main plan needs it.",
};
inline const Bank kCheck{
    "Preconditions of {a}: {p}; all of them hold in the current state.",
    "Before applying {a}, verify {p}. Each is true now.",
    "{a} requires {p}, and the current state satisfies every one.",
    "State check for {a}: {p} are present.",
    "All preconditions of {a} hold: {p}.",
    "The current state contains {p}, so {a} is applicable.",
};
inline const Bank kCheckNone{
    "{a} has no preconditions, so it is applicable.",
    "{a} can always be applied; it has no preconditions.",
    "Nothing needs to hold for {a}; it is applicable.",
    "{a} comes with an empty precondition list.",
    "There is nothing to verify before {a}.",
    "{a} is unconditionally applicable.",
};
inline const Bank kEffect{
    "After {a}, {add} become true and {del} become false.",
    "{a} adds {add} and removes {del}.",
    "Resulting change: {add} now hold; {del} no longer hold.",
    "The new state gains {add} and loses {del}.",
    "Applying {a} makes {add} true while {del} turn false.",
    "State update: +{add}; -{del}.",
};
inline const Bank kAlternatives{
    "Other applicable actions here include {x}.",
    "Besides {a}, the state also allows {x}.",
    "{x} could also be applied now.",
    "Alternatives to {a} at this point: {x}.",
    "We could instead choose {x}.",
    "Other options in this state are {x}.",
};
inline const Bank kAlternativesNone{
    "No other action is applicable here, so {a} is the only choice.",
    "{a} is the only applicable action in this state; no alternative exists.",
    "There is no alternative: nothing else is applicable.",
    "Only {a} can be applied now.",
    "The state admits no other action than {a}.",
    "No alternative action exists at this step.",
};
inline const Bank kAltUndo{
    "it would simply undo the previous step.",
    "it reverses what the last action did, making no progress.",
};
inline const Bank kAltBreaks{
    "it would undo {g}, which the goal already has.",
    "it destroys goal progress already made on {g}.",
};
inline const Bank kAltNoGoal{
    "it leads to {s} but achieves no goal atom.",
    "it would produce {s}, which is not part of the goal.",
};
inline const Bank kAltGoal{
    "it would achieve {g} as well, but the chosen order reaches the whole goal with fewer steps.",
    "it also produces {g}; the plan secures this elsewhere.",
};
inline const Bank kInfeasible{
    "{x} is not possible here: the state lacks {m}.",
    "{x} cannot be applied; missing: {m}.",
    "We cannot use {x} now, since {m} must hold first.",
    "{x} is ruled out; it needs {m}.",
    "{x} would fail its precondition check on {m}.",
    "Trying {x} here would violate {m}.",
};
inline const Bank kBacktrack{
    "The detour {x} did not help; {a} reverts it, restoring {r}.",
    "Backtracking: {a} undoes the effect of {x} on {r}.",
    "Since {x} led away from the goal, {a} corrects {r}.",
    "{a} repairs the state changed by {x}: {r}.",
    "Recovering from {x}, {a} fixes {r}.",
    "To recover from {x}, {a} resets {r}.",
};
inline const Bank kFinal{
    "All goal atoms {g} now hold.",
    "The goal {g} is satisfied.",
    "The final state contains {g}, so the task is complete.",
    "Every goal condition holds: {g}.",
    "We have reached the goal: {g}.",
    "Done; the goal {g} holds.",
};
inline const Bank kFinalEmpty{
    "The goal is empty and trivially satisfied.",
    "There is nothing left to achieve.",
    "No goal atoms are required.",
    "The task is complete.",
    "The goal holds trivially.",
    "Nothing else is needed.",
};

inline std::string list(const std::vector<std::string>& items, std::string_view none = "nothing") {
  if (items.empty()) return std::string(none);
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += i + 1 == items.size() ? " and " : ", ";
    out += items[i];
  }
  return out;
}

inline std::string list(const State& s, std::string_view none = "nothing") {
  std::vector<std::string> v;
  for (const auto& a : s) v.push_back(a.str());
  return list(v, none);
}

inline std::string say(Rng& rng, const Bank& bank, const std::map<std::string, std::string, std::less<>>& vals) {
  return prompts::fill(bank[rng.below(bank.size())], vals);
}

inline State minus(const State& a, const State& b) {
  State out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

inline State meet(const State& a, const State& b) {
  State out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

inline State symdiff(const State& a, const State& b) {
  State out;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

inline State atoms_of(const GroundUniverse& u, const std::vector<AtomId>& ids) {
  State s;
  for (AtomId i : ids) s.insert(u.atoms()[i]);
  return s;
}

// Goal atoms that hold at the end and are reached through the chain of later
// steps consuming what step t adds.
inline std::pair<State, std::optional<std::size_t>> goal_chain(const GroundUniverse& u, const TransitionTrace& tr,
                                                               std::size_t t) {
  const State target = meet(tr.goal, tr.final_state());
  State goals;
  std::optional<std::size_t> first_consumer;
  std::vector<bool> seen(tr.steps.size(), false);
  std::vector<std::size_t> queue{t};
  seen[t] = true;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    std::size_t s = queue[qi];
    State fresh = minus(tr.steps[s].post, tr.steps[s].pre);
    if (s != t)
      for (const auto& g : meet(fresh, target)) goals.insert(g);
    for (std::size_t j = s + 1; j < tr.steps.size(); ++j) {
      if (seen[j]) continue;
      State pre_j = atoms_of(u, u.actions()[tr.steps[j].action].pre);
      if (!meet(pre_j, fresh).empty()) {
        seen[j] = true;
        queue.push_back(j);
        if (s == t && !first_consumer) first_consumer = j;
      }
    }
  }
  return {goals, first_consumer};
}

}  // namespace cot

struct CoTOptions {
  std::size_t max_alternatives = 2;
  double infeasible_rate = 0.5;  // chance of an Infeasible line per step
};

inline CoTTrajectory expand_cot_template(const GroundUniverse& u, const TransitionTrace& tr, std::uint64_t seed,
                                         const CoTOptions& opt = {}) {
  using namespace cot;
  Rng rng(seed);
  CoTTrajectory out;
  std::string body;
  for (std::size_t t = 0; t < tr.steps.size(); ++t) {
    const TraceStep& st = tr.steps[t];
    const GroundAction& act = u.actions()[st.action];
    const std::string a = st.call.str();
    const State fresh = minus(st.post, st.pre);
    const State gone = minus(st.pre, st.post);
    const State delta = symdiff(st.pre, st.post);
    CoTStep cs;
    cs.index = t;
    cs.action = st.call;
    std::string text = "Step " + std::to_string(t + 1) + ": " + a + "\n";

    // Plan.
    std::string plan;
    if (st.role == StepRole::detour) {
      plan = say(rng, kPlanDetour, {{"a", a}, {"d", list(delta)}});
    } else if (st.role == StepRole::corrective) {
      plan = say(rng, kPlanCorrective, {{"a", a}, {"d", list(delta)}});
    } else {
      State direct = meet(meet(fresh, tr.goal), tr.final_state());
      auto [goals, consumer] = goal_chain(u, tr, t);
      if (!direct.empty()) {
        plan = say(rng, kPlanDirect, {{"a", a}, {"g", list(direct)}});
      } else if (consumer) {
        State need = meet(atoms_of(u, u.actions()[tr.steps[*consumer].action].pre), fresh);
        plan = say(rng, kPlanEnable,
                   {{"a", a},
                    {"e", list(need)},
                    {"n", tr.steps[*consumer].call.str()},
                    {"g", goals.empty() ? std::string("the remaining goal") : list(goals)}});
      } else {
        plan = say(rng, kPlanOther, {{"a", a}, {"d", list(delta)}});
      }
    }
    text += "Plan: " + plan + "\n";
    cs.aspects.insert(Aspect::plan_explanation);

    // Check.
    State pre = atoms_of(u, act.pre);
    cs.checked_preconditions.assign(pre.begin(), pre.end());
    text += "Check: " +
            (pre.empty() ? say(rng, kCheckNone, {{"a", a}}) : say(rng, kCheck, {{"a", a}, {"p", list(pre)}})) + "\n";
    cs.aspects.insert(Aspect::state_check);
    text += "Effect: " +
            say(rng, kEffect, {{"a", a}, {"add", list(fresh, "no new facts")}, {"del", list(gone, "no facts")}}) +
            "\n";

    // Alternatives.
    const BitState x = u.encode(st.pre);
    std::vector<ActionId> others;
    for (ActionId b : u.applicable(x))
      if (b != st.action) others.push_back(b);
    rng.shuffle(others);
    if (others.size() > opt.max_alternatives) others.resize(opt.max_alternatives);
    std::sort(others.begin(), others.end());
    if (others.empty()) {
      text += "Alternatives: " + say(rng, kAlternativesNone, {{"a", a}}) + "\n";
    } else {
      std::vector<std::string> names;
      for (ActionId b : others) names.push_back(u.actions()[b].str());
      text += "Alternatives: " + say(rng, kAlternatives, {{"a", a}, {"x", list(names)}}) + "\n";
      const BitState* prev_pre = nullptr;
      BitState prev_bits;
      if (t > 0) {
        prev_bits = u.encode(tr.steps[t - 1].pre);
        prev_pre = &prev_bits;
      }
      for (ActionId b : others) {
        const GroundAction& alt = u.actions()[b];
        BitState y = u.successor(x, alt);
        State ys = u.decode(y);
        State broken = meet(meet(tr.goal, st.pre), minus(st.pre, ys));
        State gains = meet(minus(ys, st.pre), tr.goal);
        std::string why;
        if (prev_pre && y == *prev_pre)
          why = say(rng, kAltUndo, {});
        else if (!broken.empty())
          why = say(rng, kAltBreaks, {{"g", broken.begin()->str()}});
        else if (!gains.empty())
          why = say(rng, kAltGoal, {{"g", list(gains)}});
        else
          why = say(rng, kAltNoGoal, {{"s", list(minus(ys, st.pre), "no new facts")}});
        text += "- " + alt.str() + ": " + why + "\n";
        cs.alternatives_considered.push_back(ActionCall::of(alt));
      }
    }
    cs.aspects.insert(Aspect::alternative_exploration);

    // Infeasible: an inapplicable action that shares an object with this one.
    if (rng.chance(opt.infeasible_rate)) {
      std::vector<ActionId> blocked;
      std::set<std::string> objs(act.args.begin(), act.args.end());
      for (const auto& g : u.actions()) {
        if (u.applicable(x, g)) continue;
        bool shares = objs.empty();
        for (const auto& arg : g.args) shares = shares || objs.count(arg);
        if (shares) blocked.push_back(g.index);
      }
      if (!blocked.empty()) {
        const GroundAction& g = u.actions()[blocked[rng.below(blocked.size())]];
        text += "Infeasible: " +
                say(rng, kInfeasible, {{"x", g.str()}, {"m", list(atoms_of(u, [&] {
                                                                    std::vector<AtomId> miss;
                                                                    for (AtomId p : g.pre)
                                                                      if (!x.test(p)) miss.push_back(p);
                                                                    return miss;
                                                                  }()))}}) +
                "\n";
      }
    }

    // Backtrack at corrective steps: name the detour and what is reverted.
    if (st.role == StepRole::corrective) {
      std::size_t d = t;
      while (d > 0 && tr.steps[d].role == StepRole::corrective) --d;
      text += "Backtrack: " +
              say(rng, kBacktrack, {{"a", a}, {"x", tr.steps[d].call.str()}, {"r", list(delta)}}) + "\n";
      cs.aspects.insert(Aspect::failure_backtracking);
    }

    cs.explanation = text;
    body += text;
    out.steps.push_back(std::move(cs));
  }
  State reached = meet(tr.goal, tr.final_state());
  body += "Final: " + (tr.goal.empty() ? say(rng, cot::kFinalEmpty, {}) : say(rng, cot::kFinal, {{"g", list(reached)}})) +
          "\n";
  out.rendered = "<REASON>\n" + body + "</REASON>";
  return out;
}

// ---------------------------------------------------------------------------
// Parsing rendered trajectories
// ---------------------------------------------------------------------------

struct ParsedStep {
  std::size_t number = 0;
  std::string header;  // text after "Step N:"
  std::map<std::string, std::string> sections;
  std::vector<std::string> alternatives;  // "- ..." lines
  std::set<Aspect> aspects;
};

struct ParsedCoT {
  std::vector<ParsedStep> steps;
  std::string final_text;
};

// The `<REASON>` body of the last complete tagged span, if any.
inline std::optional<std::string> extract_reason(std::string_view text) {
  auto open = text.rfind("<REASON>");
  if (open == std::string_view::npos) return std::nullopt;
  auto close = text.find("</REASON>", open);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(text.substr(open + 8, close - open - 8));
}

inline ParsedCoT parse_cot(std::string_view text) {
  std::string body = extract_reason(text).value_or(std::string(text));
  static const std::regex step_re(R"(^\s*Step\s+(\d+)\s*:\s*(.*)$)", std::regex::icase);
  static const std::regex label_re(R"(^\s*(Plan|Check|Effect|Alternatives|Infeasible|Backtrack|Final)\s*:\s*(.*)$)",
                                   std::regex::icase);
  ParsedCoT out;
  std::istringstream in(body);
  std::string line, current;
  bool in_final = false;
  auto append = [](std::string& dst, const std::string& s) { dst += (dst.empty() ? "" : "\n") + s; };
  for (std::smatch m; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::regex_match(line, m, step_re)) {
      ParsedStep s;
      s.number = std::stoul(m[1]);
      s.header = m[2];
      out.steps.push_back(std::move(s));
      current.clear();
      in_final = false;
    } else if (std::regex_match(line, m, label_re)) {
      std::string label = m[1];
      label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
      for (std::size_t i = 1; i < label.size(); ++i)
        label[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(label[i])));
      if (label == "Final") {
        in_final = true;
        append(out.final_text, m[2]);
        continue;
      }
      in_final = false;
      current = label;
      if (!out.steps.empty()) append(out.steps.back().sections[label], m[2]);
    } else if (in_final) {
      append(out.final_text, line);
    } else if (!out.steps.empty()) {
      auto first = line.find_first_not_of(" \t");
      if (first != std::string::npos && line[first] == '-' && (current == "Alternatives" || current == "Infeasible"))
        out.steps.back().alternatives.push_back(line.substr(first + 1));
      else if (!current.empty() && first != std::string::npos)
        append(out.steps.back().sections[current], line);
    }
  }
  for (auto& s : out.steps) {
    if (s.sections.count("Plan")) s.aspects.insert(Aspect::plan_explanation);
    if (s.sections.count("Check")) s.aspects.insert(Aspect::state_check);
    if (s.sections.count("Alternatives") || s.sections.count("Infeasible"))
      s.aspects.insert(Aspect::alternative_exploration);
    if (s.sections.count("Backtrack")) s.aspects.insert(Aspect::failure_backtracking);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Faithfulness
// ---------------------------------------------------------------------------

struct Violation {
  std::optional<std::size_t> step;  // 0-based
  std::string kind;
  std::string detail;

  std::string str() const {
    return (step ? "step " + std::to_string(*step + 1) + ": " : std::string()) + kind + ": " + detail;
  }
};

struct FaithfulnessReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::size_t count(std::string_view kind) const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; }));
  }
  std::string summary() const {
    std::string out;
    for (const auto& v : violations) out += v.str() + "\n";
    return out;
  }
};

namespace cot {

struct Mentions {
  State atoms;
  std::vector<const GroundAction*> actions;
};

inline Mentions mentions(const GroundUniverse& u, std::string_view text, std::optional<std::size_t> step,
                         FaithfulnessReport& rep) {
  const Domain& d = *u.problem().domain;
  Mentions m;
  for (const auto& t : scan_terms(text)) {
    const ActionSchema* as = d.find_action(t.head);
    const PredicateSchema* ps = d.find_predicate(t.head);
    if (as && as->params.size() == t.args.size()) {
      const GroundAction* g = u.find_action(t.head, t.args);
      if (!g)
        rep.violations.push_back({step, "unknown-action", t.str()});
      else
        m.actions.push_back(g);
    } else if (ps && ps->arity() == t.args.size()) {
      GroundAtom a{t.head, t.args};
      if (!u.atom_index(a))
        rep.violations.push_back({step, "unknown-atom", t.str()});
      else
        m.atoms.insert(std::move(a));
    } else if (as || ps) {
      rep.violations.push_back({step, "bad-arity", t.str()});
    }
  }
  return m;
}

inline void require_subset(const State& claimed, const State& allowed, std::size_t step, const char* kind,
                           FaithfulnessReport& rep) {
  for (const auto& a : claimed)
    if (!allowed.count(a)) rep.violations.push_back({step, kind, a.str()});
}

inline State unite(const State& a, const State& b) {
  State out = a;
  out.insert(b.begin(), b.end());
  return out;
}

}  // namespace cot

inline FaithfulnessReport check_cot_faithfulness(std::string_view text, const TransitionTrace& tr,
                                                 const GroundUniverse& u) {
  using namespace cot;
  FaithfulnessReport rep;
  ParsedCoT p = parse_cot(text);
  if (p.steps.size() != tr.steps.size())
    rep.violations.push_back({std::nullopt, "step-count",
                              std::to_string(p.steps.size()) + " steps for a plan of " +
                                  std::to_string(tr.steps.size())});
  std::set<std::string> plan_actions;
  for (const auto& s : tr.steps) plan_actions.insert(s.call.str());

  const std::size_t n = std::min(p.steps.size(), tr.steps.size());
  for (std::size_t t = 0; t < n; ++t) {
    const ParsedStep& ps = p.steps[t];
    const TraceStep& st = tr.steps[t];
    const GroundAction& act = u.actions()[st.action];
    if (ps.number != t + 1) rep.violations.push_back({t, "step-number", "numbered " + std::to_string(ps.number)});
    auto head = mentions(u, ps.header, t, rep);
    if (head.actions.size() != 1 || head.actions[0]->index != st.action)
      rep.violations.push_back({t, "action-mismatch", "expected " + st.call.str() + ", got '" + ps.header + "'"});
    for (const char* need : {"Plan", "Check"})
      if (!ps.sections.count(need)) rep.violations.push_back({t, "missing-section", need});

    const State delta = symdiff(st.pre, st.post);
    const State pre_atoms = atoms_of(u, act.pre);
    const State changed = unite(unite(delta, atoms_of(u, act.add)), atoms_of(u, act.del));
    const BitState x = u.encode(st.pre);
    auto section = [&](const char* name) {
      auto it = ps.sections.find(name);
      return it == ps.sections.end() ? std::string_view{} : std::string_view{it->second};
    };
    auto plan_only = [&](const Mentions& m, const char* kind) {
      for (const auto* g : m.actions)
        if (!plan_actions.count(g->str())) rep.violations.push_back({t, kind, g->str()});
    };

    auto mp = mentions(u, section("Plan"), t, rep);
    require_subset(mp.atoms, unite(unite(st.pre, st.post), tr.goal), t, "unrelated-plan-atom", rep);
    plan_only(mp, "unrelated-plan-action");

    auto mc = mentions(u, section("Check"), t, rep);
    require_subset(mc.atoms, st.pre, t, "false-precondition", rep);
    if (ps.sections.count("Check"))
      for (const auto& a : pre_atoms)
        if (!mc.atoms.count(a)) rep.violations.push_back({t, "unchecked-precondition", a.str()});

    auto me = mentions(u, section("Effect"), t, rep);
    require_subset(me.atoms, changed, t, "false-effect", rep);

    auto applicable_alt = [&](const GroundAction* g) {
      if (g->index == st.action)
        rep.violations.push_back({t, "alternative-is-chosen", g->str()});
      else if (!u.applicable(x, *g))
        rep.violations.push_back({t, "inapplicable-alternative", g->str()});
    };
    auto ma = mentions(u, section("Alternatives"), t, rep);
    for (const auto* g : ma.actions)
      if (g->index != st.action) applicable_alt(g);
    require_subset(ma.atoms, unite(st.pre, tr.goal), t, "false-alternative-outcome", rep);
    for (const auto& line : ps.alternatives) {
      auto mi = mentions(u, line, t, rep);
      if (mi.actions.empty()) {
        rep.violations.push_back({t, "alternative-without-action", line});
        continue;
      }
      const GroundAction* g = mi.actions.front();
      applicable_alt(g);
      State allowed = unite(st.pre, tr.goal);
      if (u.applicable(x, *g)) allowed = unite(allowed, u.decode(u.successor(x, *g)));
      require_subset(mi.atoms, allowed, t, "false-alternative-outcome", rep);
    }

    std::istringstream inf{std::string(section("Infeasible"))};
    for (std::string line; std::getline(inf, line);) {
      auto mi = mentions(u, line, t, rep);
      if (mi.actions.empty()) continue;
      const GroundAction* g = mi.actions.front();
      if (u.applicable(x, *g)) {
        rep.violations.push_back({t, "feasible-infeasible", g->str()});
        continue;
      }
      require_subset(mi.atoms, minus(atoms_of(u, g->pre), st.pre), t, "false-missing", rep);
    }

    auto mb = mentions(u, section("Backtrack"), t, rep);
    require_subset(mb.atoms, delta, t, "false-backtrack", rep);
    plan_only(mb, "unrelated-backtrack-action");
  }
  if (!p.final_text.empty()) {
    auto mf = mentions(u, p.final_text, std::nullopt, rep);
    for (const auto& a : mf.atoms)
      if (!tr.final_state().count(a)) rep.violations.push_back({std::nullopt, "false-final", a.str()});
  }
  return rep;
}

// Also checks the structured fields against the trace.
inline FaithfulnessReport check_cot_faithfulness(const CoTTrajectory& c, const TransitionTrace& tr,
                                                 const GroundUniverse& u) {
  FaithfulnessReport rep = check_cot_faithfulness(c.rendered, tr, u);
  if (c.steps.size() != tr.steps.size())
    rep.violations.push_back({std::nullopt, "step-count", "structured steps differ from the plan length"});
  for (std::size_t t = 0; t < std::min(c.steps.size(), tr.steps.size()); ++t) {
    const CoTStep& s = c.steps[t];
    const GroundAction& act = u.actions()[tr.steps[t].action];
    if (!(s.action == tr.steps[t].call))
      rep.violations.push_back({t, "action-mismatch", s.action.str() + " vs " + tr.steps[t].call.str()});
    State pre = cot::atoms_of(u, act.pre);
    if (State(s.checked_preconditions.begin(), s.checked_preconditions.end()) != pre)
      rep.violations.push_back({t, "checked-preconditions", "differ from the action's preconditions"});
    BitState x = u.encode(tr.steps[t].pre);
    for (const auto& alt : s.alternatives_considered) {
      const GroundAction* g = u.find_action(alt.name, alt.args);
      if (!g || !u.applicable(x, *g) || g->index == act.index)
        rep.violations.push_back({t, "inapplicable-alternative", alt.str()});
    }
    if (!s.aspects.count(Aspect::plan_explanation) || !s.aspects.count(Aspect::state_check))
      rep.violations.push_back({t, "missing-aspect", "plan_explanation and state_check are required"});
  }
  return rep;
}

// Structured view of free text that already passed the checker.
inline CoTTrajectory trajectory_from_text(const std::string& reason_body, const TransitionTrace& tr,
                                          const GroundUniverse& u) {
  CoTTrajectory c;
  c.rendered = "<REASON>" + reason_body + "</REASON>";
  ParsedCoT p = parse_cot(c.rendered);
  FaithfulnessReport scratch;
  for (std::size_t t = 0; t < p.steps.size() && t < tr.steps.size(); ++t) {
    CoTStep s;
    s.index = t;
    s.action = tr.steps[t].call;
    s.aspects = p.steps[t].aspects;
    State pre = cot::atoms_of(u, u.actions()[tr.steps[t].action].pre);
    s.checked_preconditions.assign(pre.begin(), pre.end());
    for (const auto& line : p.steps[t].alternatives) {
      auto m = cot::mentions(u, line, t, scratch);
      if (!m.actions.empty()) s.alternatives_considered.push_back(ActionCall::of(*m.actions.front()));
    }
    std::string text = "Step " + std::to_string(t + 1) + ": " + p.steps[t].header + "\n";
    for (const auto& [k, v] : p.steps[t].sections) text += k + ": " + v + "\n";
    s.explanation = text;
    c.steps.push_back(std::move(s));
  }
  return c;
}

// ---------------------------------------------------------------------------
// LLM expansion
// ---------------------------------------------------------------------------

// Worked trajectory appended to the system prompt after the EXAMPLE header.
inline const std::string& cot_example() {
  static const std::string text = [] {
    auto d = std::make_shared<const Domain>(parse_domain(domains::kBlocksWorld));
    Problem q = parse_problem(
        "(define (problem example) (:domain blocksworld) (:objects a b c)"
        " (:init (ontable a) (ontable b) (on c a) (clear b) (clear c) (handempty))"
        " (:goal (and (on a b))))",
        d);
    GroundUniverse u(q);
    Plan p = parse_plan("(unstack c a)\n(put-down c)\n(pick-up a)\n(stack a b)\n");
    auto tr = extract_trace(u, p);
    return "Initial State: " + to_string(q.init) + "\nGoal State: " + to_string(q.goal) +
           "\nCorrect plan of actions: " + "(unstack c a) (put-down c) (pick-up a) (stack a b)\n" +
           expand_cot_template(u, tr, 7).rendered + "\n";
  }();
  return text;
}

inline std::pair<std::string, std::string> cot_prompts(const GroundUniverse& u, const TransitionTrace& tr) {
  std::string plan;
  for (const auto& s : tr.steps) plan += (plan.empty() ? "" : " ") + s.call.str();
  std::string system = std::string(prompts::kCoTSystem) + std::string(prompts::kCoTExampleHeader) + cot_example();
  std::string user = prompts::fill(prompts::kCoTUser, {{"Your Problem Setting", render_domain(*u.problem().domain)},
                                                       {"Your Initial State", to_string(tr.init)},
                                                       {"Your Goal State", to_string(tr.goal)},
                                                       {"Your Symbolic Plan", plan.empty() ? "(empty plan)" : plan}});
  return {system, user};
}

struct CoTOutcome {
  CoTTrajectory trajectory;
  std::string source;  // "llm" or "template"
  std::size_t attempts = 0;
  std::vector<std::string> rejections;
};

// Accepts the model's trajectory only when it passes the faithfulness check;
// one retry, then the template expansion. LLMUnavailable propagates.
inline CoTOutcome expand_cot_llm(const GroundUniverse& u, const TransitionTrace& tr, LLMClient& llm,
                                 const LLMConfig& cfg, std::uint64_t seed, const CoTOptions& opt = {}) {
  auto [system, user] = cot_prompts(u, tr);
  LLMConfig c = cfg;
  c.max_output_tokens = kCoTMaxOutputTokens;
  CoTOutcome out;
  for (int attempt = 0; attempt < 2; ++attempt) {
    ++out.attempts;
    std::string reply;
    try {
      reply = llm.complete(c, system, user);
    } catch (const LLMUnavailable&) {
      throw;
    } catch (const LLMError& e) {
      out.rejections.push_back(std::string("llm error: ") + e.what());
      continue;
    }
    auto body = extract_reason(reply);
    if (!body) {
      out.rejections.push_back("no <REASON> span");
      continue;
    }
    auto traj = trajectory_from_text(*body, tr, u);
    auto rep = check_cot_faithfulness(traj, tr, u);
    if (rep.ok()) {
      out.trajectory = std::move(traj);
      out.source = "llm";
      return out;
    }
    out.rejections.push_back(rep.summary());
  }
  out.trajectory = expand_cot_template(u, tr, seed, opt);
  out.source = "template";
  return out;
}

}  // namespace planforge
