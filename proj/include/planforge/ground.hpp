#pragma once

// Grounding of schemas over a problem's objects, dense atom indexing, and the
// STRIPS transition function.

#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>

#include "planforge/pddl.hpp"

namespace planforge {

using AtomId = std::uint32_t;
using ActionId = std::uint32_t;

class UniverseTooLarge : public std::runtime_error {
 public:
  UniverseTooLarge(std::string what, std::size_t limit)
      : std::runtime_error("universe too large: more than " + std::to_string(limit) + " ground " + what),
        limit_(limit) {}
  std::size_t limit() const { return limit_; }

 private:
  std::size_t limit_;
};

struct GroundLimits {
  std::size_t max_atoms = 5'000'000;
  std::size_t max_actions = 5'000'000;
};

// Fixed-width bitset over the atom universe.
class BitState {
 public:
  BitState() = default;
  explicit BitState(std::size_t bits) : words_((bits + 63) / 64, 0) {}

  bool test(AtomId i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(AtomId i) { words_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  void reset(AtomId i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

  bool contains_all(std::span<const AtomId> ids) const {
    for (AtomId i : ids)
      if (!test(i)) return false;
    return true;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(__builtin_popcountll(w));
    return n;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }
  bool operator==(const BitState&) const = default;

  std::size_t hash() const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto w : words_) {
      h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h *= 0xbf58476d1ce4e5b9ULL;
    }
    return static_cast<std::size_t>(h ^ (h >> 31));
  }

 private:
  std::vector<std::uint64_t> words_;
};

struct BitStateHash {
  std::size_t operator()(const BitState& s) const { return s.hash(); }
};

struct GroundAction {
  ActionId index = 0;
  std::string schema;
  std::vector<std::string> args;
  std::vector<AtomId> pre;  // sorted, unique
  std::vector<AtomId> add;  // sorted, unique
  std::vector<AtomId> del;  // sorted, unique, disjoint from add

  std::string str() const {
    std::string out = "(" + schema;
    for (const auto& a : args) out += " " + a;
    return out + ")";
  }
};

class PreconditionViolated : public std::runtime_error {
 public:
  PreconditionViolated(std::string action, std::vector<GroundAtom> missing)
      : std::runtime_error(message(action, missing)), action_(std::move(action)), missing_(std::move(missing)) {}

  const std::string& action() const { return action_; }
  const std::vector<GroundAtom>& missing() const { return missing_; }

 private:
  static std::string message(const std::string& action, const std::vector<GroundAtom>& missing) {
    std::string m = "precondition violated for " + action + ": missing";
    for (const auto& a : missing) m += " " + a.str();
    return m;
  }
  std::string action_;
  std::vector<GroundAtom> missing_;
};

// The ground atom set G and all typed-consistent ground actions of a problem.
// Immutable after construction; indices are stable for its lifetime.
class GroundUniverse {
 public:
  explicit GroundUniverse(const Problem& q, GroundLimits limits = {}) : problem_(q) {
    const Domain& d = *q.domain;
    const auto objects = q.all_objects();
    auto of_type = [&](const std::string& t) {
      std::vector<std::string> out;
      for (const auto& o : objects)
        if (d.is_subtype(o.type, t)) out.push_back(o.name);
      return out;
    };
    std::map<std::string, std::vector<std::string>> by_type;
    auto objs = [&](const std::string& t) -> const std::vector<std::string>& {
      auto it = by_type.find(t);
      if (it == by_type.end()) it = by_type.emplace(t, of_type(t)).first;
      return it->second;
    };
    auto product_size = [&](const std::vector<TypedName>& params) {
      long double n = 1;
      for (const auto& p : params) n *= static_cast<long double>(objs(p.type).size());
      return n;
    };

    long double n_atoms = 0;
    for (const auto& p : d.predicates) n_atoms += product_size(p.params);
    if (n_atoms > static_cast<long double>(limits.max_atoms)) throw UniverseTooLarge("atoms", limits.max_atoms);
    long double n_actions = 0;
    for (const auto& a : d.actions) n_actions += product_size(a.params);
    if (n_actions > static_cast<long double>(limits.max_actions))
      throw UniverseTooLarge("actions", limits.max_actions);

    atoms_.reserve(static_cast<std::size_t>(n_atoms));
    for (const auto& p : d.predicates) {
      for_each_binding(p.params, objs, [&](const std::vector<std::string>& binding) {
        GroundAtom a{p.name, binding};
        index_.emplace(key(a.predicate, a.args), static_cast<AtomId>(atoms_.size()));
        atoms_.push_back(std::move(a));
      });
    }

    actions_.reserve(static_cast<std::size_t>(n_actions));
    for (const auto& s : d.actions) {
      for_each_binding(s.params, objs, [&](const std::vector<std::string>& binding) {
        GroundAction g;
        g.index = static_cast<ActionId>(actions_.size());
        g.schema = s.name;
        g.args = binding;
        auto inst = [&](const std::vector<AtomTemplate>& ts, std::vector<AtomId>& out) {
          for (const auto& t : ts) {
            std::vector<std::string> args;
            args.reserve(t.args.size());
            for (const auto& term : t.args) {
              if (!term.empty() && term[0] == '?') {
                for (std::size_t k = 0; k < s.params.size(); ++k)
                  if (s.params[k].name == term) args.push_back(binding[k]);
              } else {
                args.push_back(term);
              }
            }
            out.push_back(index_.at(key(t.predicate, args)));
          }
          std::sort(out.begin(), out.end());
          out.erase(std::unique(out.begin(), out.end()), out.end());
        };
        inst(s.pre, g.pre);
        inst(s.add, g.add);
        inst(s.del, g.del);
        // Delete-before-add: an atom both deleted and added ends up true.
        std::erase_if(g.del, [&](AtomId x) { return std::binary_search(g.add.begin(), g.add.end(), x); });
        action_index_.emplace(key(g.schema, g.args), g.index);
        actions_.push_back(std::move(g));
      });
    }

    by_first_pre_.assign(atoms_.size(), {});
    for (const auto& a : actions_) {
      if (a.pre.empty())
        no_pre_.push_back(a.index);
      else
        by_first_pre_[a.pre.front()].push_back(a.index);
    }

    init_ = encode(q.init);
    goal_ = encode(q.goal);
    for (const auto& a : q.goal) goal_ids_.push_back(index_.at(key(a.predicate, a.args)));
    std::sort(goal_ids_.begin(), goal_ids_.end());
  }

  const Problem& problem() const { return problem_; }
  const std::vector<GroundAtom>& atoms() const { return atoms_; }
  const std::vector<GroundAction>& actions() const { return actions_; }
  std::size_t atom_count() const { return atoms_.size(); }

  std::optional<AtomId> atom_index(const GroundAtom& a) const {
    auto it = index_.find(key(a.predicate, a.args));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const GroundAction* find_action(std::string_view name, std::span<const std::string> args) const {
    auto it = action_index_.find(key(name, args));
    return it == action_index_.end() ? nullptr : &actions_[it->second];
  }

  BitState encode(const State& s) const {
    BitState b(atoms_.size());
    for (const auto& a : s) {
      auto id = atom_index(a);
      if (!id) throw std::out_of_range("atom " + a.str() + " is not in the ground universe");
      b.set(*id);
    }
    return b;
  }

  State decode(const BitState& b) const {
    State s;
    for (AtomId i = 0; i < atoms_.size(); ++i)
      if (b.test(i)) s.insert(atoms_[i]);
    return s;
  }

  State decode(std::span<const AtomId> ids) const {
    State s;
    for (AtomId i : ids) s.insert(atoms_[i]);
    return s;
  }

  const BitState& init() const { return init_; }
  const BitState& goal() const { return goal_; }
  const std::vector<AtomId>& goal_ids() const { return goal_ids_; }

  bool goal_reached(const BitState& s) const { return s.contains_all(goal_ids_); }

  bool applicable(const BitState& s, const GroundAction& a) const { return s.contains_all(a.pre); }

  // Ids of all actions applicable in `s`, ascending.
  std::vector<ActionId> applicable(const BitState& s) const {
    std::vector<ActionId> out = no_pre_;
    const auto& w = s.words();
    for (std::size_t k = 0; k < w.size(); ++k) {
      for (std::uint64_t bits = w[k]; bits != 0; bits &= bits - 1) {
        auto atom = static_cast<AtomId>(k * 64 + static_cast<std::size_t>(__builtin_ctzll(bits)));
        for (ActionId a : by_first_pre_[atom])
          if (s.contains_all(actions_[a].pre)) out.push_back(a);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Successor without precondition check.
  BitState successor(const BitState& s, const GroundAction& a) const {
    BitState n = s;
    for (AtomId x : a.del) n.reset(x);
    for (AtomId x : a.add) n.set(x);
    return n;
  }

  std::vector<GroundAtom> missing(const BitState& s, const GroundAction& a) const {
    std::vector<GroundAtom> out;
    for (AtomId x : a.pre)
      if (!s.test(x)) out.push_back(atoms_[x]);
    return out;
  }

  BitState apply(const BitState& s, const GroundAction& a) const {
    if (!s.contains_all(a.pre)) throw PreconditionViolated(a.str(), missing(s, a));
    return successor(s, a);
  }

 private:
  template <class Objs, class F>
  static void for_each_binding(const std::vector<TypedName>& params, Objs&& objs, F&& f) {
    std::vector<const std::vector<std::string>*> domains;
    for (const auto& p : params) {
      domains.push_back(&objs(p.type));
      if (domains.back()->empty()) return;
    }
    std::vector<std::size_t> idx(params.size(), 0);
    std::vector<std::string> binding(params.size());
    for (;;) {
      for (std::size_t i = 0; i < params.size(); ++i) binding[i] = (*domains[i])[idx[i]];
      f(binding);
      std::size_t k = params.size();
      while (k > 0) {
        --k;
        if (++idx[k] < domains[k]->size()) break;
        idx[k] = 0;
        if (k == 0) return;
      }
      if (params.empty()) return;
    }
  }

  static std::string key(std::string_view name, std::span<const std::string> args) {
    std::string k(name);
    for (const auto& a : args) {
      k += ' ';
      k += a;
    }
    return k;
  }

  Problem problem_;
  std::vector<GroundAtom> atoms_;
  std::vector<GroundAction> actions_;
  std::unordered_map<std::string, AtomId> index_;
  std::unordered_map<std::string, ActionId> action_index_;
  std::vector<std::vector<ActionId>> by_first_pre_;  // actions keyed by their lowest precondition atom
  std::vector<ActionId> no_pre_;
  BitState init_;
  BitState goal_;
  std::vector<AtomId> goal_ids_;
};

inline GroundUniverse ground(const Problem& q, GroundLimits limits = {}) { return GroundUniverse(q, limits); }

// Set-level API over State values.

inline std::vector<const GroundAction*> applicable(const State& x, const GroundUniverse& u) {
  BitState b = u.encode(x);
  std::vector<const GroundAction*> out;
  for (ActionId i : u.applicable(b)) out.push_back(&u.actions()[i]);
  return out;
}

inline State apply(const State& x, const GroundAction& a, const GroundUniverse& u) {
  return u.decode(u.apply(u.encode(x), a));
}

}  // namespace planforge
