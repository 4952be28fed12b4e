#pragma once

// STRIPS + :typing subset of PDDL: value types, parser and canonical renderer.

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace planforge {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct SourceLocation {
  int line = 0;
  int col = 0;
};

class PddlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public PddlError {
 public:
  SyntaxError(SourceLocation loc, std::string expected, std::string found = {})
      : PddlError(format(loc, expected, found)),
        loc_(loc),
        expected_(std::move(expected)) {}

  SourceLocation location() const { return loc_; }
  const std::string& expected() const { return expected_; }

 private:
  static std::string format(SourceLocation loc, const std::string& expected,
                            const std::string& found) {
    std::ostringstream os;
    os << "syntax error at " << loc.line << ":" << loc.col << ": expected "
       << expected;
    if (!found.empty()) os << ", found '" << found << "'";
    return os.str();
  }

  SourceLocation loc_;
  std::string expected_;
};

class UnsupportedFeature : public PddlError {
 public:
  UnsupportedFeature(std::string feature, SourceLocation loc)
      : PddlError("unsupported PDDL feature '" + feature + "' at " +
                  std::to_string(loc.line) + ":" + std::to_string(loc.col)),
        feature_(std::move(feature)),
        loc_(loc) {}

  const std::string& feature() const { return feature_; }
  SourceLocation location() const { return loc_; }

 private:
  std::string feature_;
  SourceLocation loc_;
};

// Well-formed syntax whose names or arities do not resolve. `kind` is a stable
// category string ("UnknownPredicate", "TypeMismatch", ...) and `name` the
// offending identifier.
class SemanticError : public PddlError {
 public:
  SemanticError(std::string kind, std::string name, const std::string& detail)
      : PddlError(kind + ": " + detail), kind_(std::move(kind)), name_(std::move(name)) {}

  const std::string& kind() const { return kind_; }
  const std::string& name() const { return name_; }

 private:
  std::string kind_;
  std::string name_;
};

class UnknownPredicate : public SemanticError {
 public:
  explicit UnknownPredicate(const std::string& name)
      : SemanticError("UnknownPredicate", name, "undeclared predicate '" + name + "'") {}
};

class UnknownObject : public SemanticError {
 public:
  explicit UnknownObject(const std::string& name)
      : SemanticError("UnknownObject", name, "undeclared object '" + name + "'") {}
};

class ArityMismatch : public SemanticError {
 public:
  ArityMismatch(const std::string& predicate, std::size_t expected, std::size_t found)
      : SemanticError("ArityMismatch", predicate,
                      "'" + predicate + "' takes " + std::to_string(expected) +
                          " argument(s), got " + std::to_string(found)) {}
};

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------

inline constexpr std::string_view kRootType = "object";

struct TypedName {
  std::string name;
  std::string type{kRootType};

  auto operator<=>(const TypedName&) const = default;
};

struct PredicateSchema {
  std::string name;
  std::vector<TypedName> params;

  std::size_t arity() const { return params.size(); }
  auto operator<=>(const PredicateSchema&) const = default;
};

// Predicate applied to variables (`?x`) or domain constants.
struct AtomTemplate {
  std::string predicate;
  std::vector<std::string> args;

  auto operator<=>(const AtomTemplate&) const = default;
};

struct ActionSchema {
  std::string name;
  std::vector<TypedName> params;
  std::vector<AtomTemplate> pre;  // sorted, unique
  std::vector<AtomTemplate> add;  // sorted, unique
  std::vector<AtomTemplate> del;  // sorted, unique

  auto operator<=>(const ActionSchema&) const = default;
};

struct GroundAtom {
  std::string predicate;
  std::vector<std::string> args;

  auto operator<=>(const GroundAtom&) const = default;

  std::string str() const {
    std::string out = "(" + predicate;
    for (const auto& a : args) out += " " + a;
    return out + ")";
  }
};

// Set semantics: equality is set equality regardless of insertion order.
using State = std::set<GroundAtom>;

inline std::string to_string(const State& s) {
  std::string out;
  for (const auto& a : s) {
    if (!out.empty()) out += ' ';
    out += a.str();
  }
  return out;
}

struct Domain {
  std::string name;
  std::vector<std::string> requirements;  // sorted
  std::vector<TypedName> types;           // (type, parent), sorted by type name
  std::vector<TypedName> constants;       // sorted by name
  std::vector<PredicateSchema> predicates;  // sorted by name
  std::vector<ActionSchema> actions;        // sorted by name

  bool operator==(const Domain&) const = default;

  bool typed() const {
    return !types.empty() ||
           std::find(requirements.begin(), requirements.end(), ":typing") !=
               requirements.end();
  }

  const PredicateSchema* find_predicate(std::string_view n) const {
    auto it = std::lower_bound(predicates.begin(), predicates.end(), n,
                               [](const PredicateSchema& p, std::string_view v) { return p.name < v; });
    return it != predicates.end() && it->name == n ? &*it : nullptr;
  }

  const ActionSchema* find_action(std::string_view n) const {
    auto it = std::lower_bound(actions.begin(), actions.end(), n,
                               [](const ActionSchema& a, std::string_view v) { return a.name < v; });
    return it != actions.end() && it->name == n ? &*it : nullptr;
  }

  bool has_type(std::string_view t) const {
    if (t == kRootType) return true;
    return std::any_of(types.begin(), types.end(), [&](const TypedName& d) { return d.name == t; });
  }

  std::string parent_of(std::string_view t) const {
    for (const auto& d : types)
      if (d.name == t) return d.type;
    return std::string(kRootType);
  }

  // Reflexive, transitive subtype test.
  bool is_subtype(std::string_view t, std::string_view ancestor) const {
    if (ancestor == kRootType || t == ancestor) return true;
    std::string cur(t);
    for (std::size_t guard = 0; guard <= types.size(); ++guard) {
      if (cur == kRootType) return false;
      cur = parent_of(cur);
      if (cur == ancestor) return true;
    }
    return false;
  }
};

struct Problem {
  std::string name;
  std::shared_ptr<const Domain> domain;
  std::vector<TypedName> objects;  // sorted by name; excludes domain constants
  State init;
  State goal;

  bool operator==(const Problem& o) const {
    return name == o.name && objects == o.objects && init == o.init && goal == o.goal &&
           ((domain == o.domain) || (domain && o.domain && *domain == *o.domain));
  }

  // Problem objects merged with domain constants, sorted by name.
  std::vector<TypedName> all_objects() const {
    std::vector<TypedName> out = objects;
    if (domain) out.insert(out.end(), domain->constants.begin(), domain->constants.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  std::optional<std::string> type_of(std::string_view object) const {
    for (const auto& o : objects)
      if (o.name == object) return o.type;
    if (domain)
      for (const auto& c : domain->constants)
        if (c.name == object) return c.type;
    return std::nullopt;
  }
};

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

// Throws if `atom` is not a member of the problem's ground-atom universe.
inline void check_atom(const Problem& q, const GroundAtom& atom) {
  const PredicateSchema* p = q.domain->find_predicate(atom.predicate);
  if (!p) throw UnknownPredicate(atom.predicate);
  if (p->arity() != atom.args.size()) throw ArityMismatch(atom.predicate, p->arity(), atom.args.size());
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    auto t = q.type_of(atom.args[i]);
    if (!t) throw UnknownObject(atom.args[i]);
    if (!q.domain->is_subtype(*t, p->params[i].type))
      throw SemanticError("TypeMismatch", atom.args[i],
                          "object '" + atom.args[i] + "' of type '" + *t + "' used as '" +
                              p->params[i].type + "' in " + atom.str());
  }
}

// Builds an atom after checking it against the problem's declarations.
inline GroundAtom make_atom(const Problem& q, std::string predicate, std::vector<std::string> args) {
  GroundAtom a{std::move(predicate), std::move(args)};
  check_atom(q, a);
  return a;
}

// Enforces the schema-level invariants of a domain; throws SemanticError.
inline void check_domain(const Domain& d) {
  auto dup = [](const auto& v, const char* what) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i].name == v[i - 1].name)
        throw SemanticError("DuplicateName", v[i].name,
                            std::string("duplicate ") + what + " '" + v[i].name + "'");
  };
  dup(d.predicates, "predicate");
  dup(d.actions, "action");
  dup(d.types, "type");
  dup(d.constants, "constant");

  auto check_type = [&](const std::string& t) {
    if (!d.has_type(t)) throw SemanticError("UnknownType", t, "undeclared type '" + t + "'");
  };
  for (const auto& t : d.types) check_type(t.type);
  for (const auto& t : d.types)
    if (t.name != kRootType && d.is_subtype(t.type, t.name))
      throw SemanticError("CyclicType", t.name, "type hierarchy cycle through '" + t.name + "'");
  for (const auto& c : d.constants) check_type(c.type);
  for (const auto& p : d.predicates)
    for (const auto& a : p.params) check_type(a.type);

  for (const auto& act : d.actions) {
    for (const auto& a : act.params) check_type(a.type);
    for (std::size_t i = 0; i < act.params.size(); ++i)
      for (std::size_t j = i + 1; j < act.params.size(); ++j)
        if (act.params[i].name == act.params[j].name)
          throw SemanticError("DuplicateName", act.params[i].name,
                              "parameter '" + act.params[i].name + "' repeated in action '" +
                                  act.name + "'");
    auto term_type = [&](const std::string& term) -> std::string {
      if (!term.empty() && term[0] == '?') {
        for (const auto& p : act.params)
          if (p.name == term) return p.type;
        throw SemanticError("UnknownVariable", term,
                            "variable '" + term + "' not a parameter of action '" + act.name + "'");
      }
      for (const auto& c : d.constants)
        if (c.name == term) return c.type;
      throw UnknownObject(term);
    };
    auto check_templates = [&](const std::vector<AtomTemplate>& ts) {
      for (const auto& t : ts) {
        const PredicateSchema* p = d.find_predicate(t.predicate);
        if (!p) throw UnknownPredicate(t.predicate);
        if (p->arity() != t.args.size()) throw ArityMismatch(t.predicate, p->arity(), t.args.size());
        for (std::size_t i = 0; i < t.args.size(); ++i) {
          std::string tt = term_type(t.args[i]);
          if (!d.is_subtype(tt, p->params[i].type))
            throw SemanticError("TypeMismatch", t.args[i],
                                "term '" + t.args[i] + "' of type '" + tt + "' used as '" +
                                    p->params[i].type + "' of '" + t.predicate + "' in action '" +
                                    act.name + "'");
        }
      }
    };
    check_templates(act.pre);
    check_templates(act.add);
    check_templates(act.del);
    for (const auto& a : act.add)
      if (std::binary_search(act.del.begin(), act.del.end(), a))
        throw SemanticError("InvalidSchema", act.name,
                            "action '" + act.name + "' both adds and deletes '" + a.predicate + "'");
  }
}

inline void check_problem(const Problem& q) {
  for (std::size_t i = 1; i < q.objects.size(); ++i)
    if (q.objects[i].name == q.objects[i - 1].name)
      throw SemanticError("DuplicateName", q.objects[i].name,
                          "duplicate object '" + q.objects[i].name + "'");
  for (const auto& o : q.objects)
    if (!q.domain->has_type(o.type))
      throw SemanticError("UnknownType", o.type, "undeclared type '" + o.type + "'");
  for (const auto& a : q.init) check_atom(q, a);
  for (const auto& a : q.goal) check_atom(q, a);
}

// Re-targets a problem at another domain (used when a domain is repaired or
// pruned). Init atoms over predicates the new domain lacks are dropped; goal
// atoms are kept and re-checked, so a pruned goal predicate surfaces as
// UnknownPredicate.
inline Problem rebind(const Problem& q, std::shared_ptr<const Domain> d) {
  Problem out = q;
  out.domain = std::move(d);
  for (auto it = out.init.begin(); it != out.init.end();) {
    if (!out.domain->find_predicate(it->predicate))
      it = out.init.erase(it);
    else
      ++it;
  }
  check_problem(out);
  return out;
}

// ---------------------------------------------------------------------------
// S-expression reader
// ---------------------------------------------------------------------------

namespace detail {

struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  SourceLocation loc;

  bool is_atom(std::string_view s) const { return !is_list && atom == s; }
  std::string describe() const { return is_list ? std::string("(") : atom; }
};

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  SExpr read_document() {
    skip_ws();
    if (pos_ >= text_.size()) throw SyntaxError(here(), "'('", "end of input");
    SExpr e = read();
    skip_ws();
    if (pos_ < text_.size()) throw SyntaxError(here(), "end of input", std::string(1, text_[pos_]));
    return e;
  }

 private:
  SourceLocation here() const { return {line_, col_}; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  SExpr read() {
    skip_ws();
    if (pos_ >= text_.size()) throw SyntaxError(here(), "')'", "end of input");
    SExpr e;
    e.loc = here();
    char c = text_[pos_];
    if (c == ')') throw SyntaxError(here(), "expression", ")");
    if (c == '(') {
      e.is_list = true;
      advance();
      for (;;) {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError(here(), "')'", "end of input");
        if (text_[pos_] == ')') {
          advance();
          break;
        }
        e.items.push_back(read());
      }
      return e;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';') break;
      advance();
    }
    e.atom = lower(std::string(text_.substr(start, pos_ - start)));
    return e;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_';
  });
}

inline const std::string& expect_name(const SExpr& e, const char* what) {
  if (e.is_list || !is_identifier(e.atom)) throw SyntaxError(e.loc, what, e.describe());
  return e.atom;
}

inline const SExpr& expect_list(const SExpr& e, const char* what) {
  if (!e.is_list) throw SyntaxError(e.loc, what, e.describe());
  return e;
}

// `a b - t c` → {(a,t),(b,t),(c,object)}. Variables allowed when `vars`.
inline std::vector<TypedName> typed_list(const std::vector<SExpr>& items, std::size_t from, bool vars) {
  std::vector<TypedName> out;
  std::vector<std::string> pending;
  for (std::size_t i = from; i < items.size(); ++i) {
    const SExpr& e = items[i];
    if (e.is_list) throw SyntaxError(e.loc, vars ? "variable" : "name", "(");
    if (e.atom == "-") {
      if (pending.empty()) throw SyntaxError(e.loc, vars ? "variable before '-'" : "name before '-'", "-");
      if (i + 1 >= items.size()) throw SyntaxError(e.loc, "type after '-'", "end of list");
      const SExpr& t = items[++i];
      if (t.is_list) {
        if (!t.items.empty() && t.items[0].is_atom("either")) throw UnsupportedFeature("either", t.loc);
        throw SyntaxError(t.loc, "type name", "(");
      }
      expect_name(t, "type name");
      for (auto& n : pending) out.push_back({std::move(n), t.atom});
      pending.clear();
      continue;
    }
    if (vars) {
      if (e.atom.size() < 2 || e.atom[0] != '?' || !is_identifier(std::string_view(e.atom).substr(1)))
        throw SyntaxError(e.loc, "variable", e.atom);
    } else {
      expect_name(e, "name");
    }
    pending.push_back(e.atom);
  }
  for (auto& n : pending) out.push_back({std::move(n), std::string(kRootType)});
  return out;
}

inline const std::set<std::string, std::less<>>& supported_requirements() {
  static const std::set<std::string, std::less<>> r{":strips", ":typing"};
  return r;
}

inline std::vector<std::string> requirements(const SExpr& sec) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < sec.items.size(); ++i) {
    const SExpr& e = sec.items[i];
    if (e.is_list || e.atom.empty() || e.atom[0] != ':') throw SyntaxError(e.loc, "requirement flag", e.describe());
    if (!supported_requirements().count(e.atom)) throw UnsupportedFeature(e.atom, e.loc);
    out.push_back(e.atom);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline bool is_connective(std::string_view s) {
  static const std::set<std::string, std::less<>> c{
      "not", "or", "imply", "exists", "forall", "when", "=", "increase", "decrease",
      "assign", "scale-up", "scale-down", "preference", "either"};
  return c.count(s) != 0;
}

// Positive atom `(p t1 ... tn)`; terms are variables when `vars`, else names.
inline std::pair<std::string, std::vector<std::string>> atom_of(const SExpr& e, bool vars) {
  expect_list(e, "atom");
  if (e.items.empty()) throw SyntaxError(e.loc, "predicate name", ")");
  const SExpr& head = e.items[0];
  if (head.is_list) throw SyntaxError(head.loc, "predicate name", "(");
  if (is_connective(head.atom) || head.atom == "and") throw UnsupportedFeature(head.atom, head.loc);
  expect_name(head, "predicate name");
  std::vector<std::string> args;
  for (std::size_t i = 1; i < e.items.size(); ++i) {
    const SExpr& t = e.items[i];
    if (t.is_list) throw SyntaxError(t.loc, "term", "(");
    bool var = t.atom.size() > 1 && t.atom[0] == '?';
    if (var) {
      if (!vars) throw SyntaxError(t.loc, "object name", t.atom);
      if (!is_identifier(std::string_view(t.atom).substr(1))) throw SyntaxError(t.loc, "variable", t.atom);
    } else {
      expect_name(t, "term");
    }
    args.push_back(t.atom);
  }
  return {head.atom, std::move(args)};
}

// Flattens a conjunction of positive atoms. Empty list and `(and)` are the
// empty conjunction.
inline void conjunction(const SExpr& e, bool vars, std::vector<std::pair<std::string, std::vector<std::string>>>& out) {
  expect_list(e, "formula");
  if (e.items.empty()) return;
  const SExpr& head = e.items[0];
  if (head.is_atom("and")) {
    for (std::size_t i = 1; i < e.items.size(); ++i) conjunction(e.items[i], vars, out);
    return;
  }
  if (!head.is_list && is_connective(head.atom)) throw UnsupportedFeature(head.atom, head.loc);
  out.push_back(atom_of(e, vars));
}

inline void effects(const SExpr& e, std::vector<AtomTemplate>& add, std::vector<AtomTemplate>& del) {
  expect_list(e, "effect");
  if (e.items.empty()) return;
  const SExpr& head = e.items[0];
  if (head.is_atom("and")) {
    for (std::size_t i = 1; i < e.items.size(); ++i) effects(e.items[i], add, del);
    return;
  }
  if (head.is_atom("not")) {
    if (e.items.size() != 2) throw SyntaxError(e.loc, "single atom under 'not'");
    auto [p, a] = atom_of(e.items[1], true);
    del.push_back({std::move(p), std::move(a)});
    return;
  }
  if (!head.is_list && is_connective(head.atom)) throw UnsupportedFeature(head.atom, head.loc);
  auto [p, a] = atom_of(e, true);
  add.push_back({std::move(p), std::move(a)});
}

template <class T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

inline ActionSchema action(const SExpr& sec) {
  if (sec.items.size() < 2) throw SyntaxError(sec.loc, "action name");
  ActionSchema a;
  a.name = expect_name(sec.items[1], "action name");
  bool seen_params = false, seen_pre = false, seen_eff = false;
  for (std::size_t i = 2; i < sec.items.size(); i += 2) {
    const SExpr& key = sec.items[i];
    if (key.is_list || key.atom.empty() || key.atom[0] != ':')
      throw SyntaxError(key.loc, ":parameters, :precondition or :effect", key.describe());
    if (i + 1 >= sec.items.size()) throw SyntaxError(key.loc, "value after " + key.atom, "')'");
    const SExpr& val = sec.items[i + 1];
    if (key.atom == ":parameters") {
      if (seen_params) throw SyntaxError(key.loc, "single :parameters", key.atom);
      seen_params = true;
      a.params = typed_list(expect_list(val, "parameter list").items, 0, true);
    } else if (key.atom == ":precondition") {
      if (seen_pre) throw SyntaxError(key.loc, "single :precondition", key.atom);
      seen_pre = true;
      std::vector<std::pair<std::string, std::vector<std::string>>> atoms;
      conjunction(val, true, atoms);
      for (auto& [p, args] : atoms) a.pre.push_back({std::move(p), std::move(args)});
    } else if (key.atom == ":effect") {
      if (seen_eff) throw SyntaxError(key.loc, "single :effect", key.atom);
      seen_eff = true;
      effects(val, a.add, a.del);
    } else if (key.atom == ":duration" || key.atom == ":condition") {
      throw UnsupportedFeature(key.atom, key.loc);
    } else {
      throw SyntaxError(key.loc, ":parameters, :precondition or :effect", key.atom);
    }
  }
  sort_unique(a.pre);
  sort_unique(a.add);
  sort_unique(a.del);
  return a;
}

inline void expect_header(const SExpr& doc, const char* kind, std::string& name) {
  expect_list(doc, "'(define'");
  if (doc.items.empty() || !doc.items[0].is_atom("define"))
    throw SyntaxError(doc.loc, "'define'", doc.items.empty() ? ")" : doc.items[0].describe());
  if (doc.items.size() < 2) throw SyntaxError(doc.loc, std::string("(") + kind + " name)");
  const SExpr& h = doc.items[1];
  if (!h.is_list || h.items.size() != 2 || !h.items[0].is_atom(kind))
    throw SyntaxError(h.loc, std::string("(") + kind + " name)", h.describe());
  name = expect_name(h.items[1], "name");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

inline Domain parse_domain(std::string_view text) {
  using namespace detail;
  SExpr doc = Reader(text).read_document();
  Domain d;
  expect_header(doc, "domain", d.name);
  std::set<std::string> seen;
  for (std::size_t i = 2; i < doc.items.size(); ++i) {
    const SExpr& sec = expect_list(doc.items[i], "domain section");
    if (sec.items.empty() || sec.items[0].is_list)
      throw SyntaxError(sec.loc, "section keyword", sec.items.empty() ? ")" : "(");
    const std::string& key = sec.items[0].atom;
    if (key != ":action" && !seen.insert(key).second)
      throw SyntaxError(sec.loc, "single " + key + " section", key);
    if (key == ":requirements") {
      d.requirements = requirements(sec);
    } else if (key == ":types") {
      d.types = typed_list(sec.items, 1, false);
    } else if (key == ":constants") {
      d.constants = typed_list(sec.items, 1, false);
    } else if (key == ":predicates") {
      for (std::size_t j = 1; j < sec.items.size(); ++j) {
        const SExpr& p = expect_list(sec.items[j], "predicate declaration");
        if (p.items.empty()) throw SyntaxError(p.loc, "predicate name", ")");
        PredicateSchema ps;
        ps.name = expect_name(p.items[0], "predicate name");
        ps.params = typed_list(p.items, 1, true);
        d.predicates.push_back(std::move(ps));
      }
    } else if (key == ":action") {
      d.actions.push_back(action(sec));
    } else if (key == ":functions" || key == ":derived" || key == ":durative-action" ||
               key == ":constraints" || key == ":process" || key == ":event") {
      throw UnsupportedFeature(key, sec.loc);
    } else {
      throw SyntaxError(sec.loc, "domain section keyword", key);
    }
  }
  // `object` is implicit; drop explicit re-declarations of it.
  std::erase_if(d.types, [](const TypedName& t) { return t.name == kRootType; });
  std::sort(d.types.begin(), d.types.end());
  std::sort(d.constants.begin(), d.constants.end());
  std::sort(d.predicates.begin(), d.predicates.end(),
            [](const PredicateSchema& a, const PredicateSchema& b) { return a.name < b.name; });
  std::sort(d.actions.begin(), d.actions.end(),
            [](const ActionSchema& a, const ActionSchema& b) { return a.name < b.name; });
  check_domain(d);
  return d;
}

inline Problem parse_problem(std::string_view text, std::shared_ptr<const Domain> domain) {
  using namespace detail;
  if (!domain) throw std::invalid_argument("parse_problem: null domain");
  SExpr doc = Reader(text).read_document();
  Problem q;
  q.domain = std::move(domain);
  expect_header(doc, "problem", q.name);
  std::set<std::string> seen;
  bool have_goal = false;
  for (std::size_t i = 2; i < doc.items.size(); ++i) {
    const SExpr& sec = expect_list(doc.items[i], "problem section");
    if (sec.items.empty() || sec.items[0].is_list)
      throw SyntaxError(sec.loc, "section keyword", sec.items.empty() ? ")" : "(");
    const std::string& key = sec.items[0].atom;
    if (!seen.insert(key).second) throw SyntaxError(sec.loc, "single " + key + " section", key);
    if (key == ":domain") {
      if (sec.items.size() != 2) throw SyntaxError(sec.loc, "domain name");
      const std::string& dn = expect_name(sec.items[1], "domain name");
      if (dn != q.domain->name)
        throw SemanticError("DomainMismatch", dn,
                            "problem targets domain '" + dn + "' but '" + q.domain->name + "' was given");
    } else if (key == ":requirements") {
      requirements(sec);
    } else if (key == ":objects") {
      q.objects = typed_list(sec.items, 1, false);
    } else if (key == ":init") {
      for (std::size_t j = 1; j < sec.items.size(); ++j) {
        const SExpr& e = expect_list(sec.items[j], "init atom");
        if (!e.items.empty() && !e.items[0].is_list && is_connective(e.items[0].atom))
          throw UnsupportedFeature(e.items[0].atom, e.items[0].loc);
        auto [p, args] = atom_of(e, false);
        q.init.insert({std::move(p), std::move(args)});
      }
    } else if (key == ":goal") {
      if (sec.items.size() != 2) throw SyntaxError(sec.loc, "single goal formula");
      std::vector<std::pair<std::string, std::vector<std::string>>> atoms;
      conjunction(sec.items[1], false, atoms);
      for (auto& [p, args] : atoms) q.goal.insert({std::move(p), std::move(args)});
      have_goal = true;
    } else if (key == ":metric" || key == ":constraints" || key == ":length") {
      throw UnsupportedFeature(key, sec.loc);
    } else {
      throw SyntaxError(sec.loc, "problem section keyword", key);
    }
  }
  if (!have_goal) throw SyntaxError(doc.loc, "(:goal ...) section");
  std::sort(q.objects.begin(), q.objects.end());
  check_problem(q);
  return q;
}

// ---------------------------------------------------------------------------
// Rendering (canonical: lexicographic ordering everywhere order is free)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string params_str(const std::vector<TypedName>& ps, bool typed) {
  std::string out;
  for (const auto& p : ps) {
    if (!out.empty()) out += ' ';
    out += p.name;
    if (typed) out += " - " + p.type;
  }
  return out;
}

inline std::string template_str(const AtomTemplate& t) {
  std::string out = "(" + t.predicate;
  for (const auto& a : t.args) out += " " + a;
  return out + ")";
}

}  // namespace detail

inline std::string render_predicate(const PredicateSchema& p, bool typed) {
  std::string ps = detail::params_str(p.params, typed);
  return "(" + p.name + (ps.empty() ? "" : " " + ps) + ")";
}

inline std::string render_action(const ActionSchema& a, bool typed) {
  using detail::template_str;
  std::ostringstream os;
  os << "  (:action " << a.name << "\n";
  os << "    :parameters (" << detail::params_str(a.params, typed) << ")\n";
  os << "    :precondition (and";
  for (const auto& t : a.pre) os << " " << template_str(t);
  os << ")\n";
  os << "    :effect (and";
  for (const auto& t : a.add) os << " " << template_str(t);
  for (const auto& t : a.del) os << " (not " << template_str(t) << ")";
  os << "))\n";
  return os.str();
}

inline std::string render_domain(const Domain& d) {
  const bool typed = d.typed();
  std::ostringstream os;
  os << "(define (domain " << d.name << ")\n";
  if (!d.requirements.empty()) {
    os << "  (:requirements";
    for (const auto& r : d.requirements) os << " " << r;
    os << ")\n";
  }
  if (!d.types.empty()) {
    os << "  (:types";
    for (const auto& t : d.types) os << "\n    " << t.name << " - " << t.type;
    os << ")\n";
  }
  if (!d.constants.empty()) {
    os << "  (:constants";
    for (const auto& c : d.constants) {
      os << "\n    " << c.name;
      if (typed) os << " - " << c.type;
    }
    os << ")\n";
  }
  os << "  (:predicates";
  for (const auto& p : d.predicates) os << "\n    " << render_predicate(p, typed);
  os << ")\n";
  for (const auto& a : d.actions) os << render_action(a, typed);
  os << ")\n";
  return os.str();
}

inline std::string render_problem(const Problem& q) {
  const bool typed = q.domain->typed();
  std::ostringstream os;
  os << "(define (problem " << q.name << ")\n";
  os << "  (:domain " << q.domain->name << ")\n";
  os << "  (:objects";
  for (const auto& o : q.objects) {
    os << "\n    " << o.name;
    if (typed) os << " - " << o.type;
  }
  os << ")\n";
  os << "  (:init";
  for (const auto& a : q.init) os << "\n    " << a.str();
  os << ")\n";
  os << "  (:goal (and";
  for (const auto& a : q.goal) os << "\n    " << a.str();
  os << "))\n";
  os << ")\n";
  return os.str();
}

}  // namespace planforge
