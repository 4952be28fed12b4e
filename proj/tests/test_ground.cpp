#include <gtest/gtest.h>

#include "oracle.hpp"
#include "planforge/ground.hpp"
#include "planforge/rng.hpp"
#include "test_util.hpp"

using namespace planforge;
using testutil::atom;

TEST(Ground, ThreeBlocksUniverseSize) {
  GroundUniverse u(testutil::bw3());
  EXPECT_EQ(u.atom_count(), 19u);
  EXPECT_EQ(u.atom_count(), oracle::all_atoms(testutil::bw3()).size());
  // pick-up, put-down: 3 each; stack, unstack: 9 each.
  EXPECT_EQ(u.actions().size(), 24u);
}

TEST(Ground, ZeroObjectsOnlyNullaryAtoms) {
  auto d = std::make_shared<const Domain>(parse_domain("(define (domain z) (:predicates (p) (q) (r ?x)))"));
  Problem q = parse_problem("(define (problem z0) (:domain z) (:init (p)) (:goal (and (q))))", d);
  GroundUniverse u(q);
  EXPECT_EQ(u.atom_count(), 2u);
}

TEST(Ground, TypedGroundingMatchesBruteForce) {
  auto d = std::make_shared<const Domain>(parse_domain(testutil::read_data("typed_logistics.domain.pddl")));
  Problem q = parse_problem(testutil::read_data("typed_logistics.problem.pddl"), d);
  GroundUniverse u(q);
  auto atoms = oracle::all_atoms(q);
  ASSERT_EQ(u.atom_count(), atoms.size());
  for (const auto& a : u.atoms()) EXPECT_TRUE(atoms.count(a)) << a.str();
  auto acts = oracle::all_actions(q);
  ASSERT_EQ(u.actions().size(), acts.size());
  // one truck, places {hq, p1, p2}
  EXPECT_EQ(u.actions().size(), 9u);
  EXPECT_EQ(u.atom_count(), 6u + 9u + 3u);
  // at: vehicles {bike, t1} x places {hq, p1, p2}
  EXPECT_TRUE(u.atom_index(atom("at", {"bike", "p1"})).has_value());
  EXPECT_FALSE(u.atom_index(atom("at", {"p1", "bike"})).has_value());
}

TEST(Ground, EmptyTypeContributesNothing) {
  auto d = std::make_shared<const Domain>(parse_domain(
      "(define (domain t) (:requirements :typing) (:types a b) (:predicates (pa ?x - a) (pb ?x - b)))"));
  Problem q = parse_problem("(define (problem t1) (:domain t) (:objects x y - a) (:init) (:goal (and)))", d);
  GroundUniverse u(q);
  EXPECT_EQ(u.atom_count(), 2u);
}

TEST(Ground, UniverseCap) {
  GroundLimits lim;
  lim.max_actions = 10;
  EXPECT_THROW(GroundUniverse(testutil::bw3(), lim), UniverseTooLarge);
}

TEST(Applicable, InitialThreeBlocks) {
  Problem q = testutil::bw3();
  GroundUniverse u(q);
  auto apps = applicable(q.init, u);
  std::set<std::string> names;
  for (auto* a : apps) names.insert(a->str());
  EXPECT_TRUE(names.count("(pick-up a)"));
  EXPECT_FALSE(names.count("(stack a b)"));
  // Brute-force: exactly the actions whose preconditions hold.
  std::set<std::string> expect;
  for (const auto& a : oracle::all_actions(q))
    if (oracle::subset(a.pre, q.init)) expect.insert(GroundAction{0, a.name, a.args, {}, {}, {}}.str());
  EXPECT_EQ(names, expect);
}

TEST(Applicable, EmptyAndFullState) {
  Problem q = testutil::bw3();
  GroundUniverse u(q);
  EXPECT_TRUE(applicable(State{}, u).empty());
  State full(u.atoms().begin(), u.atoms().end());
  EXPECT_EQ(applicable(full, u).size(), u.actions().size());
}

TEST(Apply, PickUp) {
  Problem q = testutil::bw3();
  GroundUniverse u(q);
  const GroundAction* a = u.find_action("pick-up", std::vector<std::string>{"a"});
  ASSERT_NE(a, nullptr);
  State x{atom("ontable", {"a"}), atom("clear", {"a"}), atom("handempty")};
  EXPECT_EQ(apply(x, *a, u), (State{atom("holding", {"a"})}));
  EXPECT_THROW(apply(State{atom("clear", {"a"})}, *a, u), PreconditionViolated);
  try {
    apply(State{atom("clear", {"a"})}, *a, u);
  } catch (const PreconditionViolated& e) {
    EXPECT_EQ(e.missing().size(), 2u);
  }
}

TEST(Apply, IdentityEffect) {
  auto d = std::make_shared<const Domain>(
      parse_domain("(define (domain n) (:predicates (p)) (:action noop :parameters () :precondition (and) "
                   ":effect (and)))"));
  Problem q = parse_problem("(define (problem n1) (:domain n) (:init (p)) (:goal (and)))", d);
  GroundUniverse u(q);
  EXPECT_EQ(apply(q.init, u.actions()[0], u), q.init);
}

TEST(Apply, AddDeleteOverlapEndsPresent) {
  auto d = std::make_shared<const Domain>(
      parse_domain("(define (domain m) (:predicates (at ?x)) (:action go :parameters (?a ?b) "
                   ":precondition (and (at ?a)) :effect (and (at ?b) (not (at ?a)))))"));
  Problem q = parse_problem("(define (problem m1) (:domain m) (:objects l1 l2) (:init (at l1)) (:goal (and)))", d);
  GroundUniverse u(q);
  const GroundAction* self = u.find_action("go", std::vector<std::string>{"l1", "l1"});
  ASSERT_NE(self, nullptr);
  EXPECT_TRUE(self->del.empty());
  EXPECT_EQ(apply(q.init, *self, u), q.init);
}

// Frame, determinism and applicable/apply consistency over random walks.
TEST(ApplyProperty, RandomWalksAgreeWithSetOracle) {
  Problem q = testutil::bw3();
  GroundUniverse u(q);
  auto acts = oracle::all_actions(q);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    State x = q.init;
    for (int step = 0; step < 30; ++step) {
      const auto& ga = u.actions()[rng.below(u.actions().size())];
      const auto& oa = acts[ga.index];
      ASSERT_EQ(oa.name, ga.schema);
      bool ok = oracle::subset(oa.pre, x);
      if (!ok) {
        EXPECT_THROW(apply(x, ga, u), PreconditionViolated);
        continue;
      }
      State y = apply(x, ga, u);
      EXPECT_EQ(y, apply(x, ga, u));
      EXPECT_EQ(y, oracle::step(x, oa));
      for (const auto& at : u.atoms())
        if (!oa.add.count(at) && !oa.del.count(at)) EXPECT_EQ(x.count(at), y.count(at));
      x = y;
    }
  }
}
