#include <gtest/gtest.h>

#include "planforge/repair.hpp"
#include "planforge/taskgen.hpp"
#include "test_util.hpp"

using namespace planforge;
using testutil::atom;

namespace {

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  auto i = s.find(from);
  EXPECT_NE(i, std::string::npos) << from;
  if (i != std::string::npos) s.replace(i, from.size(), to);
  return s;
}

const std::string kGolden(domains::kBlocksWorld);

// stack no longer adds (on ?x ?y).
std::string broken_stack() {
  return replace_once(kGolden, "(on ?x ?y) (clear ?x) (handempty) (not (holding ?x))",
                      "(clear ?x) (handempty) (not (holding ?x))");
}

// Ten small Blocks World problems whose goals include towers, plus one whose
// goal is to hold a block.
const std::vector<Problem>& suite() {
  static const std::vector<Problem> s = [] {
    GenSpec g;
    g.family = "bw_hard";
    g.count = 10;
    g.seed = 5;
    g.min_objects = 3;
    g.max_objects = 5;
    g.subfamily = "stack";
    g.buckets = std::vector<LengthBucket>{{2, 10, 1.0}};
    std::vector<Problem> out;
    for (auto& t : generate(g)) out.push_back(t.problem);
    Problem hold = testutil::bw3();
    hold.name = "hold";
    hold.goal = {atom("holding", {"b"})};
    out.push_back(hold);
    return out;
  }();
  return s;
}

}  // namespace

TEST(ValidateDomain, GoldenPassesSuite) {
  auto rep = validate_domain_text(kGolden, suite());
  EXPECT_TRUE(rep.passes());
  EXPECT_EQ(rep.entries.size(), 11u);
  for (const auto& e : rep.entries) EXPECT_TRUE(e.plan) << e.problem_id;
}

TEST(ValidateDomain, MissingAddEffectIsUnsolvable) {
  auto rep = validate_domain_text(broken_stack(), suite());
  EXPECT_FALSE(rep.passes());
  std::size_t unsolvable = 0;
  for (const auto& e : rep.entries)
    if (e.status == SuiteStatus::unsolvable) {
      ++unsolvable;
      EXPECT_NE(e.error.find("relaxed-unreachable goals: (on "), std::string::npos) << e.error;
    }
  EXPECT_EQ(unsolvable, 10u);
  EXPECT_EQ(rep.entries.back().status, SuiteStatus::solvable);
}

TEST(ValidateDomain, UndeclaredPredicateIsSemanticError) {
  std::string text = replace_once(kGolden, "(holding ?x) (clear ?y))", "(holding ?x) (clear ?y) (sticky ?y))");
  auto rep = validate_domain_text(text, suite());
  for (const auto& e : rep.entries) {
    EXPECT_EQ(e.status, SuiteStatus::semantic_error);
    EXPECT_NE(e.error.find("sticky"), std::string::npos);
  }
  try {
    parse_domain(text);
    FAIL();
  } catch (const SemanticError& e) {
    EXPECT_EQ(e.name(), "sticky");
  }
}

TEST(ValidateDomain, ParseErrorAndEmptySuite) {
  auto rep = validate_domain_text("(define (domain x", suite());
  EXPECT_EQ(rep.entries.front().status, SuiteStatus::parse_error);
  EXPECT_THROW(validate_domain_text(kGolden, {}), std::invalid_argument);
}

TEST(ValidateDomain, ParallelMatchesSequential) {
  SuiteBudget b;
  b.jobs = 3;
  auto a = validate_domain_text(broken_stack(), suite());
  auto c = validate_domain_text(broken_stack(), suite(), b);
  ASSERT_EQ(a.entries.size(), c.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) EXPECT_EQ(a.entries[i].error, c.entries[i].error);
}

TEST(Feedback, TemplateSections) {
  std::string text = replace_once(kGolden, "(holding ?x) (clear ?y))", "(holding ?x) (clear ?y) (sticky ?y))");
  auto rep = validate_domain_text(text, suite());
  auto fb = build_feedback(rep.entries[0], suite()[0], text);
  const auto& p = fb.prompt_text;
  EXPECT_EQ(p.rfind("### Role ###\nYou are an expert in AI Planning (PDDL) and robotics task modeling.", 0), 0u);
  EXPECT_NE(p.find("### PDDL Domain ###\nThe current domain is:" + text), std::string::npos);
  EXPECT_NE(p.find("### Problem ###\nThe planning problem is: " + render_problem(suite()[0])), std::string::npos);
  EXPECT_NE(p.find("An error occurred during solving planning problem, the returned error is:" + rep.entries[0].error),
            std::string::npos);
  EXPECT_EQ(build_feedback(rep.entries[0], suite()[0], text).prompt_text, p);
}

TEST(Feedback, UnsolvableGolden) {
  auto d = std::make_shared<const Domain>(parse_domain(broken_stack()));
  Problem q = rebind(testutil::bw3(), d);
  auto rep = validate_domain(d, {q});
  ASSERT_EQ(rep.entries[0].status, SuiteStatus::unsolvable);
  auto fb = build_feedback(rep.entries[0], q, broken_stack());
  EXPECT_EQ(fb.prompt_text, testutil::read_data("feedback_unsolvable.golden"));
}

TEST(ExtractDomain, BalancedForm) {
  std::string reply = "Here is the fix:\n```pddl\n" + kGolden + "```\nThe (define (domain broken is cut";
  auto d = extract_domain_text(reply);
  ASSERT_TRUE(d);
  EXPECT_EQ(parse_domain(*d), parse_domain(kGolden));
  EXPECT_FALSE(extract_domain_text("no pddl here"));
}

TEST(RepairLoop, ScriptedFixInOneRound) {
  auto llm = ScriptedClient::replies({"The stack action lost its add effect. Fixed domain:\n" + kGolden});
  auto res = repair_loop(broken_stack(), suite(), *llm);
  EXPECT_EQ(res.rounds, 1u);
  EXPECT_EQ(*res.domain, parse_domain(kGolden));
  EXPECT_TRUE(validate_domain(res.domain, suite()).passes());
  ASSERT_EQ(res.history.size(), 2u);
  EXPECT_EQ(res.history[1].passes, std::vector<bool>(11, true));
  auto reqs = llm->requests();
  ASSERT_EQ(reqs.size(), 1u);
  auto first = validate_domain_text(broken_stack(), suite());
  EXPECT_EQ(reqs[0].user, build_feedback(*first.first_failure(), suite()[0], broken_stack()).prompt_text);
}

TEST(RepairLoop, ValidDomainUnchanged) {
  auto llm = ScriptedClient::replies({});
  auto res = repair_loop(kGolden, suite(), *llm);
  EXPECT_EQ(res.rounds, 0u);
  EXPECT_EQ(res.domain_text, kGolden);
  EXPECT_TRUE(llm->requests().empty());
}

TEST(RepairLoop, UnparseableRepliesExhaust) {
  auto llm = ScriptedClient::replies({"I am not sure what to change."});
  RepairOptions opt;
  opt.max_rounds = 3;
  try {
    repair_loop(broken_stack(), suite(), *llm, opt);
    FAIL();
  } catch (const RepairFailed& e) {
    ASSERT_EQ(e.history().size(), 4u);
    EXPECT_EQ(e.history()[0].note, "reply contained no domain");
    EXPECT_EQ(e.history().back().round, 3u);
  }
  EXPECT_EQ(llm->requests().size(), 3u);
}

TEST(RepairLoop, UnavailablePropagates) {
  ScriptedClient llm([](const ChatRequest&, std::size_t) -> ChatResponse { throw LLMUnavailable("no token"); });
  EXPECT_THROW(repair_loop(broken_stack(), suite(), llm), LLMUnavailable);
}

TEST(Prune, RemovesDecorativePredicate) {
  std::string text = replace_once(kGolden, "(holding ?x))", "(holding ?x) (decorative ?x))");
  text = replace_once(text, "(ontable ?x) (clear ?x) (handempty) (not (holding ?x))",
                      "(ontable ?x) (clear ?x) (handempty) (decorative ?x) (not (holding ?x))");
  Domain d = parse_domain(text);
  ASSERT_EQ(components(d).size(), 10u);
  auto res = hill_climb_prune(d, suite());
  ASSERT_EQ(res.removed.size(), 1u);
  EXPECT_EQ(res.removed[0].str(), "predicate decorative");
  Domain golden = parse_domain(kGolden);
  golden.name = d.name;
  EXPECT_EQ(*res.domain, golden);
}

TEST(Prune, MinimalDomainUnchangedAndOneMinimal) {
  Domain d = parse_domain(kGolden);
  auto res = hill_climb_prune(d, suite());
  EXPECT_TRUE(res.removed.empty());
  EXPECT_EQ(*res.domain, d);
  for (const auto& c : components(d)) {
    Domain smaller = without(d, c);
    EXPECT_FALSE(validate_domain(smaller, suite()).passes()) << c.str();
  }
}

TEST(Prune, DuplicateActionKeepsOneCopy) {
  std::string copy =
      "  (:action grab\n    :parameters (?x)\n    :precondition (and (clear ?x) (ontable ?x) (handempty))\n"
      "    :effect (and (holding ?x) (not (ontable ?x)) (not (clear ?x)) (not (handempty))))\n  (:action pick-up";
  std::string text = replace_once(kGolden, "  (:action pick-up", copy);
  Domain d = parse_domain(text);
  auto res = hill_climb_prune(d, suite());
  ASSERT_EQ(res.removed.size(), 1u);
  EXPECT_EQ(res.removed[0].str(), "action grab");
  EXPECT_TRUE(res.domain->find_action("pick-up"));
  EXPECT_FALSE(res.domain->find_action("grab"));
  EXPECT_TRUE(validate_domain(res.domain, suite()).passes());
  EXPECT_EQ(hill_climb_prune(d, suite()).removed, res.removed);
}

TEST(Prune, RejectsFailingInput) {
  EXPECT_THROW(hill_climb_prune(parse_domain(broken_stack()), suite()), std::invalid_argument);
}

TEST(Components, CanonicalOrder) {
  auto cs = components(parse_domain(kGolden));
  std::vector<std::string> names;
  for (const auto& c : cs) names.push_back(c.str());
  EXPECT_EQ(names, (std::vector<std::string>{"action pick-up", "action put-down", "action stack", "action unstack",
                                             "predicate clear", "predicate handempty", "predicate holding",
                                             "predicate on", "predicate ontable"}));
}
