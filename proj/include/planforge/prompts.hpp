#pragma once

// Prompt templates. Placeholders are `{Name}`; fill() substitutes in one pass
// so interpolated text is never re-scanned.

#include <map>
#include <string>
#include <string_view>

namespace planforge::prompts {

inline constexpr std::string_view kVersion = "1";

inline constexpr std::string_view kDomainFix =
    "### Role ###\n"
    "You are an expert in AI Planning (PDDL) and robotics task modeling. Your task is to fix mistakes of a PDDL "
    "planning domain.\n"
    "\n"
    "### PDDL Domain ###\n"
    "The current domain is:{Current domain}\n"
    "\n"
    "### Problem ###\n"
    "The planning problem is: {Planning Problem}\n"
    "\n"
    "### Error ###\n"
    "An error occurred during solving planning problem, the returned error is:{Error Trace}\n";

inline constexpr std::string_view kEvalSystem =
    "You are a robot assistant. Your task is to generate a plan given the initial and goal state. A plan is a "
    "sequence of actions.";

inline constexpr std::string_view kEvalUser =
    "### General request###\n"
    "Your task is to predict a set of actions that arrive at the goal state starting the initial state. A state is "
    "defined by a set of predicates. Predicates can be static (i.e. describe invariant properties of the "
    "environment that do not change over time) or dynamic.\n"
    "\n"
    "### Possible Predicates ### : {Your Predicates}\n"
    "\n"
    "### Possible Actions ###: {Your Actions}\n"
    "\n"
    "### Problem to Solve ###: {Initial State} {Goal State}\n"
    "\n"
    "### Output ###:Always output the final plan inside <FINAL> ... </FINAL>\n";

inline constexpr std::string_view kCoTSystem =
    "### Role ###\n"
    "You are an expert in AI Planning (PDDL) and robotics task modeling. Your task is to generate a detailed "
    "chain-of-thought reasoning process for solving the given planning problem.\n"
    "\n"
    "### Goal ###\n"
    "You will be provided with:\n"
    "\n"
    "- The planning domain\n"
    "\n"
    "- The initial state\n"
    "\n"
    "- The goal state\n"
    "\n"
    "- The ground truth task plan\n"
    "\n"
    "### Task Description ###\n"
    "Your job is to produce a step-by-step reasoning process that explains:\n"
    "\n"
    "- Why each action was chosen\n"
    "\n"
    "- How each action changes the state\n"
    "\n"
    "- How the evolving state satisfies preconditions and leads toward the goal\n"
    "\n"
    "- The logical connections between actions, state transitions, and goal achievement\n"
    "\n"
    "- Explore a few applicable actions at each step other than the provided ground truth\n"
    "\n"
    "- **After each step, briefly reflect on why alternative actions were not chosen at that point**\n"
    "\n"
    "### Output ###\n"
    "You can follow the EXAMPLE reasoning provided, return the full result.\n";

inline constexpr std::string_view kCoTUser =
    "### Problem Setting: ### {Your Problem Setting}\n"
    "\n"
    "### Task Description\n"
    "Your task is to explain how to predict a set of actions that arrive at the goal state starting the initial "
    "state.\n"
    "\n"
    "### Task to explain: ###\n"
    "\n"
    "Initial State: {Your Initial State}\n"
    "\n"
    "Goal State: {Your Goal State}\n"
    "\n"
    "Correct plan of actions: {Your Symbolic Plan}\n"
    "\n"
    "### Solution: ### After your reasoning, put your final explanation in this format:\n"
    "\n"
    "{<REASON><ANSWER_HERE></REASON> }\n";

// Appended to kCoTSystem; holds a worked trajectory in the format the
// faithfulness checker reads.
inline constexpr std::string_view kCoTExampleHeader = "\n### EXAMPLE ###\n";

inline std::string fill(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace planforge::prompts
