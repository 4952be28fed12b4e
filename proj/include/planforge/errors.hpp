#pragma once

// Exit codes and category names for command-line failures.

#include <exception>
#include <stdexcept>
#include <string>

#include "planforge/corpus.hpp"
#include "planforge/llm.hpp"
#include "planforge/pddl.hpp"
#include "planforge/pipeline.hpp"
#include "planforge/repair.hpp"
#include "planforge/taskgen.hpp"
#include "planforge/trace.hpp"

namespace planforge {

enum class ExitCode : int {
  ok = 0,
  internal = 1,
  usage = 2,
  syntax = 3,
  semantic = 4,
  unsolvable = 5,
  exhausted = 6,
  plan_invalid = 7,
  generation = 8,
  llm = 9,
  repair_failed = 10,
  io = 11,
};

inline const char* to_string(ExitCode c) {
  switch (c) {
    case ExitCode::ok: return "ok";
    case ExitCode::internal: return "internal";
    case ExitCode::usage: return "usage";
    case ExitCode::syntax: return "syntax";
    case ExitCode::semantic: return "semantic";
    case ExitCode::unsolvable: return "unsolvable";
    case ExitCode::exhausted: return "exhausted";
    case ExitCode::plan_invalid: return "plan-invalid";
    case ExitCode::generation: return "generation";
    case ExitCode::llm: return "llm";
    case ExitCode::repair_failed: return "repair-failed";
    case ExitCode::io: return "io";
  }
  return "internal";
}

// Raised by commands for outcomes that are not exceptions elsewhere, such as
// an unsolvable problem reported by `plan`.
class CommandFailure : public std::runtime_error {
 public:
  CommandFailure(ExitCode c, const std::string& msg) : std::runtime_error(msg), code_(c) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

// Stage errors are classified by their cause.
inline ExitCode classify(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const CommandFailure& x) {
    return x.code();
  } catch (const StageError& x) {
    return x.cause() ? classify(x.cause()) : ExitCode::internal;
  } catch (const SemanticError&) {
    return ExitCode::semantic;
  } catch (const PddlError&) {
    return ExitCode::syntax;
  } catch (const UniverseTooLarge&) {
    return ExitCode::semantic;
  } catch (const InvalidPlan&) {
    return ExitCode::plan_invalid;
  } catch (const PreconditionViolated&) {
    return ExitCode::plan_invalid;
  } catch (const ExtractionFailure&) {
    return ExitCode::plan_invalid;
  } catch (const GenerationExhausted&) {
    return ExitCode::generation;
  } catch (const CompositionInfeasible&) {
    return ExitCode::generation;
  } catch (const LLMError&) {
    return ExitCode::llm;
  } catch (const RepairFailed&) {
    return ExitCode::repair_failed;
  } catch (const IoError&) {
    return ExitCode::io;
  } catch (const std::filesystem::filesystem_error&) {
    return ExitCode::io;
  } catch (const nlohmann::json::exception&) {
    return ExitCode::usage;
  } catch (const std::invalid_argument&) {
    return ExitCode::usage;
  } catch (...) {
    return ExitCode::internal;
  }
}

}  // namespace planforge
