#pragma once

#include "planforge/corpus.hpp"
#include "planforge/digest.hpp"
#include "planforge/domains.hpp"
#include "planforge/errors.hpp"
#include "planforge/evalharness.hpp"
#include "planforge/ground.hpp"
#include "planforge/llm.hpp"
#include "planforge/parallel.hpp"
#include "planforge/pddl.hpp"
#include "planforge/pipeline.hpp"
#include "planforge/planner.hpp"
#include "planforge/prompts.hpp"
#include "planforge/repair.hpp"
#include "planforge/rng.hpp"
#include "planforge/taskgen.hpp"
#include "planforge/trace.hpp"
#include "planforge/validate.hpp"
