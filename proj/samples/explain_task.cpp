// Generates one task, plans it, scores a truncated attempt and prints a
// template reasoning trace for the witness.
//
//   explain_task [family] [seed]

#include <iostream>

#include "planforge/planforge.hpp"

using namespace planforge;

int main(int argc, char** argv) {
  GenSpec g;
  g.family = argc > 1 ? argv[1] : "bw_classic";
  g.seed = argc > 2 ? std::stoull(argv[2]) : 1;
  g.max_objects = 6;
  g.buckets = std::vector<LengthBucket>{{3, 6, 1.0}};
  GeneratedTask t;
  try {
    t = generate(g).front();
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  std::cout << render_problem(t.problem) << "\n";

  GroundUniverse u(t.problem);
  auto ff = solve(u, SearchConfig{});
  std::cout << "; FF plan (" << ff.plan->length() << " steps, " << ff.stats.expanded << " expanded)\n"
            << render_plan(*ff.plan);

  Plan partial = *ff.plan;
  partial.actions.pop_back();
  partial.roles.clear();
  auto rep = validate_plan(u, partial);
  std::cout << "; without its last step: success=" << rep.success << " progress=" << rep.progress.str() << "\n\n";

  auto cot = expand_cot_template(u, extract_trace(u, t.witness), g.seed);
  std::cout << cot.rendered << "\n";
  auto check = check_cot_faithfulness(cot.rendered, extract_trace(u, t.witness), u);
  std::cout << "faithful: " << (check.ok() ? "yes" : check.summary()) << "\n";
}
