#pragma once

#include <string>

#include "hscop/idsa.hpp"

namespace hscop {

// Problem documents: {n, box:{lower,upper,rows}, objective:{linear, offset,
// terms:[{psi, kind, cvx:[[a..., alpha]], cve:[[b..., beta]]}]},
// constraints:[...]} with kind "closed" or "open".
std::string problem_to_json(const HeavisideProblem& p, int indent = 2);
HeavisideProblem problem_from_json(const std::string& text);
HeavisideProblem problem_from_json_file(const std::string& path);

// Approximated problems serialize to the same shape plus a meta block
// {eps, rho, center, selection} when present.
std::string eps_problem_to_json(const EpsProblem& p, int indent = 2);
std::string decomposed_to_json(const DecomposedProblem& dec, int indent = 2);

// One JSON object per line, one line per outer round.
std::string trace_to_json_lines(const RunTrace& trace, bool redact_times = false);

// One JSON object per progressive-fixing iteration.
std::string pip_trace_to_json_lines(const PipTrace& trace, bool redact_times = false);

std::string solution_to_json(std::span<const double> x, double objective, bool feasible,
                             const std::string& method, double wall_ms,
                             bool redact_times = false, int indent = 2);

std::string verify_report_to_json(const VerifyReport& rep, int indent = 2);

}  // namespace hscop
