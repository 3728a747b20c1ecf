#pragma once

#include <string>
#include <vector>

namespace quasr {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitNotConverged = 3;

// Entry point behind main(): args excludes argv[0]. Subcommands:
//   fit        --basis {gaussian, legendre} --m1 --m2 (--lambda X | --path)
//              --holdout FILE --solver {cd, admm} --rho --tol --seed
//              --threads --deterministic --out DIR  DATA.csv
//   simulate   --graph {tree, er} --p --d --n --copula --seed --out DIR
//   experiment --config FILE.json --out DIR [--threads N] [--deterministic]
// Returns kExitBadInput for invalid flags/inputs (message on stderr),
// kExitNotConverged when a solver hits its iteration cap (outputs are still
// written, flagged in diagnostics.json), kExitOk otherwise.
int run_cli(const std::vector<std::string>& args);

int cmd_fit(const std::vector<std::string>& args);
int cmd_simulate(const std::vector<std::string>& args);
int cmd_experiment(const std::vector<std::string>& args);

}  // namespace quasr
