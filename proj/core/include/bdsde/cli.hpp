#pragma once

#include <string>
#include <vector>

namespace bdsde {

// Subcommands: simulate-sde, solve-bdsde, solve-spde, compare-fk, converge,
// check-assumptions, dump-paths. Common flags: --scenario <file>, --seed-w,
// --seed-b, --out <dir>, --format {json,csv}, --threads, plus
// --dump-paths/--load-paths for cross-run reproducibility.
// Exit codes: 0 all gates passed, 2 a numerical gate failed, 1 usage or
// config error.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

} // namespace bdsde
