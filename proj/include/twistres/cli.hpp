#pragma once

#include <string>
#include <vector>

namespace twistres {

// Batch front end used by the `twistres` binary.  Commands: modes, mu,
// upsilon, resonances, sweep, validate.  Exit codes: 0 success, 2 config
// error, 3 numerical failure, 4 certification failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace twistres
