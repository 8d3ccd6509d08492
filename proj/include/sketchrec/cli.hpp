#ifndef SKETCHREC_CLI_HPP
#define SKETCHREC_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace sketchrec {

// Runs the command line (args excludes the program name). Reports go to
// `out` as CSV; diagnostics go to `err`. Returns the process exit status:
// 0 exactly when no error diagnostic was emitted.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace sketchrec

#endif
