#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace itemrec::cli {

/// Runs one pipeline stage: simulate, featurize, train, predict or evaluate.
/// Returns 0 on success; prints a diagnostic naming the stage and returns
/// non-zero on any error.
int run(int argc, const char* const* argv);
int run(int argc, char** argv);

/// Convenience for tests: argv[0] is supplied.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace itemrec::cli
