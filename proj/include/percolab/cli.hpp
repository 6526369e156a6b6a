#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace percolab::cli {

/// Runs one subcommand. Exit codes: 0 success, 1 runtime failure,
/// 2 usage or validation failure. Errors are one line on `err`:
///   percolab: error kind=<kind>: <message>
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with the arguments after the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Output directory: the --out value if non-empty, else $PERCOLAB_OUT, else ".".
std::string resolve_output_dir(const std::string& flag_value);

}  // namespace percolab::cli
