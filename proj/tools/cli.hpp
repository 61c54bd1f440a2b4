#pragma once

#include <iosfwd>

namespace vnl {

/// Entry point of the `vnlnet` command. Returns the process exit status;
/// errors are reported as one line on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vnl
