#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mixdecon {

// Runs one command line (without the program name). Returns 0 on success, 1 on a
// domain, configuration or structural error, 2 on a numeric failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(const std::vector<std::string>& args);

// Default output directory: $MIXDECON_OUT_DIR, else "mixdecon_out".
std::string default_out_dir();

}  // namespace mixdecon
