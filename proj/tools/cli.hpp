#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fcp::cli {

// Runs `fcp_lab` with args excluding the program name. Results go to the
// --out file or `out`; diagnostics to `err`. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::string& data);

}  // namespace fcp::cli
