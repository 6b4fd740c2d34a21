#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bprocova {

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. JSON goes to `out`, human-readable tables and diagnostics
/// to `err`. Returns 0, 1 (I/O), 2 (validation) or 3 (numerical).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bprocova
