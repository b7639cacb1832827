#ifndef WIC_TOOLS_CLI_H_
#define WIC_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace wic::cli {

// Runs one subcommand. `args` excludes the program name. Results and
// training logs go to `out`; the resolved configuration and diagnostics go
// to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wic::cli

#endif  // WIC_TOOLS_CLI_H_
