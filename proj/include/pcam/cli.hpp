#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pcam {

// Dispatches the pcam subcommands (gen-data, pretrain, finetune, eval,
// crossval, cam). Returns the process exit code: 0 success, 1 usage
// error, 2 data/format error, 3 numeric failure.
int cli_run(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace pcam
