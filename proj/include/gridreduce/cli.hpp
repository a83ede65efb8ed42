#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gridreduce {

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridreduce
