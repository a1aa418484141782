#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace agestruct::cli {

inline constexpr const char* kOutputDirEnv = "AGESTRUCT_OUT_DIR";

enum Exit : int { ok = 0, check_failed = 1, io_error = 2 };

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// $AGESTRUCT_OUT_DIR when set, otherwise ./out
std::filesystem::path default_output_dir();

}  // namespace agestruct::cli
