// io.hpp - formatting and file helpers shared by diagnostics and the CLI

#pragma once

#include <string>
#include <vector>

namespace umaircomp {

// Shortest round-trippable decimal representation; identical bytes across
// runs of the same binary, which the determinism contract relies on.
std::string fmt_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::string join_path(const std::string& dir, const std::string& name);

} // namespace umaircomp
