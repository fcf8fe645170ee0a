#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "marc/channel.hpp"
#include "marc/sim.hpp"

namespace marc {

// Flat config grammar: one `key = value` per line, `#` starts a comment,
// blank lines ignored, lists are comma separated. Unknown keys are errors.
using ConfigValues = std::map<std::string, std::string>;

ConfigValues parse_config_text(const std::string& text, const std::string& origin = "<config>");
ConfigValues load_config_file(const std::string& path);

// Everything a sweep subcommand needs, after defaults, config and flags.
struct RunSettings {
  SimPlan plan;
  int threads = 1;
  double snr_from = 0.0;
  double snr_to = 30.0;
  double snr_step = 2.5;
};

void apply_config(const ConfigValues& values, RunSettings& settings);
std::vector<double> snr_grid(double from, double to, double step);

// Channel matrix text: rows of "re im re im ...", blocks separated by blank
// lines. The destination file holds K user blocks then the relay block; the
// relay file holds K user blocks.
std::vector<CMatrix> parse_matrix_blocks(const std::string& text, const std::string& origin);
ChannelRealization load_realization(const std::string& hd_path, const std::string& hr_path, MarcConfig& cfg);

// Exit status: 0 success, 1 usage or config error, 2 runtime failure.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace marc
