#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ckit::cli {

// Every setting a subcommand can take. Each field backs one flag; the JSON
// file written by --write-config and read by --config carries the same set.
struct PipelineConfig {
  // inputs and outputs
  std::string corpus;
  std::string dumps;
  std::string phi;
  std::string scores;
  std::string output_dir = ".";
  std::string output_file;

  // corpus
  std::size_t target_len = 100;
  std::uint64_t words_per_stage = 0;

  // scores
  std::size_t window = 5;
  double alpha = 1.0;

  // influence
  bool exclude_self = false;
  std::string filter;  // "" or "lognorm"
  double mu = 0.0;
  double sigma = 1.0;
  std::vector<double> eta;
  std::size_t chunk_rows = 4096;
  unsigned threads = 1;

  // build
  std::string strategy;
  std::string direction;
  bool all = false;
  std::uint64_t seed = 0;
  std::uint64_t budget = 100'000'000;
  std::size_t epochs = 10;
  std::size_t block_size = 1000;
  std::size_t segments = 10;
  double keep_fraction = 0.5;
  std::size_t epochs_per_stage = 2;
  bool single_shuffle = false;
  bool alternate_from_low = false;
  std::string stage_order = "C1,C2,C3,C4,C5";

  // analyze / plot
  std::vector<std::string> manifests;
  std::vector<std::string> loss_logs;
  bool jsd = false;
  bool tau = false;
  bool composition = false;
  std::size_t n_segments = 1000;
  bool count_balanced = false;
  std::string report;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

struct Invocation {
  std::string command;  // e.g. "influence", "corpus stratify"
  PipelineConfig config;
};

// Parses without executing anything except --write-config. Throws
// CLI::ParseError subclasses on bad input (including --help).
Invocation parse(const std::vector<std::string>& args);

// Entry point; args exclude the program name. Returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace ckit::cli
