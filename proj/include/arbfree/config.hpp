#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arbfree/constraints.hpp"
#include "arbfree/datasets.hpp"
#include "arbfree/experiments.hpp"
#include "arbfree/sabr.hpp"
#include "arbfree/training.hpp"

namespace arbfree {

struct MatrixSettings {
  std::vector<Condition> conditions = benchmark_conditions();
  std::size_t jobs = 1;
  friend bool operator==(const MatrixSettings&, const MatrixSettings&) = default;
};

struct BenchSettings {
  std::vector<std::size_t> hidden_layers{2};
  std::vector<std::size_t> widths{16};
  std::vector<std::string> activations{"softplus"};
  std::size_t repeats = 3;
  std::size_t epochs = 1000;
  friend bool operator==(const BenchSettings&, const BenchSettings&) = default;
};

/// One archivable experiment description. `train.penalty` is unused; the
/// top-level `penalty` is authoritative.
struct ExperimentConfig {
  SabrParams sabr;
  GridSpec grid = GridSpec::standard();
  PenaltyConfig penalty;
  TrainConfig train;
  std::string output_dir = "out";
  std::vector<std::uint64_t> seeds{0, 1, 2};
  MatrixSettings matrix;
  BenchSettings bench;

  /// Throws ConfigError or DomainError on the first invalid field.
  void validate() const;
  /// `train` with the top-level penalty applied.
  TrainConfig train_config() const;
  MatrixConfig matrix_config() const;
  BenchConfig bench_config() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Strict parse: unknown keys and wrongly typed values raise ConfigError.
/// Missing keys keep their defaults. The result is validated.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// Every key, pretty-printed; parse_config(dump_config(c)) == c.
std::string dump_config(const ExperimentConfig& cfg);

/// One line per config key with its meaning and default.
std::string config_reference();

}  // namespace arbfree
