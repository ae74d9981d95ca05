#pragma once

// External programs as model oracles, plus the finite-difference jacobian
// used when an oracle has no derivative of its own.
//
// Wire format, one request at a time over the child's stdin/stdout:
//   request:  "P <rows> <cols>\n" then <rows> lines of <cols> floats
//   reply:    <rows> lines holding one float each
//   request:  "J <rows> <cols>\n" then the rows as above
//   reply:    <rows> lines holding <cols> floats each

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fxeffect/core.hpp"

namespace fxeffect {

enum class ExternalMode { predict_only, predict_and_jacobian };

struct ExternalModelConfig {
  // argv of the child; command[0] is looked up on PATH.
  std::vector<std::string> command;
  ExternalMode mode = ExternalMode::predict_only;
  std::size_t batch_size = 4096;
  std::chrono::milliseconds timeout{30000};
};

// Splits on whitespace. No quoting or shell expansion.
std::vector<std::string> split_command(std::string_view text);

// Spawns the child immediately; it lives as long as any copy of the oracle.
ModelOracle external_oracle(const ExternalModelConfig& config);

// Central differences, h_j = h_rel * width(ranges[j]) with a floor of 1e-8.
// One oracle call of 2M rows per column.
Matrix fd_jacobian(const PredictFn& predict, const Matrix& x, std::span<const Interval> ranges,
                   double h_rel = 1e-4);
std::vector<double> fd_partial(const PredictFn& predict, const Matrix& x, std::size_t feature,
                               Interval range, double h_rel = 1e-4);

// Returns the oracle unchanged when it has a jacobian, otherwise one whose
// jacobian is fd_jacobian over the dataset's feature ranges.
ModelOracle ensure_jacobian(ModelOracle oracle, const Dataset& dataset, double h_rel = 1e-4);

// Column `feature` of the jacobian at x, falling back to central differences.
std::vector<double> partial_derivative(const ModelOracle& oracle, const Matrix& x,
                                       std::size_t feature, Interval range);

}  // namespace fxeffect
