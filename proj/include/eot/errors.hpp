#pragma once

#include <stdexcept>
#include <string>

namespace eot {

// Input/data problems (unreadable file, non-positive claim, bad column).
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: non-convergence, degenerate statistics, resolution.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// A selector could not identify a threshold (empty infimum set, no series
// crossing, insufficient data for the index rule).
class no_threshold_error : public numerical_error {
 public:
  explicit no_threshold_error(const std::string& what) : numerical_error(what) {}
};

}  // namespace eot
