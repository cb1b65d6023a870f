#ifndef NSE_ERRORS_HPP
#define NSE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nse {

// Shape or width mismatch between operands.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse: non-scalar loss, empty input, missing records.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Out-of-range hyperparameter or inconsistent configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// A forward op produced NaN or Inf.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// grad_check was handed a non-deterministic function.
struct InvalidCheckError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parallel files disagree on sentence count.
struct AlignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file. `position` is a byte offset for binary files and a
// 1-based line number for text files.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

}  // namespace nse

#endif  // NSE_ERRORS_HPP
