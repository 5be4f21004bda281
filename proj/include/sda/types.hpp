#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sda {

using Matrix = Eigen::MatrixXd;  // column-major, rows = samples
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexList = std::vector<Eigen::Index>;

/// Class labels are 0-based indices into the class-name table.
using Labels = std::vector<int>;

enum class ErrorCode {
  InvalidArgument,  // caller violated a precondition
  DataError,        // input data unusable (constant feature, missing value, ...)
  Numerical,        // a factorization or fit broke down
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DataError: return "data_error";
    case ErrorCode::Numerical: return "numerical";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(ErrorCode::InvalidArgument, msg);
}

/// Number of classes implied by a label vector (max label + 1).
int class_count(const Labels& labels);

/// Per-class sample counts; fails on negative labels.
std::vector<int> class_sizes(const Labels& labels, int num_classes);

}  // namespace sda
