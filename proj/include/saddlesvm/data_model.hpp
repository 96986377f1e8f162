#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace saddlesvm {

enum class Label : int { Positive = 1, Negative = -1 };

inline int sign_of(Label y) { return static_cast<int>(y); }

struct LabeledPoint {
  std::vector<double> features;
  Label label = Label::Positive;

  bool operator==(const LabeledPoint&) const = default;
};

/// A labeled point cloud with both classes present. Construct through
/// Dataset::create (or parse_libsvm), which enforces the invariants.
class Dataset {
 public:
  /// Validates labels, finiteness, common dimension and class presence.
  /// Points shorter than `dim` are zero-padded; longer points are rejected.
  static Dataset create(std::vector<LabeledPoint> points, std::size_t dim);

  const std::vector<LabeledPoint>& points() const { return points_; }
  std::size_t dim() const { return dim_; }
  std::size_t n_positive() const { return n1_; }
  std::size_t n_negative() const { return n2_; }
  std::size_t size() const { return points_.size(); }

  bool operator==(const Dataset&) const = default;

 private:
  Dataset() = default;
  std::vector<LabeledPoint> points_;
  std::size_t dim_ = 0;
  std::size_t n1_ = 0;
  std::size_t n2_ = 0;
};

struct ParseOptions {
  /// Map labels "0" and "2" to the negative class (some LIBSVM files use them).
  bool accept_zero_two_labels = false;
  /// Lower bound on the dimension; features beyond the file's max index are zero.
  std::size_t min_dim = 0;
};

Dataset parse_libsvm(std::istream& in, const ParseOptions& opts = {});
Dataset parse_libsvm(std::string_view text, const ParseOptions& opts = {});
Dataset load_libsvm(const std::string& path, const ParseOptions& opts = {});

/// Writes sparse LIBSVM text (zeros omitted, shortest round-trip decimals).
void write_libsvm(std::ostream& out, const Dataset& data);
std::string to_libsvm(const Dataset& data);

/// Column-major class matrices; columns are points in input order.
struct ClassMatrices {
  Eigen::MatrixXd positive;  // d x n1
  Eigen::MatrixXd negative;  // d x n2
};

ClassMatrices split_classes(const Dataset& data);

}  // namespace saddlesvm
