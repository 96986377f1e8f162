#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "saddlesvm/data_model.hpp"

namespace saddlesvm {

/// Everything needed to map a raw feature vector into solver coordinates:
/// scale, zero-pad to a power of two, flip signs, normalized Hadamard.
struct TransformSpec {
  std::uint64_t seed = 0;
  std::size_t input_dim = 0;
  std::size_t padded_dim = 1;
  double scale = 1.0;
  std::vector<double> signs;  // +-1, length padded_dim
  bool hadamard = true;       // false only for identity_transformed data

  /// Applies the transform to one raw point (length <= input_dim).
  Eigen::VectorXd apply(std::span<const double> x) const;
};

struct TransformedData {
  Eigen::MatrixXd positive;  // padded_dim x n1
  Eigen::MatrixXd negative;  // padded_dim x n2
  TransformSpec spec;

  std::size_t dim() const { return spec.padded_dim; }
  std::size_t n_positive() const { return static_cast<std::size_t>(positive.cols()); }
  std::size_t n_negative() const { return static_cast<std::size_t>(negative.cols()); }
  std::size_t size() const { return n_positive() + n_negative(); }
};

std::size_t next_power_of_two(std::size_t n);
bool is_power_of_two(std::size_t n);

/// 1 / max_i ||x_i||, so that the largest point lands on the unit sphere.
/// Throws NumericalError for an all-zero dataset.
double compute_scale(const Dataset& data);

/// In-place (1/sqrt(n)) H_n v with H the Sylvester Hadamard matrix.
void fwht_normalized_inplace(std::span<double> v);
std::vector<double> fwht_normalized(std::vector<double> v);

/// Draws the sign diagonal from the "transform" sub-stream of `seed`.
TransformSpec make_transform_spec(const Dataset& data, std::uint64_t seed);

TransformedData apply_transform(const Dataset& data, std::uint64_t seed);
TransformedData apply_transform(const Dataset& data, const TransformSpec& spec);

/// Wraps already-conditioned class matrices (columns of norm <= 1, power-of-two
/// rows) with an identity transform. Used by tests that build instances directly.
TransformedData identity_transformed(Eigen::MatrixXd positive, Eigen::MatrixXd negative);

}  // namespace saddlesvm
