#include "saddlesvm/preprocess.hpp"

#include <cmath>

#include "saddlesvm/error.hpp"
#include "saddlesvm/rng.hpp"

namespace saddlesvm {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

double compute_scale(const Dataset& data) {
  double max_sq = 0.0;
  for (const auto& p : data.points()) {
    double sq = 0.0;
    for (double v : p.features) sq += v * v;
    max_sq = std::max(max_sq, sq);
  }
  if (max_sq == 0.0) throw NumericalError("all points are zero; geometry is degenerate");
  return 1.0 / std::sqrt(max_sq);
}

void fwht_normalized_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  if (!is_power_of_two(n))
    throw std::invalid_argument("Hadamard transform needs a power-of-two length, got " +
                                std::to_string(n));
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (double& x : v) x *= norm;
}

std::vector<double> fwht_normalized(std::vector<double> v) {
  fwht_normalized_inplace(v);
  return v;
}

Eigen::VectorXd TransformSpec::apply(std::span<const double> x) const {
  if (x.size() > padded_dim)
    throw std::invalid_argument("point dimension exceeds the transform dimension");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(padded_dim));
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] * scale * signs[j];
  if (hadamard) fwht_normalized_inplace(std::span<double>(out.data(), padded_dim));
  return out;
}

TransformSpec make_transform_spec(const Dataset& data, std::uint64_t seed) {
  TransformSpec spec;
  spec.seed = seed;
  spec.input_dim = data.dim();
  spec.padded_dim = next_power_of_two(std::max<std::size_t>(data.dim(), 1));
  spec.scale = compute_scale(data);
  auto rng = make_rng(seed, streams::kTransform);
  spec.signs.resize(spec.padded_dim);
  for (double& s : spec.signs) s = (rng() >> 63) ? -1.0 : 1.0;
  return spec;
}

TransformedData apply_transform(const Dataset& data, const TransformSpec& spec) {
  TransformedData out;
  out.spec = spec;
  const auto d = static_cast<Eigen::Index>(spec.padded_dim);
  out.positive.resize(d, static_cast<Eigen::Index>(data.n_positive()));
  out.negative.resize(d, static_cast<Eigen::Index>(data.n_negative()));
  Eigen::Index ip = 0, in = 0;
  for (const auto& p : data.points()) {
    auto col = spec.apply(p.features);
    if (p.label == Label::Positive)
      out.positive.col(ip++) = col;
    else
      out.negative.col(in++) = col;
  }
  return out;
}

TransformedData apply_transform(const Dataset& data, std::uint64_t seed) {
  return apply_transform(data, make_transform_spec(data, seed));
}

TransformedData identity_transformed(Eigen::MatrixXd positive, Eigen::MatrixXd negative) {
  if (positive.rows() != negative.rows())
    throw std::invalid_argument("class matrices disagree on dimension");
  const auto d = static_cast<std::size_t>(positive.rows());
  if (!is_power_of_two(d)) throw std::invalid_argument("dimension must be a power of two");
  TransformedData out;
  out.positive = std::move(positive);
  out.negative = std::move(negative);
  out.spec.input_dim = d;
  out.spec.padded_dim = d;
  out.spec.scale = 1.0;
  out.spec.signs.assign(d, 1.0);
  out.spec.hadamard = false;
  return out;
}

}  // namespace saddlesvm
