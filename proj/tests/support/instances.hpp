#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "saddlesvm/data_model.hpp"

namespace saddlesvm::testing {

struct InstanceShape {
  std::size_t n1 = 5;
  std::size_t n2 = 5;
  std::size_t dim = 4;
};

/// Random shape with n = n1 + n2 <= max_n and dimension in [2, max_dim].
inline InstanceShape random_shape(std::mt19937_64& rng, std::size_t max_n, std::size_t max_dim) {
  std::uniform_int_distribution<std::size_t> dim(2, max_dim);
  std::uniform_int_distribution<std::size_t> n1(2, max_n / 2);
  std::uniform_int_distribution<std::size_t> n2(2, max_n / 2);
  return {n1(rng), n2(rng), dim(rng)};
}

/// Two Gaussian clouds split by a random hyperplane through the origin, every
/// point at least `gap` from it. With `overlap`, the last positive point is
/// moved onto the centroid of the negative class, so the hulls intersect.
inline Dataset gaussian_instance(std::uint64_t seed, InstanceShape shape, double gap,
                                 bool overlap = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> u(shape.dim);
  double norm = 0.0;
  for (double& v : u) {
    v = normal(rng);
    norm += v * v;
  }
  for (double& v : u) v /= std::sqrt(norm);

  std::vector<LabeledPoint> pts;
  const auto emit = [&](Label y) {
    LabeledPoint p;
    p.label = y;
    p.features.resize(shape.dim);
    double along = 0.0;
    for (std::size_t j = 0; j < shape.dim; ++j) {
      p.features[j] = normal(rng);
      along += p.features[j] * u[j];
    }
    const double s = static_cast<double>(sign_of(y));
    const double target = s * (gap + std::abs(along));
    for (std::size_t j = 0; j < shape.dim; ++j) p.features[j] += (target - along) * u[j];
    pts.push_back(std::move(p));
  };
  for (std::size_t i = 0; i < shape.n1; ++i) emit(Label::Positive);
  for (std::size_t i = 0; i < shape.n2; ++i) emit(Label::Negative);
  if (overlap) {
    auto& moved = pts[shape.n1 - 1].features;
    std::fill(moved.begin(), moved.end(), 0.0);
    for (std::size_t i = shape.n1; i < pts.size(); ++i)
      for (std::size_t j = 0; j < shape.dim; ++j)
        moved[j] += pts[i].features[j] / static_cast<double>(shape.n2);
  }
  return Dataset::create(std::move(pts), shape.dim);
}

}  // namespace saddlesvm::testing
