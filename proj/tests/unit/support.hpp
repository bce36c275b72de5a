#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "chemred/harness.hpp"

namespace testing {

using namespace chemred;

inline Coefficients standard_coefficients(std::size_t points = 201, double m = 1.0, double M_in = 1.0) {
  const auto g = TraitGrid::uniform(-2.0, 2.0, points);
  return build_gaussian_coefficients(NormalizedGaussian{0.5, 0.5, M_in}, m, g, g);
}

inline Vector standard_initial(const TraitGrid& g) { return initial_condition_gaussian(-0.8, 0.005, 1.0, g); }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("chemred_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Random coefficients with positive R_in/m and nonnegative K.
inline Coefficients random_coefficients(std::mt19937_64& rng, std::size_t nx, std::size_t ny) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto gx = TraitGrid::uniform(-1.0, 1.0, nx);
  const auto gy = TraitGrid::uniform(-1.5, 1.0, ny);
  Vector a(static_cast<Eigen::Index>(nx)), m(static_cast<Eigen::Index>(ny)), rin(static_cast<Eigen::Index>(ny));
  Matrix K(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(ny));
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = 2.0 * u(rng) - 0.5;
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    m[k] = 0.2 + 2.0 * u(rng);
    rin[k] = 0.1 + 3.0 * u(rng);
  }
  for (Eigen::Index i = 0; i < K.rows(); ++i)
    for (Eigen::Index k = 0; k < K.cols(); ++k) K(i, k) = u(rng) < 0.2 ? 0.0 : 2.0 * u(rng);
  return make_coefficients(gx, gy, a, m, rin, K);
}

}  // namespace testing
