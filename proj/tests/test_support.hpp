#ifndef COMPOUND_KGE_TEST_SUPPORT_HPP
#define COMPOUND_KGE_TEST_SUPPORT_HPP

// Shared helpers for the test binaries: random inputs and independent
// reference implementations that do not call into the library's algebra.

#include <array>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "compound_kge.hpp"

namespace kge_test {

using Vec = std::vector<double>;
using M3 = std::array<std::array<double, 3>, 3>;

inline Vec uniform_vec(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline compound_kge::TransformParams random_params(std::mt19937_64& rng, std::size_t d) {
  return {uniform_vec(rng, d), uniform_vec(rng, d / 2, -std::numbers::pi, std::numbers::pi),
          uniform_vec(rng, d, 0.2, 2.0)};
}

inline compound_kge::RelationParams random_relation(std::mt19937_64& rng, std::size_t d,
                                                    bool shared = true) {
  return {random_params(rng, d), random_params(rng, d), shared};
}

// Plain 3x3 algebra, written out independently of compound_kge::Mat3.
inline M3 mul(const M3& a, const M3& b) {
  M3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline M3 eye() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }
inline M3 trans(double x, double y) { return {{{1, 0, x}, {0, 1, y}, {0, 0, 1}}}; }
inline M3 rot(double t) {
  return {{{std::cos(t), -std::sin(t), 0}, {std::sin(t), std::cos(t), 0}, {0, 0, 1}}};
}
inline M3 scal(double x, double y) { return {{{x, 0, 0}, {0, y, 0}, {0, 0, 1}}}; }

/// Product of the chain's matrices in written order for block b of params p.
inline M3 chain_matrix(const std::string& chain, const compound_kge::TransformParams& p, std::size_t b) {
  M3 m = eye();
  for (char c : chain) {
    if (c == 'T') m = mul(m, trans(p.translation[2 * b], p.translation[2 * b + 1]));
    if (c == 'R') m = mul(m, rot(p.angles[b]));
    if (c == 'S') m = mul(m, scal(p.scale[2 * b], p.scale[2 * b + 1]));
  }
  return m;
}

/// Applies per-block homogeneous matrices to x.
inline Vec apply_blocks(const std::string& chain, const compound_kge::TransformParams& p, const Vec& x) {
  Vec y(x.size());
  for (std::size_t b = 0; b < x.size() / 2; ++b) {
    const M3 m = chain_matrix(chain, p, b);
    y[2 * b] = m[0][0] * x[2 * b] + m[0][1] * x[2 * b + 1] + m[0][2];
    y[2 * b + 1] = m[1][0] * x[2 * b] + m[1][1] * x[2 * b + 1] + m[1][2];
  }
  return y;
}

inline double max_abs_diff(const M3& a, const compound_kge::Mat3& b) {
  double r = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r = std::max(r, std::abs(a[i][j] - b(i, j)));
  return r;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

inline double norm_of(const Vec& v, compound_kge::Norm n) {
  double s = 0.0;
  for (double x : v) s += n == compound_kge::Norm::L1 ? std::abs(x) : x * x;
  return n == compound_kge::Norm::L1 ? s : std::sqrt(s);
}

/// Norm-wise relative error ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double relative_error(const Vec& a, const Vec& b) {
  double num = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double den = std::sqrt(std::max(na, nb));
  return den == 0.0 ? 0.0 : std::sqrt(num) / den;
}

/// A parameter vector and the analytic gradient claimed for it.
struct GradSlot {
  Vec* param;
  const Vec* grad;
};

/// Stacks analytic gradients and central differences of f over every slot.
template <typename F>
std::pair<Vec, Vec> finite_difference(F&& f, const std::vector<GradSlot>& slots, double step = 1e-5) {
  Vec analytic, numeric;
  for (const auto& s : slots) {
    for (std::size_t i = 0; i < s.param->size(); ++i) {
      const double keep = (*s.param)[i];
      (*s.param)[i] = keep + step;
      const double up = f();
      (*s.param)[i] = keep - step;
      const double down = f();
      (*s.param)[i] = keep;
      numeric.push_back((up - down) / (2 * step));
      analytic.push_back((*s.grad)[i]);
    }
  }
  return {analytic, numeric};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto p = std::filesystem::temp_directory_path() /
           ("compound_kge_" + tag + "_" + std::to_string(rng() % 1000000000));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace kge_test

#endif  // COMPOUND_KGE_TEST_SUPPORT_HPP
