#ifndef COMPOUND_KGE_TRANSFORM_HPP
#define COMPOUND_KGE_TRANSFORM_HPP

// Translation / rotation / scaling operators acting on 2D coordinate blocks,
// plus their homogeneous 3x3 matrix forms.
//
// Block layout: coordinates (2i, 2i+1) of a d-dimensional vector form block i.
// Every operator acts independently on each block.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace compound_kge {

// Raised when an operator is not invertible within tolerance.
class singular_operator_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

enum class OperatorKind { Translation, Rotation, Scaling };

inline char operator_symbol(OperatorKind k) {
  switch (k) {
    case OperatorKind::Translation: return 'T';
    case OperatorKind::Rotation: return 'R';
    case OperatorKind::Scaling: return 'S';
  }
  return '?';
}

/// Ordered cascade of distinct operators, stored in written (matrix product)
/// order: the chain "SRT" is the product S*R*T, so T is applied first.
class OperatorChain {
public:
  OperatorChain() = default;

  OperatorChain(std::initializer_list<OperatorKind> kinds) {
    for (auto k : kinds) push(k);
  }

  /// Parses a string over {T,R,S}; the empty string is the identity chain.
  static OperatorChain parse(std::string_view text) {
    OperatorChain chain;
    for (char c : text) {
      switch (c) {
        case 'T': case 't': chain.push(OperatorKind::Translation); break;
        case 'R': case 'r': chain.push(OperatorKind::Rotation); break;
        case 'S': case 's': chain.push(OperatorKind::Scaling); break;
        default:
          throw std::invalid_argument(std::string("invalid operator token '") + c +
                                      "' in chain \"" + std::string(text) +
                                      "\"; valid tokens are T, R, S");
      }
    }
    return chain;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  OperatorKind operator[](std::size_t i) const { return kinds_[i]; }
  auto begin() const { return kinds_.begin(); }
  auto end() const { return kinds_.begin() + static_cast<std::ptrdiff_t>(size_); }

  bool contains(OperatorKind k) const { return std::find(begin(), end(), k) != end(); }

  std::string to_string() const {
    std::string s;
    for (auto k : *this) s.push_back(operator_symbol(k));
    return s;
  }

  friend bool operator==(const OperatorChain& a, const OperatorChain& b) {
    return a.size_ == b.size_ && std::equal(a.begin(), a.end(), b.begin());
  }

private:
  void push(OperatorKind k) {
    if (contains(k))
      throw std::invalid_argument(std::string("operator '") + operator_symbol(k) +
                                  "' repeated in chain");
    kinds_[size_++] = k;
  }

  std::array<OperatorKind, 3> kinds_{};
  std::size_t size_ = 0;
};

/// The six full-length orderings, in the order used by the ablation tables.
inline std::array<OperatorChain, 6> all_full_orderings() {
  return {OperatorChain::parse("TRS"), OperatorChain::parse("TSR"), OperatorChain::parse("STR"),
          OperatorChain::parse("RTS"), OperatorChain::parse("SRT"), OperatorChain::parse("RST")};
}

/// Parameters of one side's operator cascade for a d-dimensional embedding.
/// Angles are unconstrained radians, one per 2D block.
struct TransformParams {
  std::vector<double> translation;
  std::vector<double> angles;
  std::vector<double> scale;

  static TransformParams identity(std::size_t dim) {
    return {std::vector<double>(dim, 0.0), std::vector<double>(dim / 2, 0.0),
            std::vector<double>(dim, 1.0)};
  }

  std::size_t dim() const { return translation.size(); }
};

// Non-owning view over one side's parameters. Angles may alias another side.
struct TransformView {
  std::span<const double> translation;
  std::span<const double> angles;
  std::span<const double> scale;

  TransformView() = default;
  TransformView(std::span<const double> t, std::span<const double> a, std::span<const double> s)
      : translation(t), angles(a), scale(s) {}
  TransformView(const TransformParams& p)  // NOLINT(google-explicit-constructor)
      : translation(p.translation), angles(p.angles), scale(p.scale) {}
};

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
}

inline void require_even(std::size_t d, const char* what) {
  if (d % 2 != 0)
    throw std::invalid_argument(std::string(what) + ": dimension " + std::to_string(d) +
                                " is odd; rotation needs 2D blocks");
}

inline void translate_inplace(std::span<double> x, std::span<const double> t) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += t[i];
}

inline void scale_inplace(std::span<double> x, std::span<const double> s) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= s[i];
}

inline void rotate_inplace(std::span<double> x, std::span<const double> angles) {
  for (std::size_t b = 0; b < angles.size(); ++b) {
    const double c = std::cos(angles[b]);
    const double s = std::sin(angles[b]);
    const double x0 = x[2 * b];
    const double x1 = x[2 * b + 1];
    x[2 * b] = c * x0 - s * x1;
    x[2 * b + 1] = s * x0 + c * x1;
  }
}

inline void check_view(std::size_t d, const OperatorChain& chain, const TransformView& p) {
  for (auto k : chain) {
    switch (k) {
      case OperatorKind::Translation:
        require_same_size(d, p.translation.size(), "translation");
        break;
      case OperatorKind::Rotation:
        require_even(d, "rotation");
        require_same_size(d / 2, p.angles.size(), "rotation angles");
        break;
      case OperatorKind::Scaling:
        require_same_size(d, p.scale.size(), "scaling");
        break;
    }
  }
}

// Applies the chain right-to-left in place. No size checks.
inline void apply_chain_inplace(std::span<double> x, const OperatorChain& chain,
                                const TransformView& p) {
  for (std::size_t i = chain.size(); i-- > 0;) {
    switch (chain[i]) {
      case OperatorKind::Translation: translate_inplace(x, p.translation); break;
      case OperatorKind::Rotation: rotate_inplace(x, p.angles); break;
      case OperatorKind::Scaling: scale_inplace(x, p.scale); break;
    }
  }
}

}  // namespace detail

inline std::vector<double> apply_translation(std::span<const double> x, std::span<const double> t) {
  detail::require_same_size(x.size(), t.size(), "apply_translation");
  std::vector<double> y(x.begin(), x.end());
  detail::translate_inplace(y, t);
  return y;
}

/// Rotates each 2D block counterclockwise by its angle.
inline std::vector<double> apply_rotation(std::span<const double> x,
                                          std::span<const double> angles) {
  detail::require_even(x.size(), "apply_rotation");
  detail::require_same_size(x.size() / 2, angles.size(), "apply_rotation");
  std::vector<double> y(x.begin(), x.end());
  detail::rotate_inplace(y, angles);
  return y;
}

/// Elementwise product. Zero entries are allowed and make the map singular.
inline std::vector<double> apply_scaling(std::span<const double> x, std::span<const double> s) {
  detail::require_same_size(x.size(), s.size(), "apply_scaling");
  std::vector<double> y(x.begin(), x.end());
  detail::scale_inplace(y, s);
  return y;
}

inline std::vector<double> apply_chain(std::span<const double> x, const OperatorChain& chain,
                                       const TransformView& params) {
  detail::check_view(x.size(), chain, params);
  std::vector<double> y(x.begin(), x.end());
  detail::apply_chain_inplace(y, chain, params);
  return y;
}

// ---------------------------------------------------------------------------
// Homogeneous 3x3 forms

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> a{};

  static Mat3 identity() { return {{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(3 * r + c)]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(3 * r + c)]; }

  friend Mat3 operator*(const Mat3& x, const Mat3& y) {
    Mat3 z;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) acc += x(i, k) * y(k, j);
        z(i, j) = acc;
      }
    return z;
  }

  friend Mat3 operator-(const Mat3& x, const Mat3& y) {
    Mat3 z;
    for (std::size_t i = 0; i < 9; ++i) z.a[i] = x.a[i] - y.a[i];
    return z;
  }

  /// Applies to the homogeneous point (x, y, 1); returns the affine part.
  std::array<double, 2> apply(double x, double y) const {
    return {(*this)(0, 0) * x + (*this)(0, 1) * y + (*this)(0, 2),
            (*this)(1, 0) * x + (*this)(1, 1) * y + (*this)(1, 2)};
  }

  /// Determinant of the upper-left linear block.
  double linear_det() const { return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0); }
};

inline double max_abs(const Mat3& m) {
  double r = 0.0;
  for (double v : m.a) r = std::max(r, std::abs(v));
  return r;
}

/// Parameters of one 2D block: translation (v_x, v_y), angle, scales (s_x, s_y).
struct BlockParams {
  double vx = 0.0, vy = 0.0;
  double theta = 0.0;
  double sx = 1.0, sy = 1.0;
};

inline BlockParams block_params(const TransformView& p, std::size_t block) {
  BlockParams b;
  if (p.translation.size() > 2 * block + 1) {
    b.vx = p.translation[2 * block];
    b.vy = p.translation[2 * block + 1];
  }
  if (p.angles.size() > block) b.theta = p.angles[block];
  if (p.scale.size() > 2 * block + 1) {
    b.sx = p.scale[2 * block];
    b.sy = p.scale[2 * block + 1];
  }
  return b;
}

inline Mat3 translation_matrix(double vx, double vy) { return {{1, 0, vx, 0, 1, vy, 0, 0, 1}}; }

inline Mat3 rotation_matrix(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {{c, -s, 0, s, c, 0, 0, 0, 1}};
}

inline Mat3 scaling_matrix(double sx, double sy) { return {{sx, 0, 0, 0, sy, 0, 0, 0, 1}}; }

inline Mat3 operator_matrix(OperatorKind k, const BlockParams& b) {
  switch (k) {
    case OperatorKind::Translation: return translation_matrix(b.vx, b.vy);
    case OperatorKind::Rotation: return rotation_matrix(b.theta);
    case OperatorKind::Scaling: return scaling_matrix(b.sx, b.sy);
  }
  return Mat3::identity();
}

/// Homogeneous matrix of the chain for one block (product in written order).
/// The bottom row is always (0, 0, 1).
inline Mat3 compound_matrix_2d(const OperatorChain& chain, const BlockParams& b) {
  Mat3 m = Mat3::identity();
  for (auto k : chain) m = m * operator_matrix(k, b);
  return m;
}

inline constexpr double kSingularTolerance = 1e-8;

/// Block-form inverse [A^-1, -A^-1 v; 0, 1].
inline Mat3 invert_compound_2d(const Mat3& m, double tolerance = kSingularTolerance) {
  const double det = m.linear_det();
  if (!(std::abs(det) >= tolerance))
    throw singular_operator_error("compound operator is singular (|det A| = " +
                                  std::to_string(std::abs(det)) + ")");
  const double i00 = m(1, 1) / det, i01 = -m(0, 1) / det;
  const double i10 = -m(1, 0) / det, i11 = m(0, 0) / det;
  const double vx = m(0, 2), vy = m(1, 2);
  return {{i00, i01, -(i00 * vx + i01 * vy), i10, i11, -(i10 * vx + i11 * vy), 0, 0, 1}};
}

}  // namespace compound_kge

#endif  // COMPOUND_KGE_TRANSFORM_HPP
