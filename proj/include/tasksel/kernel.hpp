#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "tasksel/pool.hpp"

namespace tasksel {

/// Row-major point matrix, one embedding per row.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class KernelKind { kEuclidean, kRbf, kCosine };

/// Similarity used by the geometric selectors.
///
/// `euclidean` depends on the selector: k-center uses the true l2 distance,
/// facility location uses the negative squared distance as its similarity,
/// and the DPP uses the plain inner-product Gram matrix <z_i, z_j>.
/// `rbf` is exp(-gamma * |z_i - z_j|^2); `cosine` is the raw cosine, which
/// may be negative (a zero vector has cosine 0 with everything).
struct KernelSpec {
  KernelKind kind = KernelKind::kRbf;
  double gamma = 0.1;

  /// Throws InvalidKernel when kind is rbf and gamma is not positive.
  void validate() const;
  std::string describe() const;
};

std::string_view kernel_name(KernelKind kind);
std::optional<KernelKind> parse_kernel_kind(std::string_view name);

/// Copies the pool's embeddings into a dense double matrix. Throws
/// MissingEmbedding naming the first record without one.
Points points_from_pool(const Pool& pool);

/// Kernel columns over a fixed point set. Squared distances use the expanded
/// form |a|^2 + |b|^2 - 2<a, b> with precomputed norms, clamped at zero.
class KernelMatrix {
 public:
  enum class Role { kFacilityLocation, kDpp };

  /// Row count of a Gram tile that stays cache-resident.
  static constexpr Eigen::Index kTileRows = 2048;

  KernelMatrix(const Points& points, KernelSpec spec, Role role);

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }

  double operator()(std::size_t i, std::size_t j) const;
  /// out[i] = K(i, j) for every point i.
  void column(std::size_t j, Eigen::VectorXd& out) const;
  double diagonal(std::size_t i) const;
  /// out(r, c) = K(i0 + r, cols[c]) for r < rows, from one Gram product.
  void tile(Eigen::Index i0, Eigen::Index rows, std::span<const std::size_t> cols,
            Eigen::MatrixXd& out) const;
  /// sums[j] = sum_i K(i, j). Closed form for the euclidean and cosine
  /// kernels; blocked Gram products for rbf.
  Eigen::VectorXd column_sums() const;
  /// A value no larger than any K(i, j) for fixed i.
  Eigen::VectorXd row_lower_bounds() const;

 private:
  double from_parts(double dot, std::size_t i, std::size_t j) const;
  const Points& dot_source() const;

  const Points& points_;
  KernelSpec spec_;
  Role role_;
  Eigen::VectorXd sq_norms_;
  /// Unit-normalized rows (zero rows stay zero); cosine kernel only.
  Points unit_;
};

/// <z_i, v> summed in a fixed order that depends only on the row contents.
double row_dot(const Points& points, Eigen::Index i, const double* v);

/// Squared distances from point j to every point.
void squared_distances(const Points& points, const Eigen::VectorXd& sq_norms,
                       std::size_t j, Eigen::VectorXd& out);

}  // namespace tasksel
