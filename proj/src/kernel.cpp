#include "tasksel/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tasksel/error.hpp"

namespace tasksel {

namespace {

constexpr Eigen::Index kTileCols = 128;

}  // namespace

void KernelSpec::validate() const {
  if (kind == KernelKind::kRbf && !(gamma > 0.0 && std::isfinite(gamma))) {
    throw Error(ErrorCode::kInvalidKernel, "rbf kernel needs gamma > 0");
  }
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  os << kernel_name(kind);
  if (kind == KernelKind::kRbf) os << "(gamma=" << gamma << ")";
  return os.str();
}

std::string_view kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::kEuclidean: return "euclidean";
    case KernelKind::kRbf: return "rbf";
    case KernelKind::kCosine: return "cosine";
  }
  return "unknown";
}

std::optional<KernelKind> parse_kernel_kind(std::string_view name) {
  if (name == "euclidean") return KernelKind::kEuclidean;
  if (name == "rbf") return KernelKind::kRbf;
  if (name == "cosine") return KernelKind::kCosine;
  return std::nullopt;
}

Points points_from_pool(const Pool& pool) {
  const auto& table = pool.embeddings();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!table.has(i)) {
      throw Error(ErrorCode::kMissingEmbedding, pool[i].id);
    }
  }
  Points z(static_cast<Eigen::Index>(pool.size()),
           static_cast<Eigen::Index>(table.dim()));
  const auto data = table.data();
  std::copy(data.begin(), data.end(), z.data());
  return z;
}

double row_dot(const Points& points, Eigen::Index i, const double* v) {
  // Fixed summation order: the result depends only on the two rows, not on
  // where row i sits in the matrix, so duplicate points get identical values.
  const double* a = points.data() + i * points.cols();
  const Eigen::Index d = points.cols();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  Eigen::Index k = 0;
  for (; k + 4 <= d; k += 4) {
    s0 += a[k] * v[k];
    s1 += a[k + 1] * v[k + 1];
    s2 += a[k + 2] * v[k + 2];
    s3 += a[k + 3] * v[k + 3];
  }
  for (; k < d; ++k) s0 += a[k] * v[k];
  return (s0 + s1) + (s2 + s3);
}

void squared_distances(const Points& points, const Eigen::VectorXd& sq_norms,
                       std::size_t j, Eigen::VectorXd& out) {
  const auto jj = static_cast<Eigen::Index>(j);
  const double* v = points.data() + jj * points.cols();
  out.resize(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out[i] = std::max(0.0, sq_norms[i] + sq_norms[jj] - 2.0 * row_dot(points, i, v));
  }
}

KernelMatrix::KernelMatrix(const Points& points, KernelSpec spec, Role role)
    : points_(points), spec_(spec), role_(role) {
  spec_.validate();
  sq_norms_.resize(points_.rows());
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    sq_norms_[i] = row_dot(points_, i, points_.data() + i * points_.cols());
  }
  if (spec_.kind == KernelKind::kCosine) {
    unit_ = points_;
    for (Eigen::Index i = 0; i < unit_.rows(); ++i) {
      if (sq_norms_[i] > 0.0) unit_.row(i) /= std::sqrt(sq_norms_[i]);
    }
  }
}

const Points& KernelMatrix::dot_source() const {
  return spec_.kind == KernelKind::kCosine ? unit_ : points_;
}

double KernelMatrix::from_parts(double dot, std::size_t i, std::size_t j) const {
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  switch (spec_.kind) {
    case KernelKind::kEuclidean:
      if (role_ == Role::kDpp) return dot;
      return -std::max(0.0, sq_norms_[ii] + sq_norms_[jj] - 2.0 * dot);
    case KernelKind::kRbf:
      return std::exp(-spec_.gamma *
                      std::max(0.0, sq_norms_[ii] + sq_norms_[jj] - 2.0 * dot));
    case KernelKind::kCosine:
      return std::clamp(dot, -1.0, 1.0);
  }
  return 0.0;
}

double KernelMatrix::operator()(std::size_t i, std::size_t j) const {
  const auto& z = dot_source();
  const double dot = row_dot(z, static_cast<Eigen::Index>(i),
                             z.data() + static_cast<Eigen::Index>(j) * z.cols());
  return from_parts(dot, i, j);
}

double KernelMatrix::diagonal(std::size_t i) const {
  const auto ii = static_cast<Eigen::Index>(i);
  if (spec_.kind == KernelKind::kCosine) return sq_norms_[ii] > 0.0 ? 1.0 : 0.0;
  return from_parts(sq_norms_[ii], i, i);
}

void KernelMatrix::column(std::size_t j, Eigen::VectorXd& out) const {
  const auto& z = dot_source();
  const double* v = z.data() + static_cast<Eigen::Index>(j) * z.cols();
  const auto n = size();
  out.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out[ii] = from_parts(row_dot(z, ii, v), i, j);
  }
}

void KernelMatrix::tile(Eigen::Index i0, Eigen::Index rows, std::span<const std::size_t> cols,
                        Eigen::MatrixXd& out) const {
  const auto& z = dot_source();
  const auto b = static_cast<Eigen::Index>(cols.size());
  Points picked(b, z.cols());
  Eigen::VectorXd picked_sq(b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const auto j = static_cast<Eigen::Index>(cols[static_cast<std::size_t>(c)]);
    picked.row(c) = z.row(j);
    picked_sq[c] = sq_norms_[j];
  }
  out.noalias() = z.middleRows(i0, rows) * picked.transpose();
  const auto sq = sq_norms_.segment(i0, rows).array();
  for (Eigen::Index c = 0; c < b; ++c) {
    auto g = out.col(c).array();
    switch (spec_.kind) {
      case KernelKind::kEuclidean:
        if (role_ == Role::kFacilityLocation) g = -(sq + picked_sq[c] - 2.0 * g).max(0.0);
        break;
      case KernelKind::kRbf:
        g = (-spec_.gamma * (sq + picked_sq[c] - 2.0 * g).max(0.0)).exp();
        break;
      case KernelKind::kCosine:
        g = g.max(-1.0).min(1.0);
        break;
    }
  }
}

Eigen::VectorXd KernelMatrix::column_sums() const {
  const auto n = points_.rows();
  Eigen::VectorXd sums(n);
  if (spec_.kind == KernelKind::kEuclidean && role_ == Role::kFacilityLocation) {
    // sum_i -|z_i - z_j|^2 = -(sum_i |z_i|^2 + n |z_j|^2 - 2 <z_j, sum_i z_i>)
    const Eigen::RowVectorXd total = points_.colwise().sum();
    const double norm_total = sq_norms_.sum();
    const Eigen::VectorXd cross = points_ * total.transpose();
    sums = -(norm_total + static_cast<double>(n) * sq_norms_.array() - 2.0 * cross.array())
                .max(0.0);
    return sums;
  }
  if (spec_.kind == KernelKind::kCosine) {
    const Eigen::RowVectorXd total = unit_.colwise().sum();
    sums = unit_ * total.transpose();
    return sums;
  }
  // Each column sum adds its tiles in row order, so the result is reproducible.
  sums.setZero();
  std::vector<std::size_t> cols;
  Eigen::MatrixXd block;
  for (Eigen::Index j0 = 0; j0 < n; j0 += kTileCols) {
    cols.clear();
    for (Eigen::Index j = j0; j < std::min(n, j0 + kTileCols); ++j) {
      cols.push_back(static_cast<std::size_t>(j));
    }
    for (Eigen::Index i0 = 0; i0 < n; i0 += kTileRows) {
      tile(i0, std::min(kTileRows, n - i0), cols, block);
      for (std::size_t c = 0; c < cols.size(); ++c) {
        sums[static_cast<Eigen::Index>(cols[c])] += block.col(static_cast<Eigen::Index>(c)).sum();
      }
    }
  }
  return sums;
}

Eigen::VectorXd KernelMatrix::row_lower_bounds() const {
  const auto n = points_.rows();
  switch (spec_.kind) {
    case KernelKind::kRbf:
      return Eigen::VectorXd::Zero(n);
    case KernelKind::kCosine:
      return Eigen::VectorXd::Constant(n, -1.0);
    case KernelKind::kEuclidean: {
      if (role_ == Role::kDpp) {
        // |<a, b>| <= |a| |b|
        const Eigen::VectorXd norms = sq_norms_.cwiseSqrt();
        return -(norms * norms.maxCoeff()) * (1.0 + 1e-6);
      }
      // |a - b| <= |a| + max_j |b_j|
      const Eigen::VectorXd norms = sq_norms_.cwiseSqrt();
      const double reach = norms.maxCoeff();
      return -((norms.array() + reach).square() * (1.0 + 1e-6) + 1e-12).matrix();
    }
  }
  return Eigen::VectorXd::Zero(n);
}

}  // namespace tasksel
