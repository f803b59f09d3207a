#include "matvar/distributions.hpp"

#include <cmath>
#include <string>

namespace matvar {

namespace {

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Matrix z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = rng.normal();
  return z;
}

SpdMat bartlett(const WishartParams& p, RngStream& rng) {
  const Eigen::Index d = p.dim();
  Matrix t = Matrix::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    t(j, j) = std::sqrt(rng.chisq(p.dof() - static_cast<double>(j)));
    for (Eigen::Index k = 0; k < j; ++k) t(j, k) = rng.normal();
  }
  const Matrix root = sym_sqrt(p.scale()).matrix();
  const Matrix rt = root * t;
  return assert_pd(SymMat(Matrix(rt * rt.transpose())));
}

SpdMat outer_product(const WishartParams& p, RngStream& rng) {
  const Eigen::Index d = p.dim();
  const auto rows = static_cast<Eigen::Index>(p.dof());
  Matrix mean = Matrix::Zero(rows, d);
  if (!p.is_central()) mean.topRows(d) = sym_sqrt(p.noncentrality()).matrix();
  const Matrix n = sample_matrix_normal(MatrixNormalParams(std::move(mean), p.scale()), rng);
  return assert_pd(SymMat(Matrix(n.transpose() * n)));
}

}  // namespace

MatrixNormalParams::MatrixNormalParams(Matrix m, SpdMat s) : mean(std::move(m)), scale(std::move(s)) {
  require_same_dim(mean.cols(), scale.dim(), "matrix normal mean columns vs scale");
  if (mean.rows() < 1) throw Error(ErrorCode::InvalidSpec, "matrix normal needs at least one row");
  if (!mean.allFinite()) throw Error(ErrorCode::InvalidSpec, "matrix normal mean has non-finite entries");
  if (!scale.is_pd()) throw Error(ErrorCode::NotPsd, "matrix normal scale must be positive definite");
}

WishartParams::WishartParams(double dof, SpdMat scale, SpdMat noncentrality)
    : dof_(dof), scale_(std::move(scale)), delta_(std::move(noncentrality)) {
  require_same_dim(scale_.dim(), delta_.dim(), "Wishart scale vs noncentrality");
  if (!scale_.is_pd()) throw Error(ErrorCode::NotPsd, "Wishart scale must be positive definite");
  if (!(dof_ > static_cast<double>(dim() - 1))) {
    throw Error(ErrorCode::DomainError,
                "Wishart dof must exceed d-1, got " + std::to_string(dof_) + " with d=" + std::to_string(dim()));
  }
}

WishartParams::WishartParams(double dof, SpdMat scale)
    : WishartParams(dof, scale, assert_pd(SymMat::zero(scale.dim()))) {}

bool WishartParams::is_central() const { return delta_.eigenvalues().maxCoeff() <= 0.0; }

Matrix WishartParams::theta() const { return scale_.inverse().matrix() * delta_.matrix(); }

bool WishartParams::has_integer_dof() const {
  return std::floor(dof_) == dof_ && dof_ >= static_cast<double>(dim());
}

BetaIIParams::BetaIIParams(double d1, double d2, int d) : dof1(d1), dof2(d2), dim(d) {
  if (d < 1) throw Error(ErrorCode::DomainError, "Beta II dimension must be >= 1");
  if (!(d1 > d - 1) || !(d2 > d - 1)) {
    throw Error(ErrorCode::DomainError, "Beta II needs dof1, dof2 > d-1, got " + std::to_string(d1) + ", " +
                                            std::to_string(d2) + " with d=" + std::to_string(d));
  }
}

Matrix sample_matrix_normal(const MatrixNormalParams& params, RngStream& rng) {
  const Matrix z = standard_normal(params.rows(), params.dim(), rng);
  return params.mean + z * sym_sqrt(params.scale).matrix();
}

SpdMat sample_wishart(const WishartParams& params, RngStream& rng, WishartMethod method) {
  if (method == WishartMethod::Auto) method = params.is_central() ? WishartMethod::Bartlett : WishartMethod::OuterProduct;
  if (method == WishartMethod::Bartlett) {
    if (!params.is_central()) throw Error(ErrorCode::UnsupportedDof, "Bartlett sampling is central only");
    return bartlett(params, rng);
  }
  if (!params.has_integer_dof()) {
    throw Error(ErrorCode::UnsupportedDof,
                "outer-product sampling needs integer dof >= d, got " + std::to_string(params.dof()));
  }
  return outer_product(params, rng);
}

double log_wishart_mgf(const WishartParams& params, const SymMat& t) {
  require_same_dim(params.dim(), t.dim(), "MGF argument");
  const Eigen::Index d = params.dim();
  const Matrix& sigma = params.scale().matrix();

  // |I - 2 T Sigma| = |Sigma^{1/2}(Sigma^{-1} - 2T)Sigma^{1/2}|; the symmetric
  // form doubles as the domain check.
  const SymMat inner = SymMat::identity(d) - 2.0 * conjugate(t, params.scale());
  Eigen::SelfAdjointEigenSolver<Matrix> es(inner.matrix(), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorCode::OutsideDomain, "scale^{-1} - 2T is not positive definite");
  }
  const double log_det = es.eigenvalues().array().log().sum();

  const Matrix ts = t.matrix() * sigma;
  const Matrix lhs = Matrix::Identity(d, d) - 2.0 * ts;
  const Matrix exponent = ts * lhs.partialPivLu().inverse() * params.theta();
  return exponent.trace() - 0.5 * params.dof() * log_det;
}

double wishart_mgf(const WishartParams& params, const SymMat& t) { return std::exp(log_wishart_mgf(params, t)); }

SymMat wishart_mean(const WishartParams& params) {
  return params.dof() * params.scale().sym() + params.noncentrality().sym();
}

SpdMat sample_beta2(const BetaIIParams& params, RngStream& rng) {
  const SpdMat id = SpdMat::identity(params.dim);
  const SpdMat s1 = sample_wishart(WishartParams(params.dof1, id), rng, WishartMethod::Bartlett);
  const SpdMat s2 = sample_wishart(WishartParams(params.dof2, id), rng, WishartMethod::Bartlett);
  const Matrix w = s2.inv_sqrt().matrix();
  return assert_pd(SymMat(Matrix(w * s1.matrix() * w)));
}

double sample_noncentral_chisq(double dof, double noncen, RngStream& rng) {
  if (!(dof > 0.0)) throw Error(ErrorCode::DomainError, "noncentral chi-square dof must be > 0");
  if (!(noncen >= 0.0) || !std::isfinite(noncen)) {
    throw Error(ErrorCode::DomainError, "noncentral chi-square noncentrality must be finite and >= 0");
  }
  const double central = rng.chisq(dof);
  const std::uint64_t k = rng.poisson(0.5 * noncen);
  return k == 0 ? central : central + rng.chisq(2.0 * static_cast<double>(k));
}

SpdMat random_spd(Eigen::Index d, RngStream& rng, double min_eig, double max_eig) {
  Eigen::HouseholderQR<Matrix> qr(standard_normal(d, d, rng));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (Eigen::Index j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  Vector evals(d);
  for (Eigen::Index j = 0; j < d; ++j) evals(j) = min_eig + (max_eig - min_eig) * rng.uniform();
  return assert_pd(SymMat(Matrix(q * evals.asDiagonal() * q.transpose())));
}

}  // namespace matvar
