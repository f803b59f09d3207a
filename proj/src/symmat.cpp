#include "matvar/symmat.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace matvar {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPsd: return "NotPsd";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::UnsupportedDof: return "UnsupportedDof";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::UnbalancedDesign: return "UnbalancedDesign";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::SingularErrorMatrix: return "SingularErrorMatrix";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnparseableValue: return "UnparseableValue";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::InsufficientCell: return "InsufficientCell";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {
Tolerances g_tolerances;
}  // namespace

const Tolerances& tolerances() { return g_tolerances; }
void set_tolerances(const Tolerances& tol) { g_tolerances = tol; }

SymMat::SymMat(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "symmetric matrix must be square and non-empty, got " + std::to_string(m.rows()) +
                    "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw Error(ErrorCode::DomainError, "matrix has non-finite entries");
  m_ = m.selfadjointView<Eigen::Upper>();
}

SymMat SymMat::zero(Eigen::Index d) { return SymMat(Matrix::Zero(d, d)); }
SymMat SymMat::identity(Eigen::Index d) { return SymMat(Matrix::Identity(d, d)); }
SymMat SymMat::scalar(double v) { return SymMat(Matrix::Constant(1, 1, v)); }
SymMat SymMat::diagonal(const Vector& diag) { return SymMat(Matrix(diag.asDiagonal())); }

SymMat SymMat::operator+(const SymMat& o) const {
  if (dim() != o.dim()) throw Error(ErrorCode::DimensionMismatch, "SymMat addition");
  return SymMat(m_ + o.m_);
}

SymMat SymMat::operator-(const SymMat& o) const {
  if (dim() != o.dim()) throw Error(ErrorCode::DimensionMismatch, "SymMat subtraction");
  return SymMat(m_ - o.m_);
}

SymMat SymMat::operator*(double s) const { return SymMat(m_ * s); }

SymMat symmetrize(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "symmetrize needs a square matrix");
  return SymMat(Matrix(0.5 * (m + m.transpose())));
}

SpdMat SpdMat::from_spectrum(const Vector& evals, const Matrix& evecs) {
  SpdMat out;
  out.evals_ = evals;
  out.evecs_ = evecs;
  out.base_ = SymMat(Matrix(evecs * evals.asDiagonal() * evecs.transpose()));
  const double scale = evals.size() ? evals.cwiseAbs().maxCoeff() : 0.0;
  const bool pd = scale > 0.0 && evals.minCoeff() > tolerances().pd * scale;
  out.kind_ = pd ? Definiteness::PD : Definiteness::PSD;
  return out;
}

SpdMat assert_pd(const SymMat& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.matrix());
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NotPsd, "eigendecomposition failed");
  Vector evals = es.eigenvalues();
  const double scale = evals.cwiseAbs().maxCoeff();
  const double floor = -tolerances().psd * scale;
  if (evals.minCoeff() < floor) {
    throw Error(ErrorCode::NotPsd, "smallest eigenvalue " + std::to_string(evals.minCoeff()) +
                                       " below tolerance " + std::to_string(floor));
  }
  const bool clipped = evals.minCoeff() < 0.0;
  evals = evals.cwiseMax(0.0);
  if (!clipped) {
    // Keep the caller's entries bit-for-bit when nothing was clipped.
    SpdMat out = SpdMat::from_spectrum(evals, es.eigenvectors());
    out.base_ = m;
    return out;
  }
  return SpdMat::from_spectrum(evals, es.eigenvectors());
}

SpdMat assert_strict_pd(const SymMat& m) {
  SpdMat out = assert_pd(m);
  if (!out.is_pd()) throw Error(ErrorCode::NotPsd, "matrix is only positive semidefinite");
  return out;
}

SpdMat SpdMat::identity(Eigen::Index d) { return assert_pd(SymMat::identity(d)); }

SpdMat SpdMat::inverse() const {
  if (!is_pd()) throw Error(ErrorCode::NotPsd, "inverse of a singular PSD matrix");
  return from_spectrum(evals_.cwiseInverse(), evecs_);
}

SpdMat SpdMat::inv_sqrt() const {
  if (!is_pd()) throw Error(ErrorCode::NotPsd, "inverse square root of a singular PSD matrix");
  return from_spectrum(evals_.cwiseSqrt().cwiseInverse(), evecs_);
}

double SpdMat::log_det() const {
  if (!is_pd()) throw Error(ErrorCode::NotPsd, "log-determinant of a singular PSD matrix");
  return evals_.array().log().sum();
}

SpdMat sym_sqrt(const SpdMat& p) { return SpdMat::from_spectrum(p.eigenvalues().cwiseSqrt(), p.eigenvectors()); }

SymMat conjugate(const SymMat& r, const SpdMat& p) {
  if (r.dim() != p.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "conjugate: " + std::to_string(r.dim()) + " vs " + std::to_string(p.dim()));
  }
  const Matrix root = sym_sqrt(p).matrix();
  return SymMat(Matrix(root * r.matrix() * root));
}

double etr(const Matrix& m) { return std::exp(m.trace()); }

MultiGammaArg::MultiGammaArg(double beta, int dim) : beta_(beta), dim_(dim) {
  if (dim < 1) throw Error(ErrorCode::DomainError, "multivariate gamma needs dim >= 1");
  if (!(beta > 0.5 * (dim - 1))) {
    throw Error(ErrorCode::DomainError, "multivariate gamma needs beta > (d-1)/2, got beta=" +
                                            std::to_string(beta) + ", d=" + std::to_string(dim));
  }
}

double log_multivariate_gamma(const MultiGammaArg& arg) {
  const int d = arg.dim();
  double out = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int j = 0; j < d; ++j) out += std::lgamma(arg.beta() - 0.5 * j);
  return out;
}

double multivariate_gamma(const MultiGammaArg& arg) { return std::exp(log_multivariate_gamma(arg)); }

}  // namespace matvar
