#include "matvar/closure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "matvar/stats.hpp"

namespace matvar {

namespace {

constexpr std::uint64_t kHierarchicalTag = 1;
constexpr std::uint64_t kDirectTag = 2;

void check_dims(const MixtureSpec& spec, Eigen::Index d, const char* what) {
  if (spec.dim() != d) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": spec has d=" + std::to_string(spec.dim()) + ", got " + std::to_string(d));
  }
}

}  // namespace

MixtureSpec::MixtureSpec(double dof, SpdMat inner_scale, SpdMat mixing_scale, SpdMat coupling, SpdMat mixing_noncen)
    : dof_(dof),
      inner_(std::move(inner_scale)),
      mixing_(std::move(mixing_scale)),
      coupling_(std::move(coupling)),
      noncen_(std::move(mixing_noncen)) {
  const Eigen::Index d = inner_.dim();
  if (mixing_.dim() != d || coupling_.dim() != d || noncen_.dim() != d) {
    throw Error(ErrorCode::DimensionMismatch, "mixture spec matrices must share one dimension");
  }
  if (!inner_.is_pd() || !mixing_.is_pd() || !coupling_.is_pd()) {
    throw Error(ErrorCode::NotPsd, "inner scale, mixing scale and coupling must be positive definite");
  }
  if (!(dof_ > static_cast<double>(d - 1))) {
    throw Error(ErrorCode::DomainError, "mixture dof must exceed d-1, got " + std::to_string(dof_));
  }
}

WishartParams conjugation_params(const WishartParams& params, const SpdMat& c) {
  if (c.dim() != params.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "conjugation matrix has d=" + std::to_string(c.dim()) +
                                                  ", params have d=" + std::to_string(params.dim()));
  }
  if (!c.is_pd()) throw Error(ErrorCode::NotPsd, "conjugation matrix must be positive definite");
  // C P C = conjugate(P, C^2).
  const Matrix& cm = c.matrix();
  const SymMat scale(Matrix(cm * params.scale().matrix() * cm));
  const SymMat delta(Matrix(cm * params.noncentrality().matrix() * cm));
  return WishartParams(params.dof(), assert_strict_pd(scale), assert_pd(delta));
}

WishartParams mixture_marginal_params(const MixtureSpec& spec) {
  const Eigen::Index d = spec.dim();
  const SymMat sigma_h = conjugate(spec.mixing_scale().sym(), spec.coupling());
  const SymMat delta_h = conjugate(spec.mixing_noncen().sym(), spec.coupling());
  const SymMat v = conjugate(SymMat::identity(d) + sigma_h, spec.inner_scale());
  const SymMat delta_x = conjugate(delta_h, spec.inner_scale());
  return WishartParams(spec.dof(), assert_strict_pd(v), assert_pd(delta_x));
}

WishartParams conditional_params(const MixtureSpec& spec, const SymMat& y) {
  check_dims(spec, y.dim(), "conditional_params");
  // Theta_cond = A^{-1/2} Y_H A^{1/2}, so Delta_cond = A Theta_cond = A^{1/2} Y_H A^{1/2}.
  const SymMat y_h = conjugate(y, spec.coupling());
  return WishartParams(spec.dof(), spec.inner_scale(), assert_pd(conjugate(y_h, spec.inner_scale())));
}

SpdMat sample_hierarchical(const MixtureSpec& spec, RngStream& rng) {
  const WishartParams mixing(spec.dof(), spec.mixing_scale(), spec.mixing_noncen());
  if (std::floor(spec.dof()) != spec.dof() || spec.dof() < static_cast<double>(spec.dim())) {
    throw Error(ErrorCode::UnsupportedDof,
                "hierarchical sampling needs integer dof >= d, got " + std::to_string(spec.dof()));
  }
  const SpdMat y = sample_wishart(mixing, rng);
  return sample_wishart(conditional_params(spec, y.sym()), rng, WishartMethod::OuterProduct);
}

std::vector<SymMat> default_probes(const WishartParams& predicted) {
  const Eigen::Index d = predicted.dim();
  const double lambda_min = predicted.scale().inverse().eigenvalues().minCoeff();
  const double eps = lambda_min / 8.0;
  Matrix e00 = Matrix::Zero(d, d);
  e00(0, 0) = 1.0;
  Matrix e0d = Matrix::Zero(d, d);
  e0d(0, d - 1) = 1.0;
  return {SymMat::zero(d), eps * SymMat::identity(d), -eps * SymMat::identity(d), eps * SymMat(e00),
          -eps * symmetrize(e0d)};
}

VerificationReport verify_against(const MixtureSpec& spec, const WishartParams& predicted, std::size_t n_draws,
                                  const std::vector<SymMat>& probes, const RngStream& rng,
                                  const VerifyOptions& options) {
  const Eigen::Index d = spec.dim();
  check_dims(spec, predicted.dim(), "predicted law");
  std::vector<double> closed_form;
  closed_form.reserve(probes.size());
  for (const SymMat& t : probes) {
    check_dims(spec, t.dim(), "probe");
    closed_form.push_back(wishart_mgf(predicted, t));
  }

  const std::size_t block = std::max<std::size_t>(1, options.block_size);
  const std::size_t n_blocks = (n_draws + block - 1) / block;
  const auto n_entries = static_cast<std::size_t>(d * (d + 1) / 2);
  std::vector<std::vector<double>> hier_entries(n_entries, std::vector<double>(n_draws));
  std::vector<std::vector<double>> direct_entries(n_entries, std::vector<double>(n_draws));
  std::vector<Matrix> block_sums(n_blocks, Matrix::Zero(d, d));
  std::vector<std::vector<double>> block_mgf(n_blocks, std::vector<double>(probes.size(), 0.0));

  for_each_block(n_blocks, options.workers, [&](std::size_t b) {
    RngStream hier_rng = rng.derive(kHierarchicalTag).derive(b);
    RngStream direct_rng = rng.derive(kDirectTag).derive(b);
    const std::size_t begin = b * block;
    const std::size_t end = std::min(n_draws, begin + block);
    for (std::size_t s = begin; s < end; ++s) {
      const Matrix x = sample_hierarchical(spec, hier_rng).matrix();
      const Matrix z = sample_wishart(predicted, direct_rng).matrix();
      block_sums[b] += x;
      for (std::size_t p = 0; p < probes.size(); ++p) block_mgf[b][p] += etr(probes[p].matrix() * x);
      std::size_t e = 0;
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j, ++e) {
          hier_entries[e][s] = x(i, j);
          direct_entries[e][s] = z(i, j);
        }
    }
  });

  VerificationReport report;
  report.n_draws = n_draws;
  Matrix sum = Matrix::Zero(d, d);
  std::vector<double> mgf_sum(probes.size(), 0.0);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    sum += block_sums[b];
    for (std::size_t p = 0; p < probes.size(); ++p) mgf_sum[p] += block_mgf[b][p];
  }
  const double n = static_cast<double>(std::max<std::size_t>(n_draws, 1));
  const Matrix predicted_mean = wishart_mean(predicted).matrix();
  report.mean_rel_err = (sum / n - predicted_mean).norm() / predicted_mean.norm();
  for (std::size_t p = 0; p < probes.size(); ++p) {
    report.mgf_rel_errs.push_back(std::abs(mgf_sum[p] / n - closed_form[p]) / closed_form[p]);
  }
  for (std::size_t e = 0; e < n_entries; ++e) report.ks_stats.push_back(ks_two_sample(hier_entries[e], direct_entries[e]));

  const auto& thr = options.thresholds;
  report.pass = n_draws >= thr.min_draws && report.mean_rel_err < thr.mean_rel &&
                std::all_of(report.mgf_rel_errs.begin(), report.mgf_rel_errs.end(),
                            [&](double v) { return v < thr.mgf_rel; }) &&
                std::all_of(report.ks_stats.begin(), report.ks_stats.end(), [&](double v) { return v < thr.ks; });
  return report;
}

VerificationReport verify_closure(const MixtureSpec& spec, std::size_t n_draws, const std::vector<SymMat>& probes,
                                  const RngStream& rng, const VerifyOptions& options) {
  return verify_against(spec, mixture_marginal_params(spec), n_draws, probes, rng, options);
}

MixtureSpec random_mixture_spec(Eigen::Index d, double dof, bool central, RngStream& rng) {
  SpdMat a = random_spd(d, rng, 0.5, 2.0);
  SpdMat sigma = random_spd(d, rng, 0.5, 2.0);
  SpdMat h = random_spd(d, rng, 0.5, 2.0);
  SpdMat delta = central ? assert_pd(SymMat::zero(d)) : random_spd(d, rng, 0.0, 2.0);
  return MixtureSpec(dof, std::move(a), std::move(sigma), std::move(h), std::move(delta));
}

}  // namespace matvar
