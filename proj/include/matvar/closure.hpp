#pragma once

#include <cstdint>
#include <vector>

#include "matvar/distributions.hpp"

namespace matvar {

/// Hierarchical model
///   Y ~ W_d(dof, mixing_scale, mixing_scale^{-1} mixing_noncen)
///   X | Y ~ W_d(dof, inner_scale, A^{-1/2} Y_H A^{1/2})
/// with A = inner_scale, H = coupling and Y_H = H^{1/2} Y H^{1/2}.
class MixtureSpec {
 public:
  MixtureSpec(double dof, SpdMat inner_scale, SpdMat mixing_scale, SpdMat coupling, SpdMat mixing_noncen);

  double dof() const { return dof_; }
  const SpdMat& inner_scale() const { return inner_; }
  const SpdMat& mixing_scale() const { return mixing_; }
  const SpdMat& coupling() const { return coupling_; }
  const SpdMat& mixing_noncen() const { return noncen_; }
  Eigen::Index dim() const { return inner_.dim(); }

 private:
  double dof_;
  SpdMat inner_;
  SpdMat mixing_;
  SpdMat coupling_;
  SpdMat noncen_;
};

/// Law of C X C for X ~ W_d(dof, Sigma, Theta): W_d(dof, C Sigma C, C^{-1} Theta C),
/// which in Delta form is (dof, C Sigma C, C Delta C).
WishartParams conjugation_params(const WishartParams& params, const SpdMat& c);

/// Marginal law of X: W_d(dof, V, V^{-1} A^{1/2} Delta_H A^{1/2}) with
/// V = A^{1/2}(I + Sigma_H)A^{1/2}. Returned in Delta form, so the
/// noncentrality is A^{1/2} Delta_H A^{1/2}.
WishartParams mixture_marginal_params(const MixtureSpec& spec);

/// Draws Y, then X | Y. Requires integer dof >= d.
SpdMat sample_hierarchical(const MixtureSpec& spec, RngStream& rng);

/// Conditional law of X given Y = y, in Delta form.
WishartParams conditional_params(const MixtureSpec& spec, const SymMat& y);

struct VerificationThresholds {
  double mean_rel = 0.01;
  double mgf_rel = 0.02;
  double ks = 0.015;
  std::size_t min_draws = 10000;
};

struct VerificationReport {
  double mean_rel_err = 0.0;
  std::vector<double> mgf_rel_errs;
  std::vector<double> ks_stats;  // upper-triangle entries in row-major order
  std::size_t n_draws = 0;
  bool pass = false;
};

/// {0, +eps I, -eps I, eps E_00, -eps sym(E_0,d-1)} with eps = lambda_min(V^{-1}) / 8,
/// so V^{-1} - 2T keeps at least 0.75 lambda_min and V^{-1} - 4T stays PD.
std::vector<SymMat> default_probes(const WishartParams& predicted);

struct VerifyOptions {
  VerificationThresholds thresholds{};
  unsigned workers = 1;
  std::size_t block_size = 10000;
};

/// Compares hierarchical draws of spec against mixture_marginal_params(spec).
VerificationReport verify_closure(const MixtureSpec& spec, std::size_t n_draws, const std::vector<SymMat>& probes,
                                  const RngStream& rng, const VerifyOptions& options = {});

/// Same battery against an arbitrary predicted law (used for negative controls).
VerificationReport verify_against(const MixtureSpec& spec, const WishartParams& predicted, std::size_t n_draws,
                                  const std::vector<SymMat>& probes, const RngStream& rng,
                                  const VerifyOptions& options = {});

/// Random spec with A, Sigma_mix, H eigenvalues in [0.5, 2] and, unless
/// central, Delta eigenvalues in [0, 2].
MixtureSpec random_mixture_spec(Eigen::Index d, double dof, bool central, RngStream& rng);

}  // namespace matvar
