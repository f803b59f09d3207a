#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matvar/rng.hpp"
#include "matvar/symmat.hpp"

namespace matvar {

/// Balanced a x b x n layout of d-dimensional responses. Row (i*b + j)*n + k of
/// `responses` holds Y_ijk (zero-based indices).
class DesignTable {
 public:
  DesignTable(int levels_a, int levels_b, int reps, Matrix responses);

  int levels_a() const { return a_; }
  int levels_b() const { return b_; }
  int reps() const { return n_; }
  int dim() const { return static_cast<int>(y_.cols()); }
  Eigen::Index rows() const { return y_.rows(); }
  const Matrix& responses() const { return y_; }

  Eigen::Index row(int i, int j, int k) const { return (static_cast<Eigen::Index>(i) * b_ + j) * n_ + k; }
  auto response(int i, int j, int k) const { return y_.row(row(i, j, k)); }

  /// Single-response view used by the univariate F tests.
  DesignTable column(int c) const;

  std::vector<std::string> labels_a;
  std::vector<std::string> labels_b;
  std::vector<std::string> response_names;

 private:
  int a_;
  int b_;
  int n_;
  Matrix y_;
};

struct SopDecomposition {
  SymMat sop_a;
  SymMat sop_b;
  SymMat sop_ab;
  SymMat sop_e;
  SymMat sop_total;
};

enum class Factor { A, B, AB };
inline constexpr std::array<Factor, 3> kFactors{Factor::A, Factor::B, Factor::AB};
const char* to_string(Factor f);

enum class StatisticFunctional { Wilks, Pillai, HotellingLawley, Roy };
inline constexpr std::array<StatisticFunctional, 4> kFunctionals{
    StatisticFunctional::Wilks, StatisticFunctional::Pillai, StatisticFunctional::HotellingLawley,
    StatisticFunctional::Roy};

/// CLI spelling: wilks, pillai, hotelling-lawley, roy.
const char* to_string(StatisticFunctional f);
StatisticFunctional parse_functional(std::string_view name);

/// Wilks rejects for small values; the others for large values.
inline bool rejects_lower_tail(StatisticFunctional f) { return f == StatisticFunctional::Wilks; }

SopDecomposition compute_sop(const DesignTable& table);

const SymMat& numerator(const SopDecomposition& sop, Factor f);

/// Eigenvalues, sorted descending, of
/// (V_{Sigma^-1})^{-1/2} S_{Sigma^-1} (V_{Sigma^-1})^{-1/2} with V = sop_e.
std::vector<double> test_statistic_eigs(const SymMat& numerator, const SymMat& sop_e, const SpdMat& sigma);

double scalar_statistic(std::span<const double> eigs, StatisticFunctional functional);

struct DegreesOfFreedom {
  int a;
  int b;
  int ab;
  int error;

  int of(Factor f) const;
};

DegreesOfFreedom dof_map(int a, int b, int n);

struct FTestResult {
  double f;
  double p;
};

/// Variance-component F test for d = 1 with SOP_E in the denominator.
FTestResult univariate_f_test(const DesignTable& table, Factor which);

/// Upper tail of the F(dof1, dof2) distribution.
double f_upper_tail(double f, double dof1, double dof2);

enum class EffectMode { None, Random, Fixed };

/// Effect specification for one factor. Random effects use `covariance`;
/// fixed effects use `fixed` (one d-vector per level, as rows).
struct EffectSpec {
  EffectMode mode = EffectMode::None;
  std::optional<SymMat> covariance;
  Matrix fixed;

  static EffectSpec none() { return {}; }
  static EffectSpec random(SymMat cov) { return {EffectMode::Random, std::move(cov), Matrix()}; }
  static EffectSpec fixed_effects(Matrix values) { return {EffectMode::Fixed, std::nullopt, std::move(values)}; }
};

/// Y_ijk = alpha_i + beta_j + (alpha beta)_ij + eps_ijk. Random effects are
/// drawn iid N_d(0, Sigma_.) and then centred so they satisfy the same
/// zero-average constraints as fixed effects. Interaction rows are indexed i*b + j.
struct SimulationSpec {
  int a;
  int b;
  int n;
  SpdMat error_scale;
  EffectSpec effect_a;
  EffectSpec effect_b;
  EffectSpec effect_ab;

  int dim() const { return static_cast<int>(error_scale.dim()); }
  void validate() const;

  static SimulationSpec null_model(int a, int b, int n, int d);
};

DesignTable simulate_design(const SimulationSpec& spec, RngStream& rng);

/// Numerical rank using eigenvalues above 1e-9 * lambda_max.
int numerical_rank(const SymMat& m);

}  // namespace matvar
