#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "matvar/manova.hpp"
#include "matvar/rng.hpp"

namespace matvar {

struct McConfig {
  std::size_t n_mc = 10000;
  std::uint64_t seed = 0;
  StatisticFunctional functional = StatisticFunctional::HotellingLawley;
  unsigned workers = 1;
  std::size_t block_size = 1000;  // draws per stream; fixed so results ignore `workers`

  static constexpr std::size_t kRecommendedMinDraws = 1000;
};

struct PValueEstimate {
  double p_hat = 1.0;
  double mc_se = 0.0;
  std::size_t n_mc = 0;
  std::size_t n_extreme = 0;

  /// n_extreme / n_mc, without the add-one correction.
  double raw_proportion() const;
  static PValueEstimate from_counts(std::size_t n_extreme, std::size_t n_mc);
};

/// n_mc draws from B_d(dof1/2, dof2/2), reduced to each scalar functional and
/// sorted for tail counting. The draws depend only on (seed, dof1, dof2, d,
/// n_mc, block_size), so factors with equal degrees of freedom share them.
class NullReference {
 public:
  NullReference(double dof1, double dof2, int dim, const McConfig& cfg);

  PValueEstimate p_value(StatisticFunctional f, double observed) const;
  std::size_t size() const { return n_mc_; }
  const std::vector<double>& sorted_values(StatisticFunctional f) const;

 private:
  std::size_t n_mc_;
  std::array<std::vector<double>, 4> values_;
};

PValueEstimate mc_pvalue(double observed, double dof1, double dof2, int dim, const McConfig& cfg);

inline constexpr std::array<double, 3> kCalibrationLevels{0.01, 0.05, 0.10};

struct CalibrationEntry {
  Factor factor;
  std::string method;  // functional name, or "f-test" for d = 1
  std::array<double, 3> rejection_rate{};
  double ks = 0.0;
  double ks_pvalue = 1.0;
  std::vector<double> p_values;
};

struct CalibrationSummary {
  std::size_t n_datasets = 0;
  std::vector<CalibrationEntry> entries;

  const CalibrationEntry& find(Factor f, const std::string& method) const;
};

/// Simulates n_datasets tables from spec and tests all three factors with
/// every functional (plus the F test when d = 1). Dataset r uses
/// rng.derive(r) for the data and seed mix64(cfg.seed, r) for its reference draws.
CalibrationSummary null_calibration(const SimulationSpec& spec, std::size_t n_datasets, const McConfig& cfg,
                                    const RngStream& rng);

}  // namespace matvar
