#include "matvar/mc_pvalue.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "matvar/distributions.hpp"
#include "matvar/stats.hpp"

namespace matvar {

namespace {

std::uint64_t reference_tag(double dof1, double dof2, int dim) {
  return mix64(mix64(std::bit_cast<std::uint64_t>(dof1), std::bit_cast<std::uint64_t>(dof2)),
               static_cast<std::uint64_t>(dim));
}

std::size_t functional_slot(StatisticFunctional f) { return static_cast<std::size_t>(f); }

}  // namespace

double PValueEstimate::raw_proportion() const {
  return n_mc == 0 ? 1.0 : static_cast<double>(n_extreme) / static_cast<double>(n_mc);
}

PValueEstimate PValueEstimate::from_counts(std::size_t n_extreme, std::size_t n_mc) {
  PValueEstimate out;
  out.n_mc = n_mc;
  out.n_extreme = n_extreme;
  out.p_hat = (1.0 + static_cast<double>(n_extreme)) / (1.0 + static_cast<double>(n_mc));
  out.mc_se = n_mc == 0 ? 0.0 : std::sqrt(out.p_hat * (1.0 - out.p_hat) / static_cast<double>(n_mc));
  return out;
}

NullReference::NullReference(double dof1, double dof2, int dim, const McConfig& cfg) : n_mc_(cfg.n_mc) {
  const BetaIIParams params(dof1, dof2, dim);
  if (cfg.n_mc == 0) throw Error(ErrorCode::DomainError, "n_mc must be positive");
  const std::size_t block = std::max<std::size_t>(1, cfg.block_size);
  const std::size_t n_blocks = (n_mc_ + block - 1) / block;
  const std::uint64_t tag = reference_tag(dof1, dof2, dim);
  for (auto& v : values_) v.resize(n_mc_);

  for_each_block(n_blocks, cfg.workers, [&](std::size_t b) {
    RngStream rng(cfg.seed, mix64(tag, b));
    const std::size_t end = std::min(n_mc_, (b + 1) * block);
    for (std::size_t s = b * block; s < end; ++s) {
      const SpdMat draw = sample_beta2(params, rng);
      std::vector<double> eigs(draw.eigenvalues().data(), draw.eigenvalues().data() + draw.eigenvalues().size());
      for (StatisticFunctional f : kFunctionals) values_[functional_slot(f)][s] = scalar_statistic(eigs, f);
    }
  });
  for (auto& v : values_) std::sort(v.begin(), v.end());
}

const std::vector<double>& NullReference::sorted_values(StatisticFunctional f) const {
  return values_[functional_slot(f)];
}

PValueEstimate NullReference::p_value(StatisticFunctional f, double observed) const {
  const auto& v = sorted_values(f);
  // Ties count as extreme.
  const std::size_t extreme = rejects_lower_tail(f)
                                  ? static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), observed) - v.begin())
                                  : static_cast<std::size_t>(v.end() - std::lower_bound(v.begin(), v.end(), observed));
  return PValueEstimate::from_counts(extreme, n_mc_);
}

PValueEstimate mc_pvalue(double observed, double dof1, double dof2, int dim, const McConfig& cfg) {
  return NullReference(dof1, dof2, dim, cfg).p_value(cfg.functional, observed);
}

const CalibrationEntry& CalibrationSummary::find(Factor f, const std::string& method) const {
  for (const auto& e : entries)
    if (e.factor == f && e.method == method) return e;
  throw Error(ErrorCode::InvalidSpec, std::string("no calibration entry for ") + to_string(f) + "/" + method);
}

CalibrationSummary null_calibration(const SimulationSpec& spec, std::size_t n_datasets, const McConfig& cfg,
                                    const RngStream& rng) {
  spec.validate();
  CalibrationSummary summary;
  summary.n_datasets = n_datasets;
  if (n_datasets == 0) return summary;

  const int d = spec.dim();
  const DegreesOfFreedom dof = dof_map(spec.a, spec.b, spec.n);
  for (Factor f : kFactors) {
    if (dof.of(f) <= d - 1 || dof.error <= d - 1) {
      throw Error(ErrorCode::DegenerateDesign, std::string("factor ") + to_string(f) + " has dof " +
                                                   std::to_string(dof.of(f)) + " (error " + std::to_string(dof.error) +
                                                   "), need both > d-1 = " + std::to_string(d - 1));
    }
  }
  std::vector<std::string> methods;
  for (StatisticFunctional f : kFunctionals) methods.emplace_back(to_string(f));
  if (d == 1) methods.emplace_back("f-test");

  // p[dataset][factor][method]
  std::vector<std::array<std::vector<double>, 3>> p(n_datasets);
  McConfig inner = cfg;
  inner.workers = 1;
  for_each_block(n_datasets, cfg.workers, [&](std::size_t r) {
    RngStream data_rng = rng.derive(r);
    const DesignTable table = simulate_design(spec, data_rng);
    const SopDecomposition sop = compute_sop(table);
    McConfig local = inner;
    local.seed = mix64(cfg.seed, r);
    std::map<std::pair<int, int>, NullReference> cache;
    for (std::size_t fi = 0; fi < kFactors.size(); ++fi) {
      const Factor factor = kFactors[fi];
      const int dof1 = dof.of(factor);
      const std::vector<double> eigs = test_statistic_eigs(numerator(sop, factor), sop.sop_e, SpdMat::identity(d));
      auto it = cache.find({dof1, dof.error});
      if (it == cache.end()) it = cache.emplace(std::pair{dof1, dof.error}, NullReference(dof1, dof.error, d, local)).first;
      for (StatisticFunctional f : kFunctionals) p[r][fi].push_back(it->second.p_value(f, scalar_statistic(eigs, f)).p_hat);
      if (d == 1) p[r][fi].push_back(univariate_f_test(table, factor).p);
    }
  });

  for (std::size_t fi = 0; fi < kFactors.size(); ++fi) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      CalibrationEntry entry{kFactors[fi], methods[m]};
      entry.p_values.reserve(n_datasets);
      for (std::size_t r = 0; r < n_datasets; ++r) entry.p_values.push_back(p[r][fi][m]);
      for (std::size_t l = 0; l < kCalibrationLevels.size(); ++l) {
        const auto hits = std::count_if(entry.p_values.begin(), entry.p_values.end(),
                                        [&](double v) { return v <= kCalibrationLevels[l]; });
        entry.rejection_rate[l] = static_cast<double>(hits) / static_cast<double>(n_datasets);
      }
      entry.ks = ks_uniform(entry.p_values);
      entry.ks_pvalue = ks_one_sample_pvalue(entry.ks, n_datasets);
      summary.entries.push_back(std::move(entry));
    }
  }
  return summary;
}

}  // namespace matvar
