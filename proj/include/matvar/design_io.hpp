#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "matvar/closure.hpp"
#include "matvar/manova.hpp"
#include "matvar/mc_pvalue.hpp"

namespace matvar {

struct RawRecord {
  std::string factor_a;
  std::string factor_b;
  Vector response;
};

struct RawDataset {
  std::vector<std::string> response_names;
  std::vector<RawRecord> rows;
};

/// Long-format CSV: header with factor_a, factor_b and every requested
/// response column (any order, extra columns ignored). Double-quoted fields
/// are supported; labels are only trimmed of surrounding whitespace.
RawDataset load_design_csv(const std::filesystem::path& path, const std::vector<std::string>& response_columns);
RawDataset parse_design_csv(std::istream& in, const std::vector<std::string>& response_columns);

/// Picks n_per_cell rows per (a, b) cell uniformly without replacement.
/// Levels are sorted lexicographically and rows are put in a canonical order
/// first, so the result does not depend on input row order.
DesignTable subsample_balanced(const RawDataset& data, int n_per_cell, std::uint64_t seed);

/// Matrix file: first line d, then d rows of d whitespace-separated reals.
SymMat read_matrix_file(const std::filesystem::path& path);
SymMat parse_matrix(std::istream& in);

struct ReportEntry {
  Factor factor;
  int dof1;
  int dof2;
  std::vector<double> eigenvalues;
  double observed;
  PValueEstimate p;
};

struct UnivariateRow {
  std::string response;
  std::array<FTestResult, 3> tests;
};

struct ReportTable {
  std::array<ReportEntry, 3> entries;
  std::vector<UnivariateRow> univariate;
  StatisticFunctional functional;
  std::size_t n_mc;
  std::uint64_t seed;
  int a;
  int b;
  int n;
  int d;
  std::vector<std::string> response_names;
};

/// SOPs, eigenvalues, scalar statistics and Monte Carlo p-values for A, B and
/// AB, plus one row of variance-component F tests per response column.
ReportTable run_report(const DesignTable& table, const McConfig& cfg, const std::optional<SpdMat>& sigma = {});

std::string format_report(const ReportTable& report);
nlohmann::json report_to_json(const ReportTable& report);

std::string format_verification(const VerificationReport& report);
nlohmann::json verification_to_json(const VerificationReport& report);

std::string format_calibration(const CalibrationSummary& summary);
nlohmann::json calibration_to_json(const CalibrationSummary& summary);

}  // namespace matvar
