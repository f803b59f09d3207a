#include "matvar/design_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace matvar {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool parse_real(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::string fixed4(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

nlohmann::json p_to_json(const PValueEstimate& p) {
  return {{"p_hat", p.p_hat},
          {"mc_se", p.mc_se},
          {"n_mc", p.n_mc},
          {"n_extreme", p.n_extreme},
          {"raw_proportion", p.raw_proportion()}};
}

}  // namespace

RawDataset parse_design_csv(std::istream& in, const std::vector<std::string>& response_columns) {
  if (response_columns.empty()) throw Error(ErrorCode::MissingColumn, "at least one response column is required");
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw Error(ErrorCode::EmptyFile, "no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const std::vector<std::string> header = split_csv_line(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t col_a = column("factor_a");
  const std::size_t col_b = column("factor_b");
  std::vector<std::size_t> col_y;
  for (const auto& name : response_columns) col_y.push_back(column(name));

  RawDataset data;
  data.response_names = response_columns;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() < header.size()) {
      throw Error(ErrorCode::UnparseableValue, "line " + std::to_string(line_no) + " has " +
                                                   std::to_string(fields.size()) + " fields, header has " +
                                                   std::to_string(header.size()));
    }
    RawRecord rec{fields[col_a], fields[col_b], Vector(static_cast<Eigen::Index>(col_y.size()))};
    for (std::size_t c = 0; c < col_y.size(); ++c) {
      double v = 0.0;
      if (!parse_real(fields[col_y[c]], v)) {
        throw Error(ErrorCode::UnparseableValue, "line " + std::to_string(line_no) + ", column '" +
                                                     response_columns[c] + "': '" + fields[col_y[c]] + "'");
      }
      rec.response(static_cast<Eigen::Index>(c)) = v;
    }
    data.rows.push_back(std::move(rec));
  }
  if (data.rows.empty()) throw Error(ErrorCode::EmptyFile, "no data rows after the header");
  return data;
}

RawDataset load_design_csv(const std::filesystem::path& path, const std::vector<std::string>& response_columns) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_design_csv(in, response_columns);
}

DesignTable subsample_balanced(const RawDataset& data, int n_per_cell, std::uint64_t seed) {
  if (n_per_cell < 1) throw Error(ErrorCode::InvalidSpec, "n_per_cell must be positive");
  if (data.rows.empty()) throw Error(ErrorCode::EmptyFile, "dataset has no rows");
  const std::set<std::string> set_a = [&] {
    std::set<std::string> s;
    for (const auto& r : data.rows) s.insert(r.factor_a);
    return s;
  }();
  const std::set<std::string> set_b = [&] {
    std::set<std::string> s;
    for (const auto& r : data.rows) s.insert(r.factor_b);
    return s;
  }();
  const std::vector<std::string> labels_a(set_a.begin(), set_a.end());
  const std::vector<std::string> labels_b(set_b.begin(), set_b.end());
  const int a = static_cast<int>(labels_a.size());
  const int b = static_cast<int>(labels_b.size());
  const Eigen::Index d = static_cast<Eigen::Index>(data.response_names.size());

  std::vector<std::size_t> order(data.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const RawRecord& rx = data.rows[x];
    const RawRecord& ry = data.rows[y];
    if (rx.factor_a != ry.factor_a) return rx.factor_a < ry.factor_a;
    if (rx.factor_b != ry.factor_b) return rx.factor_b < ry.factor_b;
    return std::lexicographical_compare(rx.response.data(), rx.response.data() + rx.response.size(),
                                        ry.response.data(), ry.response.data() + ry.response.size());
  });

  // Cells hold ranks in the canonical order, not file positions.
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> cells;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const RawRecord& r = data.rows[order[rank]];
    cells[{r.factor_a, r.factor_b}].push_back(rank);
  }

  RngStream rng(seed, 0);
  Matrix y(static_cast<Eigen::Index>(a) * b * n_per_cell, d);
  DesignTable shape(a, b, n_per_cell, Matrix::Zero(y.rows(), d));
  for (int i = 0; i < a; ++i) {
    for (int j = 0; j < b; ++j) {
      const auto it = cells.find({labels_a[i], labels_b[j]});
      std::vector<std::size_t> members = it == cells.end() ? std::vector<std::size_t>{} : it->second;
      if (members.size() < static_cast<std::size_t>(n_per_cell)) {
        throw Error(ErrorCode::InsufficientCell, "cell (" + labels_a[i] + ", " + labels_b[j] + ") has " +
                                                     std::to_string(members.size()) + " rows, need " +
                                                     std::to_string(n_per_cell));
      }
      for (int k = 0; k < n_per_cell; ++k) {
        const std::size_t pick = static_cast<std::size_t>(k) + rng.index(members.size() - static_cast<std::size_t>(k));
        std::swap(members[static_cast<std::size_t>(k)], members[pick]);
      }
      std::sort(members.begin(), members.begin() + n_per_cell);
      for (int k = 0; k < n_per_cell; ++k) y.row(shape.row(i, j, k)) = data.rows[order[members[k]]].response.transpose();
    }
  }
  DesignTable table(a, b, n_per_cell, std::move(y));
  table.labels_a = labels_a;
  table.labels_b = labels_b;
  table.response_names = data.response_names;
  return table;
}

SymMat parse_matrix(std::istream& in) {
  long long d = 0;
  if (!(in >> d) || d < 1) throw Error(ErrorCode::UnparseableValue, "matrix file must start with a positive dimension");
  Matrix m(d, d);
  for (long long i = 0; i < d; ++i)
    for (long long j = 0; j < d; ++j) {
      std::string token;
      double v = 0.0;
      if (!(in >> token) || !parse_real(token, v)) {
        throw Error(ErrorCode::UnparseableValue, "matrix entry (" + std::to_string(i + 1) + ", " +
                                                     std::to_string(j + 1) + ") missing or not a finite real");
      }
      m(i, j) = v;
    }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::InvalidSpec, "matrix is not symmetric");
  }
  return SymMat(m);
}

SymMat read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_matrix(in);
}

ReportTable run_report(const DesignTable& table, const McConfig& cfg, const std::optional<SpdMat>& sigma) {
  const int d = table.dim();
  const DegreesOfFreedom dof = dof_map(table.levels_a(), table.levels_b(), table.reps());
  for (Factor f : kFactors) {
    if (dof.of(f) <= d - 1) {
      throw Error(ErrorCode::DegenerateDesign, std::string("factor ") + to_string(f) + " has " +
                                                   std::to_string(dof.of(f)) + " degrees of freedom; need more than d-1 = " +
                                                   std::to_string(d - 1));
    }
  }
  if (dof.error <= d - 1) {
    throw Error(ErrorCode::DegenerateDesign, "error degrees of freedom ab(n-1) = " + std::to_string(dof.error) +
                                                 " must exceed d-1 = " + std::to_string(d - 1));
  }
  const SpdMat scale = sigma ? *sigma : SpdMat::identity(d);
  if (scale.dim() != d) throw Error(ErrorCode::DimensionMismatch, "sigma dimension does not match the responses");
  if (!scale.is_pd()) throw Error(ErrorCode::NotPsd, "sigma must be positive definite");

  const SopDecomposition sop = compute_sop(table);
  ReportTable report{};
  report.functional = cfg.functional;
  report.n_mc = cfg.n_mc;
  report.seed = cfg.seed;
  report.a = table.levels_a();
  report.b = table.levels_b();
  report.n = table.reps();
  report.d = d;
  report.response_names = table.response_names;
  if (report.response_names.size() != static_cast<std::size_t>(d)) {
    report.response_names.clear();
    for (int c = 0; c < d; ++c) report.response_names.push_back("y" + std::to_string(c + 1));
  }

  std::map<std::pair<int, int>, NullReference> references;
  for (std::size_t fi = 0; fi < kFactors.size(); ++fi) {
    const Factor f = kFactors[fi];
    ReportEntry& e = report.entries[fi];
    e.factor = f;
    e.dof1 = dof.of(f);
    e.dof2 = dof.error;
    e.eigenvalues = test_statistic_eigs(numerator(sop, f), sop.sop_e, scale);
    e.observed = scalar_statistic(e.eigenvalues, cfg.functional);
    auto it = references.find({e.dof1, e.dof2});
    if (it == references.end()) it = references.emplace(std::pair{e.dof1, e.dof2}, NullReference(e.dof1, e.dof2, d, cfg)).first;
    e.p = it->second.p_value(cfg.functional, e.observed);
  }
  for (int c = 0; c < d; ++c) {
    const DesignTable col = table.column(c);
    UnivariateRow row{report.response_names[static_cast<std::size_t>(c)], {}};
    for (std::size_t fi = 0; fi < kFactors.size(); ++fi) row.tests[fi] = univariate_f_test(col, kFactors[fi]);
    report.univariate.push_back(std::move(row));
  }
  return report;
}

std::string format_report(const ReportTable& r) {
  std::ostringstream os;
  os << "Balanced design: A (a=" << r.a << ") x B (b=" << r.b << "), n=" << r.n << " per cell (N=" << r.a * r.b * r.n
     << ", d=" << r.d << ")\n";
  os << "Functional: " << to_string(r.functional) << "   Monte Carlo draws: " << r.n_mc << "   seed: " << r.seed
     << "\n\n";
  std::vector<std::pair<std::string, std::array<double, 3>>> lines;
  lines.push_back({"Beta Type II MANOVA on (" + join(r.response_names, ", ") + ")",
                   {r.entries[0].p.p_hat, r.entries[1].p.p_hat, r.entries[2].p.p_hat}});
  for (const auto& u : r.univariate) {
    lines.push_back({"Variance-component F test on " + u.response, {u.tests[0].p, u.tests[1].p, u.tests[2].p}});
  }
  std::size_t width = 0;
  for (const auto& l : lines) width = std::max(width, l.first.size());
  os << std::left << std::setw(static_cast<int>(width)) << "" << std::right << std::setw(9) << "p_A" << std::setw(9)
     << "p_B" << std::setw(9) << "p_AB" << "\n";
  for (const auto& [label, p] : lines) {
    os << std::left << std::setw(static_cast<int>(width)) << label << std::right;
    for (double v : p) os << std::setw(9) << fixed4(v);
    os << "\n";
  }
  os << "\nObserved statistics\n";
  for (const auto& e : r.entries) {
    os << "  " << std::left << std::setw(3) << to_string(e.factor) << std::right << "dof=(" << e.dof1 << ", " << e.dof2
       << ")  statistic=" << std::setprecision(6) << e.observed << "  eigenvalues=[";
    for (std::size_t i = 0; i < e.eigenvalues.size(); ++i) os << (i ? ", " : "") << e.eigenvalues[i];
    os << "]  n_extreme=" << e.p.n_extreme << "  mc_se=" << fixed4(e.p.mc_se) << "\n";
  }
  return os.str();
}

nlohmann::json report_to_json(const ReportTable& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"name", to_string(e.factor)},
                       {"observed", e.observed},
                       {"dof1", e.dof1},
                       {"dof2", e.dof2},
                       {"eigenvalues", e.eigenvalues},
                       {"p", p_to_json(e.p)}});
  }
  nlohmann::json univariate = nlohmann::json::array();
  for (const auto& u : r.univariate) {
    nlohmann::json tests = nlohmann::json::array();
    for (std::size_t fi = 0; fi < kFactors.size(); ++fi) {
      tests.push_back({{"name", to_string(kFactors[fi])}, {"F", u.tests[fi].f}, {"p", u.tests[fi].p}});
    }
    univariate.push_back({{"response", u.response}, {"tests", tests}});
  }
  return {{"config",
           {{"functional", to_string(r.functional)},
            {"n_mc", r.n_mc},
            {"seed", r.seed},
            {"a", r.a},
            {"b", r.b},
            {"n", r.n},
            {"d", r.d},
            {"responses", r.response_names}}},
          {"entries", entries},
          {"univariate", univariate}};
}

std::string format_verification(const VerificationReport& r) {
  std::ostringstream os;
  os << std::setprecision(4);
  os << "draws: " << r.n_draws << "\n";
  os << "mean relative error: " << r.mean_rel_err << "\n";
  os << "MGF relative errors:";
  for (double v : r.mgf_rel_errs) os << " " << v;
  os << "\nKS distances:";
  for (double v : r.ks_stats) os << " " << v;
  os << "\nresult: " << (r.pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

nlohmann::json verification_to_json(const VerificationReport& r) {
  return {{"mean_rel_err", r.mean_rel_err},
          {"mgf_rel_errs", r.mgf_rel_errs},
          {"ks_stats", r.ks_stats},
          {"n_draws", r.n_draws},
          {"pass", r.pass}};
}

std::string format_calibration(const CalibrationSummary& s) {
  std::ostringstream os;
  os << "datasets: " << s.n_datasets << "\n";
  if (s.entries.empty()) return os.str();
  os << std::left << std::setw(8) << "factor" << std::setw(18) << "method" << std::right;
  for (double level : kCalibrationLevels) os << std::setw(10) << ("rej@" + fixed4(level).substr(0, 4));
  os << std::setw(10) << "KS" << std::setw(10) << "KS p" << "\n";
  for (const auto& e : s.entries) {
    os << std::left << std::setw(8) << to_string(e.factor) << std::setw(18) << e.method << std::right;
    for (double v : e.rejection_rate) os << std::setw(10) << fixed4(v);
    os << std::setw(10) << fixed4(e.ks) << std::setw(10) << fixed4(e.ks_pvalue) << "\n";
  }
  return os.str();
}

nlohmann::json calibration_to_json(const CalibrationSummary& s) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : s.entries) {
    entries.push_back({{"factor", to_string(e.factor)},
                       {"method", e.method},
                       {"levels", kCalibrationLevels},
                       {"rejection_rate", e.rejection_rate},
                       {"ks", e.ks},
                       {"ks_pvalue", e.ks_pvalue}});
  }
  return {{"n_datasets", s.n_datasets}, {"entries", entries}};
}

}  // namespace matvar
