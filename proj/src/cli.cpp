#include "matvar/cli.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "matvar/closure.hpp"
#include "matvar/design_io.hpp"
#include "matvar/distributions.hpp"
#include "matvar/sample_params.hpp"

namespace matvar {

namespace {

void write_json(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << doc.dump(2) << "\n";
}

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    const auto first = cur.find_first_not_of(" \t");
    const auto last = cur.find_last_not_of(" \t");
    if (first != std::string::npos) out.push_back(cur.substr(first, last - first + 1));
  }
  return out;
}

struct ManovaArgs {
  std::string input;
  std::string responses;
  int n_per_cell = 0;
  std::uint64_t subsample_seed = 0;
  std::size_t n_mc = 10000;
  std::uint64_t mc_seed = 0;
  std::string functional = "hotelling-lawley";
  std::string sigma;
  std::string json;
  unsigned workers = 1;
};

int run_manova(const ManovaArgs& args, std::ostream& out, std::ostream& err) {
  const std::vector<std::string> columns = split_list(args.responses);
  const RawDataset data = load_design_csv(args.input, columns);
  const DesignTable table = subsample_balanced(data, args.n_per_cell, args.subsample_seed);
  McConfig cfg;
  cfg.n_mc = args.n_mc;
  cfg.seed = args.mc_seed;
  cfg.functional = parse_functional(args.functional);
  cfg.workers = args.workers;
  if (cfg.n_mc < McConfig::kRecommendedMinDraws) {
    err << "warning: n-mc = " << cfg.n_mc << " is below the recommended " << McConfig::kRecommendedMinDraws << "\n";
  }
  std::optional<SpdMat> sigma;
  if (!args.sigma.empty()) sigma = assert_strict_pd(read_matrix_file(args.sigma));
  const ReportTable report = run_report(table, cfg, sigma);
  out << format_report(report);
  if (!args.json.empty()) write_json(args.json, report_to_json(report));
  return kExitOk;
}

struct VerifyArgs {
  int dim = 2;
  double dof = 5;
  std::size_t n_draws = 200000;
  std::uint64_t seed = 0;
  bool central = false;
  int specs = 3;
  std::string json;
  unsigned workers = 1;
};

int run_verify(const VerifyArgs& args, std::ostream& out) {
  if (args.dim < 1) throw Error(ErrorCode::DomainError, "--dim must be positive");
  if (args.specs < 1) throw Error(ErrorCode::DomainError, "--specs must be positive");
  bool all_pass = true;
  nlohmann::json reports = nlohmann::json::array();
  for (int s = 0; s < args.specs; ++s) {
    RngStream spec_rng(args.seed, mix64(0x5bec, static_cast<std::uint64_t>(s)));
    const MixtureSpec spec = random_mixture_spec(args.dim, args.dof, args.central, spec_rng);
    const std::vector<SymMat> probes = default_probes(mixture_marginal_params(spec));
    VerifyOptions options;
    options.workers = args.workers;
    const VerificationReport report =
        verify_closure(spec, args.n_draws, probes, RngStream(args.seed, static_cast<std::uint64_t>(s)), options);
    out << "spec " << s + 1 << " of " << args.specs << " (d=" << args.dim << ", dof=" << args.dof
        << (args.central ? ", central mixing" : "") << ")\n"
        << format_verification(report) << "\n";
    all_pass = all_pass && report.pass;
    reports.push_back(verification_to_json(report));
  }
  if (!args.json.empty()) write_json(args.json, {{"pass", all_pass}, {"reports", reports}});
  out << (all_pass ? "closure verified\n" : "closure verification FAILED\n");
  return all_pass ? kExitOk : kExitVerificationFailed;
}

struct SampleArgs {
  std::string dist;
  std::string params;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

void write_upper(std::ostream& out, std::size_t draw, const Matrix& m) {
  out << draw;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i; j < m.cols(); ++j) out << "," << real(m(i, j));
  out << "\n";
}

void upper_header(std::ostream& out, Eigen::Index d) {
  out << "draw";
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) out << ",x_" << i + 1 << "_" << j + 1;
  out << "\n";
}

int run_sample(const SampleArgs& args, std::ostream& out) {
  const SampleParams p = read_sample_params(args.params);
  RngStream rng(args.seed, 0);
  if (args.dist == "matrix-normal") {
    const MatrixNormalParams mn(p.matrix("mean"), assert_strict_pd(SymMat(p.matrix("scale"))));
    out << "draw";
    for (Eigen::Index i = 0; i < mn.rows(); ++i)
      for (Eigen::Index j = 0; j < mn.dim(); ++j) out << ",n_" << i + 1 << "_" << j + 1;
    out << "\n";
    for (std::size_t s = 0; s < args.n; ++s) {
      const Matrix draw = sample_matrix_normal(mn, rng);
      out << s;
      for (Eigen::Index i = 0; i < draw.rows(); ++i)
        for (Eigen::Index j = 0; j < draw.cols(); ++j) out << "," << real(draw(i, j));
      out << "\n";
    }
  } else if (args.dist == "wishart") {
    const SpdMat scale = assert_strict_pd(SymMat(p.matrix("scale")));
    const SpdMat delta = p.has_matrix("noncentrality") ? assert_pd(SymMat(p.matrix("noncentrality")))
                                                       : assert_pd(SymMat::zero(scale.dim()));
    const WishartParams wp(p.scalar("dof"), scale, delta);
    upper_header(out, wp.dim());
    for (std::size_t s = 0; s < args.n; ++s) write_upper(out, s, sample_wishart(wp, rng).matrix());
  } else if (args.dist == "beta2") {
    const double dim = p.scalar("dim");
    const BetaIIParams bp(p.scalar("dof1"), p.scalar("dof2"), static_cast<int>(dim));
    upper_header(out, bp.dim);
    for (std::size_t s = 0; s < args.n; ++s) write_upper(out, s, sample_beta2(bp, rng).matrix());
  } else if (args.dist == "chisq") {
    const double dof = p.scalar("dof");
    const double noncen = p.has_scalar("noncen") ? p.scalar("noncen") : 0.0;
    out << "draw,value\n";
    for (std::size_t s = 0; s < args.n; ++s) out << s << "," << real(sample_noncentral_chisq(dof, noncen, rng)) << "\n";
  } else {
    throw Error(ErrorCode::InvalidSpec, "unknown distribution '" + args.dist + "'");
  }
  return kExitOk;
}

struct CalibrateArgs {
  int a = 5;
  int b = 6;
  int n = 5;
  int dim = 2;
  std::size_t datasets = 500;
  std::size_t n_mc = 2000;
  std::uint64_t seed = 0;
  std::string json;
  unsigned workers = 1;
};

int run_calibrate(const CalibrateArgs& args, std::ostream& out) {
  if (args.dim < 1) throw Error(ErrorCode::DomainError, "--dim must be positive");
  McConfig cfg;
  cfg.n_mc = args.n_mc;
  cfg.seed = args.seed;
  cfg.workers = args.workers;
  const SimulationSpec spec = SimulationSpec::null_model(args.a, args.b, args.n, args.dim);
  const CalibrationSummary summary = null_calibration(spec, args.datasets, cfg, RngStream(args.seed, 1));
  out << format_calibration(summary);
  if (!args.json.empty()) write_json(args.json, calibration_to_json(summary));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Matrix-variate distributions, closure verification and Beta Type II MANOVA"};
  app.require_subcommand(1);

  ManovaArgs manova;
  auto* cmd_manova = app.add_subcommand("manova", "Test A, B and AB effects on a balanced subsample of a CSV file");
  cmd_manova->add_option("--input", manova.input, "Long-format CSV")->required();
  cmd_manova->add_option("--responses", manova.responses, "Comma-separated response columns")->required();
  cmd_manova->add_option("--n-per-cell", manova.n_per_cell, "Rows kept per cell")->required();
  cmd_manova->add_option("--subsample-seed", manova.subsample_seed, "Seed for cell subsampling")->required();
  cmd_manova->add_option("--n-mc", manova.n_mc, "Monte Carlo draws")->capture_default_str();
  cmd_manova->add_option("--mc-seed", manova.mc_seed, "Seed for Monte Carlo draws")->required();
  cmd_manova->add_option("--functional", manova.functional, "wilks | pillai | hotelling-lawley | roy")
      ->capture_default_str();
  cmd_manova->add_option("--sigma", manova.sigma, "Matrix file for the error scale");
  cmd_manova->add_option("--json", manova.json, "Write the structured report here");
  cmd_manova->add_option("--workers", manova.workers, "Worker threads")->capture_default_str();

  VerifyArgs verify;
  auto* cmd_verify = app.add_subcommand("verify", "Monte Carlo check of the Wishart mixture closure on random specs");
  cmd_verify->add_option("--dim", verify.dim)->required();
  cmd_verify->add_option("--dof", verify.dof)->required();
  cmd_verify->add_option("--n-draws", verify.n_draws)->required();
  cmd_verify->add_option("--seed", verify.seed)->required();
  cmd_verify->add_flag("--central", verify.central, "Use a central mixing distribution");
  cmd_verify->add_option("--specs", verify.specs, "Number of random specs")->capture_default_str();
  cmd_verify->add_option("--json", verify.json);
  cmd_verify->add_option("--workers", verify.workers)->capture_default_str();

  SampleArgs sample;
  auto* cmd_sample = app.add_subcommand("sample", "Emit draws as CSV");
  cmd_sample->add_option("--dist", sample.dist, "matrix-normal | wishart | beta2 | chisq")->required();
  cmd_sample->add_option("--params", sample.params, "Parameter file")->required();
  cmd_sample->add_option("--n", sample.n)->required();
  cmd_sample->add_option("--seed", sample.seed)->required();

  CalibrateArgs calibrate;
  auto* cmd_calibrate = app.add_subcommand("calibrate", "Null calibration of the tests on simulated designs");
  cmd_calibrate->add_option("--a", calibrate.a)->required();
  cmd_calibrate->add_option("--b", calibrate.b)->required();
  cmd_calibrate->add_option("--n", calibrate.n)->required();
  cmd_calibrate->add_option("--dim", calibrate.dim)->required();
  cmd_calibrate->add_option("--datasets", calibrate.datasets)->required();
  cmd_calibrate->add_option("--n-mc", calibrate.n_mc)->required();
  cmd_calibrate->add_option("--seed", calibrate.seed)->required();
  cmd_calibrate->add_option("--json", calibrate.json);
  cmd_calibrate->add_option("--workers", calibrate.workers)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (*cmd_manova) return run_manova(manova, out, err);
    if (*cmd_verify) return run_verify(verify, out);
    if (*cmd_sample) return run_sample(sample, out);
    if (*cmd_calibrate) return run_calibrate(calibrate, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace matvar
