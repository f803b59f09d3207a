#include "matvar/sample_params.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

namespace matvar {

namespace {

const std::set<std::string> kScalarKeys{"dof", "dof1", "dof2", "dim", "noncen"};
const std::set<std::string> kSymmetricKeys{"scale", "noncentrality"};
const std::string kMeanKey = "mean";

double to_real(const std::string& token, const std::string& context) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::UnparseableValue, context + ": '" + token + "' is not a finite real");
  }
  return v;
}

/// Whitespace-separated tokens with '#' comments removed.
std::vector<std::string> tokenize(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  return tokens;
}

}  // namespace

double SampleParams::scalar(const std::string& key) const {
  const auto it = scalars.find(key);
  if (it == scalars.end()) throw Error(ErrorCode::InvalidSpec, "parameter '" + key + "' missing");
  return it->second;
}

const Matrix& SampleParams::matrix(const std::string& key) const {
  const auto it = matrices.find(key);
  if (it == matrices.end()) throw Error(ErrorCode::InvalidSpec, "parameter block '" + key + "' missing");
  return it->second;
}

SampleParams parse_sample_params(std::istream& in) {
  const std::vector<std::string> tokens = tokenize(in);
  SampleParams params;
  std::size_t pos = 0;
  auto next = [&](const std::string& context) -> const std::string& {
    if (pos >= tokens.size()) throw Error(ErrorCode::UnparseableValue, context + ": unexpected end of file");
    return tokens[pos++];
  };
  auto read_block = [&](const std::string& key, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = to_real(next(key), key);
    return m;
  };
  auto read_size = [&](const std::string& key) {
    const double v = to_real(next(key), key);
    if (v < 1 || std::floor(v) != v) throw Error(ErrorCode::UnparseableValue, key + ": dimension must be a positive integer");
    return static_cast<Eigen::Index>(v);
  };

  while (pos < tokens.size()) {
    const std::string key = tokens[pos++];
    if (kScalarKeys.count(key)) {
      params.scalars[key] = to_real(next(key), key);
    } else if (kSymmetricKeys.count(key)) {
      const Eigen::Index d = read_size(key);
      Matrix m = read_block(key, d, d);
      const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error(ErrorCode::InvalidSpec, key + " is not symmetric");
      }
      params.matrices[key] = std::move(m);
    } else if (key == kMeanKey) {
      const Eigen::Index rows = read_size(key);
      const Eigen::Index cols = read_size(key);
      params.matrices[key] = read_block(key, rows, cols);
    } else {
      throw Error(ErrorCode::InvalidSpec, "unknown parameter '" + key + "'");
    }
  }
  return params;
}

SampleParams read_sample_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_sample_params(in);
}

}  // namespace matvar
