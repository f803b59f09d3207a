#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "matvar/symmat.hpp"

namespace matvar {

/// Parameters for `matvar sample`, read from a keyword file:
///
///   # comment
///   dof 5
///   scale            <- followed by a matrix block (d, then d rows)
///   2
///   2 1
///   1 2
///   mean             <- rectangular block: "rows cols", then the rows
///   3 2
///   ...
///
/// Scalar keys: dof, dof1, dof2, dim, noncen. Symmetric matrix keys: scale,
/// noncentrality. Rectangular key: mean.
struct SampleParams {
  std::map<std::string, double> scalars;
  std::map<std::string, Matrix> matrices;

  double scalar(const std::string& key) const;
  bool has_scalar(const std::string& key) const { return scalars.count(key) != 0; }
  const Matrix& matrix(const std::string& key) const;
  bool has_matrix(const std::string& key) const { return matrices.count(key) != 0; }
};

SampleParams parse_sample_params(std::istream& in);
SampleParams read_sample_params(const std::filesystem::path& path);

}  // namespace matvar
