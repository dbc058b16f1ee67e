#include "cpdual/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cpdual {

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1)
    throw ParseError("bad header in " + path + " (expected: rows cols)");
  Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(in >> a(i, j)))
        throw ParseError("matrix " + path + " ends early at row " + std::to_string(i + 1));
  return a;
}

void save_matrix(const Matrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << a.rows() << " " << a.cols() << "\n";
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out << format_double(a(i, j)) << (j + 1 < a.cols() ? " " : "");
    out << "\n";
  }
}

Vector load_vector(const std::string& path) {
  const Matrix a = load_matrix(path);
  if (a.cols() != 1) throw ParseError("vector file " + path + " must have one column");
  return a.col(0);
}

void save_vector(const Vector& v, const std::string& path) {
  Matrix a(v.size(), 1);
  a.col(0) = v;
  save_matrix(a, path);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace cpdual
