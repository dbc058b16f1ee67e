#pragma once

#include <string>

#include "cpdual/types.hpp"

namespace cpdual {

// Whitespace-delimited text: first line "rows cols", then one row per line.
Matrix load_matrix(const std::string& path);
void save_matrix(const Matrix& a, const std::string& path);

// Vectors are stored as single-column matrices.
Vector load_vector(const std::string& path);
void save_vector(const Vector& v, const std::string& path);

std::string format_double(double v);

}  // namespace cpdual
