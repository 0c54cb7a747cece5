#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "hetgrad/geometry.hpp"
#include "hetgrad/operators.hpp"

namespace hetgrad {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shortest form with the given significant digits ("%.*g").
std::string format_number(double v, int digits = 17);

// Node coordinates followed by one column per component.
void write_gridfunction_csv(const std::string& path, const GridFunction& u, std::uint64_t seed);
GridFunction read_gridfunction_csv(const std::string& path, std::shared_ptr<const Grid> grid);

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows, std::uint64_t seed, int digits = 17);

void write_matrix_market(const std::string& path, const SpMat& m, std::uint64_t seed);

void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace hetgrad
