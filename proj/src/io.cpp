#include "hetgrad/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace hetgrad {

std::string format_number(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    return out;
}

}  // namespace

void write_gridfunction_csv(const std::string& path, const GridFunction& u, std::uint64_t seed) {
    const Grid& g = *u.grid;
    auto out = open_out(path);
    out << "# seed=" << seed << "\n";
    out << (g.n() == 1 ? "x" : "x,y");
    for (int c = 0; c < u.components; ++c) out << (u.components == 1 ? ",u" : ",u" + std::to_string(c));
    out << "\n";
    for (int i = 0; i < g.node_count(); ++i) {
        const auto x = g.coord(i);
        out << format_number(x[0]);
        if (g.n() == 2) out << "," << format_number(x[1]);
        for (int c = 0; c < u.components; ++c) out << "," << format_number(u.at(i, c));
        out << "\n";
    }
}

GridFunction read_gridfunction_csv(const std::string& path, std::shared_ptr<const Grid> grid) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("'" + path + "': bad number '" + cell + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    const int nodes = grid->node_count(), n = grid->n();
    if (static_cast<int>(rows.size()) != nodes)
        throw IoError("'" + path + "': expected " + std::to_string(nodes) + " rows, found " + std::to_string(rows.size()));
    const int comps = static_cast<int>(rows.front().size()) - n;
    if (comps < 1) throw IoError("'" + path + "': no value column");
    Eigen::VectorXd v(comps * nodes);
    for (int i = 0; i < nodes; ++i) {
        if (static_cast<int>(rows[i].size()) != n + comps) throw IoError("'" + path + "': ragged row");
        const auto x = grid->coord(i);
        for (int a = 0; a < n; ++a)
            if (std::abs(rows[i][a] - x[a]) > 1e-9 * (1.0 + std::abs(x[a])))
                throw IoError("'" + path + "': coordinates do not match the grid");
        for (int c = 0; c < comps; ++c) v[c * nodes + i] = rows[i][n + c];
    }
    return GridFunction(std::move(grid), comps, std::move(v));
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows, std::uint64_t seed, int digits) {
    auto out = open_out(path);
    out << "# seed=" << seed << "\n";
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << "\n";
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << format_number(r[k], digits);
        out << "\n";
    }
}

void write_matrix_market(const std::string& path, const SpMat& m, std::uint64_t seed) {
    auto out = open_out(path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << "% seed=" << seed << "\n";
    out << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
    for (Eigen::Index r = 0; r < m.outerSize(); ++r)
        for (SpMat::InnerIterator it(m, r); it; ++it)
            out << it.row() + 1 << " " << it.col() + 1 << " " << format_number(it.value()) << "\n";
}

void write_json(const std::string& path, const nlohmann::json& j) {
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

}  // namespace hetgrad
