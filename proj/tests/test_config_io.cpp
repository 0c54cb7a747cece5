#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hetgrad/config.hpp"
#include "hetgrad/io.hpp"

using namespace hetgrad;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "hetgrad_config_io";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string error_of(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, DefaultsMatchShippedFile) {
    const RunConfig c = parse_config(json{{"version", 1}});
    EXPECT_EQ(c.N, 256);
    EXPECT_EQ(c.kernel.family, Family::fractional);
    EXPECT_EQ(c.kernel.s, 0.5);
    EXPECT_EQ(c.horizon.delta_bar, 0.05);
    EXPECT_EQ(c.domain.type, "interval");
    EXPECT_EQ(c.dim(), 1);
    EXPECT_EQ(c.solver.seed, 20240611u);
}

TEST(Config, RoundTripThroughJson) {
    json j = {{"version", 1},
              {"kernel", {{"family", "log_fractional"}, {"s", 0.4}, {"kappa", 0.7}}},
              {"domain", {{"type", "rectangle"}, {"bounds", {0.0, 2.0, 0.0, 1.0}}}},
              {"N", 17},
              {"horizon", {{"delta_bar", 0.1}, {"profile", "polynomial_fixture"}}},
              {"problem", {{"bc", "dirichlet"}, {"density", "polyconvex_2d"}, {"gamma", {"left", "top"}}}},
              {"solver", {{"seed", 7}, {"threads", 2}}}};
    const RunConfig c = parse_config(j);
    EXPECT_EQ(c.dim(), 2);
    EXPECT_EQ(c.kernel.kappa, 0.7);
    EXPECT_EQ(c.problem.gamma.size(), 2u);
    const RunConfig again = parse_config(c.to_json());
    EXPECT_EQ(again.to_json(), c.to_json());
}

TEST(Config, UnknownKeysNamed) {
    EXPECT_EQ(error_of({{"version", 1}, {"kernel", {{"sigma", 0.5}}}}), "unknown config key 'kernel.sigma'");
    EXPECT_EQ(error_of({{"version", 1}, {"colour", "red"}}), "unknown config key 'colour'");
}

TEST(Config, InvalidValuesNamed) {
    EXPECT_NE(error_of(json::object()).find("version"), std::string::npos);
    EXPECT_NE(error_of({{"version", 2}}).find("version"), std::string::npos);
    EXPECT_NE(error_of({{"version", 1}, {"kernel", {{"s", 1.5}}}}).find("kernel.s"), std::string::npos);
    EXPECT_NE(error_of({{"version", 1}, {"N", "many"}}).find("'N'"), std::string::npos);
    EXPECT_NE(error_of({{"version", 1}, {"horizon", {{"delta_bar", -1}}}}).find("horizon.delta_bar"), std::string::npos);
    EXPECT_NE(error_of({{"version", 1}, {"problem", {{"bc", "robin"}}}}).find("problem.bc"), std::string::npos);
    EXPECT_NE(error_of({{"version", 1}, {"problem", {{"gamma", {"top"}}}}}).find("problem.gamma"), std::string::npos);
    EXPECT_NE(error_of({{"version", 1}, {"domain", {{"bounds", {1.0, 0.0}}}}}).find("domain.bounds"), std::string::npos);
}

TEST(Config, LoadFromFile) {
    const auto p = scratch("cfg.json");
    std::ofstream(p) << R"({"version": 1, "N": 32})";
    EXPECT_EQ(load_config(p.string()).N, 32);
    std::ofstream(p) << "{ not json";
    EXPECT_THROW(load_config(p.string()), ConfigError);
    EXPECT_THROW(load_config((p.parent_path() / "missing.json").string()), ConfigError);
}

TEST(Config, FieldEvaluation) {
    const Domain d = Domain::rectangle(0.0, 2.0, 0.0, 1.0);
    const FieldSpec f{1.0, 2.0, 1.0, false};
    EXPECT_NEAR(eval_field(f, d, 1.0, 0.5), 3.0, 1e-15);
    EXPECT_NEAR(eval_field(f, d, 0.0, 0.5), 1.0, 1e-15);
}

TEST(Config, SetupMatchesResolution) {
    RunConfig c;
    const hetgrad::Setup s = make_setup(c, 33);
    EXPECT_EQ(s.grid->N(), 33);
    EXPECT_EQ(s.disc->D.rows(), 32);
    EXPECT_EQ(s.disc->D.cols(), 33);
}

TEST(Io, NumberFormatting) {
    EXPECT_EQ(format_number(0.1, 17), "0.10000000000000001");
    EXPECT_EQ(format_number(0.5, 12), "0.5");
    EXPECT_EQ(format_number(1e-20, 12), "1e-20");
}

TEST(Io, GridFunctionRoundTrip) {
    auto g = std::make_shared<const Grid>(Domain::rectangle(0.0, 1.0, 0.0, 1.0), 5);
    Eigen::VectorXd v(2 * g->node_count());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::sin(0.37 * i) / 3.0;
    const auto p = scratch("u.csv");
    write_gridfunction_csv(p.string(), GridFunction(g, 2, v), 99);
    const std::string text = slurp(p);
    EXPECT_EQ(text.rfind("# seed=99\nx,y,u0,u1\n", 0), 0u);
    const GridFunction back = read_gridfunction_csv(p.string(), g);
    EXPECT_EQ(back.components, 2);
    EXPECT_EQ((back.values - v).cwiseAbs().maxCoeff(), 0.0);
    auto other = std::make_shared<const Grid>(Domain::rectangle(0.0, 1.0, 0.0, 1.0), 6);
    EXPECT_THROW(read_gridfunction_csv(p.string(), other), IoError);
}

TEST(Io, MatrixMarketLayout) {
    SpMat m(2, 3);
    m.insert(0, 1) = 2.5;
    m.insert(1, 2) = -1.0;
    m.makeCompressed();
    const auto p = scratch("m.mtx");
    write_matrix_market(p.string(), m, 5);
    EXPECT_EQ(slurp(p), "%%MatrixMarket matrix coordinate real general\n% seed=5\n2 3 2\n1 2 2.5\n2 3 -1\n");
}

TEST(Io, TableCsv) {
    const auto p = scratch("t.csv");
    write_table_csv(p.string(), {"a", "b"}, {{1.0, 1.0 / 3.0}}, 1, 6);
    EXPECT_EQ(slurp(p), "# seed=1\na,b\n1,0.333333\n");
    EXPECT_THROW(write_table_csv("/nonexistent/dir/t.csv", {"a"}, {{1.0}}, 1), IoError);
}
