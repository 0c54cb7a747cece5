#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hetgrad/commands.hpp"

using namespace hetgrad;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "hetgrad");
    std::ostringstream out, err;
    const int code = run_command(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path scratch() {
    const auto dir = std::filesystem::temp_directory_path() / "hetgrad_cli";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string write_config(const std::string& name, const std::string& body) {
    const auto p = scratch() / name;
    std::ofstream(p) << body;
    return p.string();
}

const char* kSmall = R"({"version": 1, "N": 33, "problem": {"bc": "mixed", "gamma": ["left"]}})";

nlohmann::json summary(const Outcome& r) { return nlohmann::json::parse(r.out); }

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"assemble", "--bogus"}).code, 2);
    const auto bad = write_config("bad.json", R"({"version": 1, "kernal": {}})");
    const Outcome r = run({"assemble", "--config", bad});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("unknown config key 'kernal'"), std::string::npos);
    EXPECT_EQ(run({"assemble", "--config", write_config("s.json", kSmall), "--op", "Z"}).code, 2);
}

TEST(Cli, KernelTable) {
    const auto out = (scratch() / "kernel.csv").string();
    const Outcome r = run({"kernel", "--family", "fractional", "--n", "1", "--s", "0.5", "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = summary(r);
    EXPECT_EQ(j["seed"], 20240611);
    EXPECT_NEAR(j["mass"].get<double>(), 1.0, 1e-6);
    std::ifstream in(out);
    std::string seed, header;
    std::getline(in, seed);
    std::getline(in, header);
    EXPECT_EQ(header, "r,rho,Qbar,xi,Qhat");
}

TEST(Cli, AssembleWritesMatrixMarket) {
    const auto cfg = write_config("s.json", kSmall);
    const auto out = (scratch() / "D.mtx").string();
    const Outcome r = run({"assemble", "--config", cfg, "--op", "D", "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = summary(r);
    EXPECT_EQ(j["rows"], 32);
    EXPECT_EQ(j["cols"], 33);
    std::ifstream in(out);
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first, "%%MatrixMarket matrix coordinate real general");
    const Outcome s = run({"assemble", "--config", cfg, "--op", "Lap", "--symmetrize", "--out", out});
    EXPECT_EQ(summary(s)["symmetrized"], true);
}

TEST(Cli, SolveApplyAndEig) {
    const auto cfg = write_config("s.json", kSmall);
    const auto u = (scratch() / "u.csv").string();
    const Outcome s = run({"solve", "--config", cfg, "--out", u});
    ASSERT_EQ(s.code, 0) << s.err;
    EXPECT_LE(summary(s)["residual"].get<double>(), 1e-10);
    const Outcome a = run({"apply", "--config", cfg, "--op", "Q", "--in", u, "--out", (scratch() / "Qu.csv").string()});
    ASSERT_EQ(a.code, 0) << a.err;
    const Outcome e = run({"eig", "--config", cfg, "--op", "Q", "--out", (scratch() / "eig.csv").string()});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_GT(summary(e)["min_real"].get<double>(), 0.0);
    EXPECT_EQ(summary(e)["count"], 33);
}

TEST(Cli, IncompatibleNeumannExitsOne) {
    const auto cfg = write_config("n.json", R"({"version": 1, "N": 33, "problem": {"bc": "neumann_meanzero"}})");
    const Outcome r = run({"solve", "--config", cfg, "--out", (scratch() / "n.csv").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("incompatible Neumann data"), std::string::npos);
}

TEST(Cli, PoincareAndMinimize) {
    const auto cfg = write_config("s.json", kSmall);
    const Outcome p = run({"poincare", "--config", cfg, "--subspace", "mean_zero"});
    ASSERT_EQ(p.code, 0) << p.err;
    EXPECT_EQ(summary(p)["method"], "svd");
    EXPECT_EQ(run({"poincare", "--config", cfg, "--subspace", "all"}).code, 1);
    const auto hist = (scratch() / "hist.csv").string();
    const Outcome m = run({"minimize", "--config", cfg, "--density", "p_power", "--out", (scratch() / "m.csv").string(),
                       "--history", hist});
    ASSERT_EQ(m.code, 0) << m.err;
    EXPECT_TRUE(summary(m)["converged"].get<bool>());
    std::ifstream in(hist);
    std::string seed, header;
    std::getline(in, seed);
    std::getline(in, header);
    EXPECT_EQ(header, "iter,energy,grad_norm,step");
}

TEST(Cli, VerifyDeterministic) {
    const auto cfg = write_config("v.json", R"({"version": 1, "N": 64})");
    const auto a = (scratch() / "a.json").string(), b = (scratch() / "b.json").string();
    const Outcome r1 = run({"verify", "--config", cfg, "--out", a});
    const Outcome r2 = run({"verify", "--config", cfg, "--out", b});
    EXPECT_EQ(r1.code, r2.code);
    std::ifstream fa(a), fb(b);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_FALSE(sa.str().empty());
    EXPECT_EQ(sa.str(), sb.str());
    const auto rep = nlohmann::json::parse(sa.str());
    EXPECT_EQ(rep["checks"].size(), 16u);
}
