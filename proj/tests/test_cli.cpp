#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace {

struct Outcome {
    int code;
    std::string output;
};

Outcome run_cli(const std::string& args) {
    std::string cmd = std::string(CRG_CLI_PATH) + " " + args + " 2>&1";
    Outcome o{-1, {}};
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return o;
    std::array<char, 4096> buf;
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), p)) o.output += buf.data();
    int status = pclose(p);
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return o;
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("crg_cli_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST(Cli, SelftestPasses) {
    auto o = run_cli("selftest");
    EXPECT_EQ(o.code, 0) << o.output;
    EXPECT_NE(o.output.find("selftest: ok"), std::string::npos);
}

TEST(Cli, MissingConfigIsUsageError) {
    auto o = run_cli("experiment --config /nonexistent/missing.cfg");
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.output.find("config file not found"), std::string::npos);
}

TEST(Cli, UnknownSubcommandIsUsageError) {
    EXPECT_EQ(run_cli("frobnicate").code, 2);
    EXPECT_EQ(run_cli("").code, 2);
    EXPECT_EQ(run_cli("experiment --name no-such-thing").code, 2);
}

TEST(Cli, GenGraphWritesEdgeList) {
    auto dir = scratch("gen");
    auto file = (dir / "g.txt").string();
    auto o = run_cli("gen-graph --n 1000 --tau 3.5 --lambda 0 --seed 7 --out " + file);
    ASSERT_EQ(o.code, 0) << o.output;
    std::ifstream f(file);
    std::string first;
    std::getline(f, first);
    EXPECT_EQ(first, "# n=1000");
    // same seed, same file
    auto file2 = (dir / "h.txt").string();
    run_cli("gen-graph --n 1000 --tau 3.5 --lambda 0 --seed 7 --out " + file2);
    std::ifstream a(file), b(file2);
    std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    EXPECT_EQ(sa, sb);
    std::filesystem::remove_all(dir);
}

TEST(Cli, OtherSubcommandsRun) {
    EXPECT_EQ(run_cli("ptree --m 5 --mode birthday --seed 3").code, 0);
    EXPECT_EQ(run_cli("ptree --p 0.5 0.3 0.2 --mode tilted-exact --a 2 --surplus").code, 0);
    EXPECT_EQ(run_cli("icrt --theta 3 2 1 --horizon 5").code, 0);
    EXPECT_EQ(run_cli("levy --J 100 --horizon 5 --excursions").code, 0);
    EXPECT_EQ(run_cli("explore --n 200").code, 0);
    EXPECT_EQ(run_cli("metric --n 2000 --landmarks 50").code, 0);
    auto o = run_cli("ptree --m 3 --mode nonsense");
    EXPECT_EQ(o.code, 2);
}

TEST(Cli, ExperimentWritesOutputs) {
    auto dir = scratch("exp");
    auto cfg = (dir / "c.cfg").string();
    std::ofstream(cfg) << "experiment = surplus-poisson\nreplicas = 200\n";
    auto o = run_cli("experiment --config " + cfg + " --out " + (dir / "out").string());
    EXPECT_TRUE(o.code == 0 || o.code == 1) << o.output;
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "surplus-poisson_records.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "surplus-poisson_summary.json"));
    EXPECT_NE(o.output.find("surplus-poisson"), std::string::npos);
    std::filesystem::remove_all(dir);
}
