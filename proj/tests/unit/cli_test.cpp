#include <doctest.h>

#include "mdmc/io.hpp"
#include "mdmc/sparse_sym.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace mdmc;

namespace {

namespace fs = std::filesystem;

struct CliFixture {
    fs::path dir;
    CliFixture() {
        dir = fs::temp_directory_path() / ("mdmc_cli_" + std::to_string(std::rand()));
        fs::create_directories(dir);
    }
    ~CliFixture() { fs::remove_all(dir); }
    std::string file(const std::string& name) const { return (dir / name).string(); }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MDMC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string data_file(const std::string& name) {
    return std::string(MDMC_DATA_DIR) + "/" + name;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// report lines with the timing keys stripped
std::string stable_section(const std::string& content) {
    std::stringstream in(content), out;
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("seconds_", 0) != 0) out << line << "\n";
    return out.str();
}

}  // namespace

TEST_CASE("estimate on the shipped 30-node sample exits cleanly") {
    CliFixture tmp;
    const std::string out = tmp.file("xhat.mtx");
    const std::string report = tmp.file("report.txt");
    const int rc = run_cli("estimate --samples " + data_file("samples_n30.txt") +
                           " --lambda 0.3 --out " + out + " --report " + report);
    CHECK(rc == 0);
    CHECK(fs::exists(out));
    CHECK(fs::exists(report));
    const std::string rep = read_file(report);
    CHECK(rep.find("converged=true") != std::string::npos);
    CHECK(rep.find("n=30") != std::string::npos);

    // the produced estimator parses back
    const SparseSymMatrix x = io::read_matrix_market(out);
    CHECK(x.n() == 30);
}

TEST_CASE("identical argv and seed produce identical stable report sections") {
    CliFixture tmp;
    const std::string r1 = tmp.file("r1.txt"), r2 = tmp.file("r2.txt");
    const std::string base = "estimate --samples " + data_file("samples_n30.txt") +
                             " --lambda 0.3 --out " + tmp.file("x.mtx");
    CHECK(run_cli(base + " --report " + r1) == 0);
    CHECK(run_cli(base + " --report " + r2) == 0);
    CHECK(stable_section(read_file(r1)) == stable_section(read_file(r2)));
}

TEST_CASE("malformed matrix market input exits 2 with a line message") {
    CliFixture tmp;
    const std::string bad = tmp.file("bad.mtx");
    {
        std::ofstream out(bad);
        out << "%%MatrixMarket matrix coordinate real symmetric\n"
            << "3 3 2\n"
            << "1 1 1.0\n"
            << "9 1 0.5\n";  // out of range
    }
    const int rc = run_cli("solve --cov " + bad + " --out " + tmp.file("x.mtx"));
    CHECK(rc == 2);
}

TEST_CASE("unknown flags exit 2 via usage") {
    CHECK(run_cli("estimate --definitely-not-a-flag 1") != 0);
    CHECK(run_cli("") != 0);
}

TEST_CASE("solver hitting the newton cap exits 1 and flags the report") {
    CliFixture tmp;
    const std::string cfg = tmp.file("cfg.txt");
    {
        std::ofstream out(cfg);
        out << "max_newton=1\nnewton_tol=1e-14\n";
    }
    const std::string report = tmp.file("report.txt");
    const int rc = run_cli("solve --cov " + data_file("cycle4_cov.mtx") + " --config " +
                           cfg + " --out " + tmp.file("x.mtx") + " --report " + report);
    CHECK(rc == 1);
    CHECK(read_file(report).find("converged=false") != std::string::npos);
}

TEST_CASE("threshold and solve compose like estimate") {
    CliFixture tmp;
    const std::string thr = tmp.file("ch.mtx");
    CHECK(run_cli("threshold --samples " + data_file("samples_n30.txt") +
                  " --lambda 0.3 --out " + thr) == 0);
    CHECK(run_cli("solve --cov " + thr + " --out " + tmp.file("x1.mtx") + " --report " +
                  tmp.file("rs.txt")) == 0);

    const std::string r_est = tmp.file("re.txt");
    CHECK(run_cli("estimate --samples " + data_file("samples_n30.txt") +
                  " --lambda 0.3 --out " + tmp.file("x2.mtx") + " --report " + r_est) == 0);

    const SparseSymMatrix x1 = io::read_matrix_market(tmp.file("x1.mtx"));
    const SparseSymMatrix x2 = io::read_matrix_market(tmp.file("x2.mtx"));
    REQUIRE(x1.pattern() == x2.pattern());
    for (Index e = 0; e < x1.nnz(); ++e) CHECK(x1.value(e) == x2.value(e));
}

TEST_CASE("embed prints pattern statistics") {
    CliFixture tmp;
    const std::string out = tmp.file("stats.txt");
    const std::string cmd = std::string(MDMC_CLI_PATH) + " embed --pattern " +
                            data_file("cycle4_cov.mtx") + " --out-stats > " + out +
                            " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    const std::string stats = read_file(out);
    CHECK(stats.find("n=4") != std::string::npos);
    CHECK(stats.find("m=1") != std::string::npos);
    CHECK(stats.find("max_clique=3") != std::string::npos);
}

TEST_CASE("check prints the diagnostic fields") {
    CliFixture tmp;
    const std::string out = tmp.file("check.txt");
    const std::string cmd = std::string(MDMC_CLI_PATH) + " check --cov " +
                            data_file("cycle4_cov.mtx") + " --lambda 0.05 > " + out +
                            " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    const std::string text = read_file(out);
    CHECK(text.find("pd_ok=") != std::string::npos);
    CHECK(text.find("sign_ok=") != std::string::npos);
    CHECK(text.find("rhs_beta=") != std::string::npos);
    CHECK(text.find("surrogate_ok=") != std::string::npos);
}

TEST_CASE("bench banded runs at toy sizes") {
    CliFixture tmp;
    const std::string out = tmp.file("bench.txt");
    CHECK(run_cli("bench banded --sizes 60,120 --bandwidth 11 --seed 3 --out " + out) == 0);
    const std::string text = read_file(out);
    CHECK(text.find("loglog_slope=") != std::string::npos);
}

TEST_CASE("inputs are never mutated") {
    CliFixture tmp;
    const std::string src = data_file("samples_n30.txt");
    const std::string before = read_file(src);
    CHECK(run_cli("estimate --samples " + src + " --lambda 0.3 --out " +
                  tmp.file("x.mtx")) == 0);
    CHECK(read_file(src) == before);
}
