#include "cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result odc_run(std::vector<std::string> args)
{
    args.insert(args.begin(), "odc");
    std::ostringstream out, err;
    int code = odc::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("odc_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path bundled()
{
    return fs::path(ODC_SOURCE_DIR) / "data" / "synthetic.csv";
}

std::vector<std::string> detect_args(const fs::path& data, const fs::path& out, std::vector<std::string> extra = {})
{
    std::vector<std::string> a{"detect", "--data", data.string(), "--time-col", "time", "--status-col", "status",
                               "--covariates", "x", "--log-time", "--out", out.string()};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
}

std::set<int> starred_rows(const std::string& report)
{
    std::set<int> rows;
    auto listing = report.substr(report.find("Full listing"));
    std::istringstream in(listing);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '*')
            rows.insert(std::stoi(line));
    }
    return rows;
}

} // namespace

TEST_CASE("usage errors exit with code 2")
{
    auto r = odc_run({"detect", "--data", bundled().string(), "--status-col", "status"});
    CHECK(r.code == 2);
    CHECK(r.err.find("time-col") != std::string::npos);
    CHECK(odc_run({}).code == 2);
    CHECK(odc_run({"frobnicate"}).code == 2);
    auto dir = scratch("usage");
    CHECK(odc_run(detect_args(bundled(), dir, {"--method", "lasso"})).code == 2);
    CHECK(odc_run(detect_args(bundled(), dir, {"--k-s", "-1"})).code == 2);
}

TEST_CASE("data errors exit with code 3")
{
    auto dir = scratch("data");
    CHECK(odc_run(detect_args(dir / "missing.csv", dir)).code == 3);
    std::ofstream(dir / "bad.csv") << "time,status,x\n1,2,3\n4,1,5\n";
    CHECK(odc_run(detect_args(dir / "bad.csv", dir)).code == 3);
    CHECK(odc_run({"detect", "--data", bundled().string(), "--time-col", "nope", "--status-col", "status", "--out",
                   dir.string()})
              .code == 3);
}

TEST_CASE("numerical errors exit with code 4")
{
    auto dir = scratch("numerical");
    std::ofstream(dir / "dup.csv") << "time,status,a,b\n1,1,1,2\n2,1,2,4\n3,1,3,6\n4,1,4,8\n5,1,5,10\n";
    auto r = odc_run({"detect", "--data", (dir / "dup.csv").string(), "--time-col", "time", "--status-col", "status",
                      "--covariates", "a,b", "--out", (dir / "o").string()});
    CHECK(r.code == 4);
}

TEST_CASE("score detect without k_s is undecided")
{
    auto dir = scratch("undecided");
    auto r = odc_run(detect_args(bundled(), dir));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# of outliers detected:  0") != std::string::npos);
    CHECK(r.out.find("Top 6 outlying scores") != std::string::npos);
    CHECK(fs::exists(dir / "artifact.json"));
    CHECK(fs::exists(dir / "report.txt"));
    CHECK(fs::exists(dir / "qq.svg"));

    auto coef = odc_run({"coef", "--artifact", (dir / "artifact.json").string()});
    REQUIRE(coef.code == 0);
    CHECK(coef.out.find("q10") != std::string::npos);
    CHECK(coef.out.find("q90") != std::string::npos);
}

TEST_CASE("update re-thresholds and nests")
{
    auto dir = scratch("update");
    REQUIRE(odc_run(detect_args(bundled(), dir)).code == 0);
    auto artifact = (dir / "artifact.json").string();

    std::set<int> prev;
    bool first = true;
    for (std::string k : {"100", "6", "4", "3", "2"}) {
        auto r = odc_run({"update", "--artifact", artifact, "--k-s", k, "--out", (dir / ("k" + k)).string()});
        REQUIRE(r.code == 0);
        auto rows = starred_rows(slurp(dir / ("k" + k) / "report.txt"));
        if (k == "100")
            CHECK(rows.empty());
        if (!first)
            CHECK(std::includes(rows.begin(), rows.end(), prev.begin(), prev.end()));
        std::smatch m;
        REQUIRE(std::regex_search(r.out, m, std::regex(R"(# of outliers detected:\s+(\d+))")));
        CHECK(std::stoul(m[1]) == rows.size());
        prev = rows;
        first = false;
    }
    CHECK(prev.size() >= 4);
}

TEST_CASE("update refuses a changed dataset or a non-score artifact")
{
    auto dir = scratch("guard");
    fs::copy_file(bundled(), dir / "data.csv");
    REQUIRE(odc_run(detect_args(dir / "data.csv", dir / "score")).code == 0);
    REQUIRE(odc_run(detect_args(dir / "data.csv", dir / "box", {"--method", "boxplot", "--fast"})).code == 0);

    auto wrong = odc_run({"update", "--artifact", (dir / "box" / "artifact.json").string(), "--k-s", "3"});
    CHECK(wrong.code == 2);
    CHECK(wrong.err.find("WrongMethod") != std::string::npos);

    std::ofstream(dir / "data.csv", std::ios::app) << "1,1,3,0\n";
    auto changed = odc_run({"update", "--artifact", (dir / "score" / "artifact.json").string(), "--k-s", "3"});
    CHECK(changed.code == 3);
    CHECK(changed.err.find("FingerprintMismatch") != std::string::npos);
}

TEST_CASE("detect and plot are deterministic")
{
    auto a = scratch("det_a"), b = scratch("det_b");
    REQUIRE(odc_run(detect_args(bundled(), a, {"--k-s", "4"})).code == 0);
    REQUIRE(odc_run(detect_args(bundled(), b, {"--k-s", "4"})).code == 0);
    CHECK(slurp(a / "artifact.json") == slurp(b / "artifact.json"));
    CHECK(slurp(a / "qq.svg") == slurp(b / "qq.svg"));
    REQUIRE(odc_run({"plot", "--artifact", (a / "artifact.json").string(), "--k-s", "3", "--out",
                     (a / "p.svg").string()})
                .code == 0);
    REQUIRE(odc_run({"plot", "--artifact", (b / "artifact.json").string(), "--k-s", "3", "--out",
                     (b / "p.svg").string()})
                .code == 0);
    CHECK(slurp(a / "p.svg") == slurp(b / "p.svg"));
}

TEST_CASE("simulate writes identical tables for a fixed seed")
{
    auto a = scratch("sim_a"), b = scratch("sim_b");
    for (auto& dir : {a, b})
        REQUIRE(odc_run({"simulate", "--replicates", "1", "--seed", "7", "--out", dir.string()}).code == 0);
    CHECK(slurp(a / "study.csv") == slurp(b / "study.csv"));
    CHECK(slurp(a / "study.txt") == slurp(b / "study.txt"));
    CHECK(odc_run({"simulate", "--replicates", "0"}).code == 2);
}
