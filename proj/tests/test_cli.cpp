#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path& work() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "pedsub_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = "cd '" + work().string() + "' && '" PEDSUB_CLI "' " + args + " >/dev/null 2>cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(work() / p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::size_t data_rows(const fs::path& p) {
  const auto text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) - 1;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("generate") {
    REQUIRE(run("generate --family radial3 --n 2500 --seed 7 --out d.csv") == 0);
    CHECK(data_rows("d.csv") == 2500);
    REQUIRE(fs::exists(work() / "d.meta.json"));
    const auto meta = nlohmann::json::parse(slurp("d.meta.json"));
    CHECK(meta["seed"] == 7);
    CHECK(meta["flags"]["family"] == "radial3");
    CHECK_FALSE(meta["flags"].contains("threads"));
    CHECK(meta["schema"]["target"] == "y");
    const auto first = slurp("d.csv");
    REQUIRE(run("generate --family radial3 --n 2500 --seed 7 --out d.csv --threads 1") == 0);
    CHECK(slurp("d.csv") == first);

    CHECK(run("generate --n 10 --out x.csv") == 2);
    CHECK(slurp("cli_stderr.txt").find("--family") != std::string::npos);
    CHECK(run("generate --family radial3 --n 10 --out x.csv --bogus") == 2);
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("generate --family nonsense --n 10 --out x.csv") == 1);
  }

  TEST_CASE("select") {
    REQUIRE(run("generate --family radial3 --n 2500 --seed 7 --out d.csv") == 0);
    REQUIRE(run("select --in d.csv --method ped --n 500 --seed 3 --out s.csv") == 0);
    CHECK(data_rows("s.csv") == 500);
    const auto meta = nlohmann::json::parse(slurp("s.meta.json"));
    CHECK(meta["selection"]["strata"].size() >= 2);
    CHECK(meta["selection"]["row_indices"].size() == 500);
    CHECK(meta["selection"]["strata"][0].contains("r"));
    CHECK(fs::exists(work() / "s.timing.json"));

    const auto csv = slurp("s.csv"), js = slurp("s.meta.json");
    REQUIRE(run("select --in d.csv --method ped --n 500 --seed 3 --out s.csv --threads 1") == 0);
    CHECK(slurp("s.csv") == csv);
    CHECK(slurp("s.meta.json") == js);

    REQUIRE(run("select --in d.csv --method ped --n 10 --t-h 5 --out tiny.csv") == 0);
    CHECK(nlohmann::json::parse(slurp("tiny.meta.json"))["selection"]["strata"].size() <= 2);

    REQUIRE(run("generate --family twonorm --p 2 --n 20000 --seed 1 --out big.csv") == 0);
    REQUIRE(run("select --in big.csv --method uniform --fraction 0.05 --out u.csv") == 0);
    CHECK(data_rows("u.csv") == 1000);
    REQUIRE(run("select --in d.csv --method twinning --n 250 --out t.csv") == 0);
    CHECK(data_rows("t.csv") == 250);

    CHECK(run("select --in d.csv --method iboss --n 10 --out z.csv") == 2);
    CHECK(run("select --in d.csv --out z.csv") == 2);
    CHECK(run("select --in missing.csv --n 5 --out z.csv") == 2);
    CHECK(run("select --in d.csv --method uniform --n 999999 --out z.csv") == 1);
    CHECK(slurp("cli_stderr.txt").find("select") != std::string::npos);
  }

  TEST_CASE("train-eval") {
    std::ofstream(work() / "toy.csv") << "a,b,label\n0,0,no\n0,1,no\n1,0,no\n5,5,yes\n5,6,yes\n6,5,yes\n"
                                         "0,2,no\n6,6,yes\n1,1,no\n5,7,yes\n0,3,no\n7,5,yes\n";
    REQUIRE(run("train-eval --train toy.csv --test toy.csv --target label --ntree 20 --out r.json") == 0);
    const auto report = nlohmann::json::parse(slurp("r.json"));
    CHECK(report["accuracy"] == 1.0);
    CHECK(report["n_test"] == 12);

    REQUIRE(run("train-eval --train toy.csv --test toy.csv --target label --ntree 1 --seed 9 --out r1.json") == 0);
    const auto once = slurp("r1.json");
    REQUIRE(run("train-eval --train toy.csv --test toy.csv --target label --ntree 1 --seed 9 --out r1.json") == 0);
    CHECK(slurp("r1.json") == once);

    std::ofstream(work() / "other.csv") << "a,c,label\n0,0,no\n5,5,yes\n";
    CHECK(run("train-eval --train toy.csv --test other.csv --target label --out r2.json") == 1);
  }

  TEST_CASE("bench and config overrides") {
    const std::string flags =
        "bench --family twonorm --p 2 --n-train 1500 --n-test 500 --replicates 1 --fraction 0.05 --ntree 5";
    REQUIRE(run(flags + " --seed 4 --out b1") == 0);
    CHECK(data_rows("b1/results.csv") == 4);
    for (const char* f : {"summary.csv", "summary.md", "timings.csv", "summary_timings.md", "manifest.json"})
      CHECK(fs::exists(work() / "b1" / f));
    REQUIRE(run(flags + " --seed 4 --out b2 --threads 1") == 0);
    CHECK(slurp("b1/results.csv") == slurp("b2/results.csv"));
    CHECK(slurp("b1/summary.csv") == slurp("b2/summary.csv"));

    std::ofstream(work() / "cfg.json") << R"({"replicates": 2, "method": ["ped", "uniform"], "seed": 4})";
    REQUIRE(run(flags + " --seed 99 --config cfg.json --out b3") == 0);
    CHECK(data_rows("b3/results.csv") == 4);
    const auto manifest = nlohmann::json::parse(slurp("b3/manifest.json"));
    CHECK(manifest["seed"] == 4);
    CHECK(manifest["experiments"][0]["replicates"] == 2);

    CHECK(run("bench --suite table9 --out b4") == 2);
    CHECK(run("bench --out b4") == 1);
  }
}
