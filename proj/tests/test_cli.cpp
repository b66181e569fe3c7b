#include <catch_amalgamated.hpp>

#include <json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "egarch_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

/// Runs the CLI inside the scratch directory with `args`.
Run cli(const std::string& args) {
    const fs::path out = work_dir() / "stdout.txt";
    const fs::path err = work_dir() / "stderr.txt";
    const std::string cmd = "cd '" + work_dir().string() + "' && '" EGARCH_CLI_PATH "' " + args + " >'" +
                            out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

void write(const std::string& name, const std::string& content) {
    std::ofstream(work_dir() / name, std::ios::binary) << content;
}

const std::string kSimulate = "simulate --alpha 0 --beta 0.5 --gamma -0.1 --delta 0.3 --n 5000 --seed 7";

}  // namespace

TEST_CASE("end-to-end: simulate, fit, check, forecast, stability", "[cli]") {
    REQUIRE(cli(kSimulate + " --out s.csv").code == 0);
    const std::string csv = slurp(work_dir() / "s.csv");
    CHECK(csv.rfind("t,x,log_sigma2,z\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5001);

    const Run fit = cli("fit --input s.csv --mode sqmle --epsilon 1e-4 --seed 7 --out fit.json");
    REQUIRE(fit.code == 0);
    const auto j = nlohmann::json::parse(slurp(work_dir() / "fit.json"));
    CHECK(j.at("converged").get<bool>());
    CHECK(j.at("theta_hat").at("beta").get<double>() > 0.3);
    CHECK_FALSE(fs::exists(work_dir() / "fit.json.tmp"));

    const Run inv = cli("check-invertibility --params fit.json --method empirical --input s.csv");
    CHECK(inv.code == 0);
    CHECK(inv.out.find("verdict: Invertible") != std::string::npos);
    CHECK(inv.out.find("lyapunov_mean:") != std::string::npos);

    const Run fc = cli("forecast --params fit.json --input s.csv");
    CHECK(fc.code == 0);
    CHECK(fc.out.rfind("sigma2_next: ", 0) == 0);

    const Run st = cli("stability --alpha 0 --beta 0.5 --gamma -0.1 --delta 0.3 --input s.csv --out st.csv");
    CHECK(st.code == 0);
    CHECK(slurp(work_dir() / "st.csv").rfind("t,diff_max,criterion\n", 0) == 0);
}

TEST_CASE("theoretical check exit codes follow the verdict", "[cli]") {
    const Run yes = cli("check-invertibility --alpha 0 --beta 0.5 --gamma -0.1 --delta 0.3 --method theoretical "
                        "--mc-paths 2000 --seed 1");
    CHECK(yes.code == 0);
    CHECK(yes.out.find("verdict: Invertible") != std::string::npos);
    const Run no = cli("check-invertibility --alpha 0 --beta 0.9 --gamma 0 --delta 1 --method theoretical "
                       "--mc-paths 2000 --seed 1");
    CHECK(no.code == 1);
    CHECK(no.out.find("verdict: NotInvertible") != std::string::npos);
}

TEST_CASE("usage and domain errors", "[cli]") {
    CHECK(cli("").code == 2);
    CHECK(cli("no-such-command").code == 2);
    CHECK(cli("simulate --alpha 0 --beta 0.5 --gamma 0 --delta 0.3 --n 10").code == 2);  // missing --seed
    CHECK(cli("fit --input does-not-exist.csv").code == 2);

    write("bad.csv", "t,x\n1,0.5\n2,NaN\n");
    const Run nan = cli("fit --input bad.csv");
    CHECK(nan.code == 2);
    CHECK(nan.err.find("row 3") != std::string::npos);

    write("short.csv", "t,x\n1,0.5\n2,0.1\n");
    CHECK(cli("fit --input short.csv").code == 2);

    const Run inadmissible = cli("check-invertibility --alpha 0 --beta 0.5 --gamma 0.5 --delta 0.3 "
                                 "--method theoretical --seed 1 --mc-paths 200");
    CHECK(inadmissible.code == 1);
    CHECK_FALSE(inadmissible.err.empty());
}

TEST_CASE("identical command lines give identical bytes", "[cli]") {
    REQUIRE(cli(kSimulate + " --out a.csv").code == 0);
    REQUIRE(cli(kSimulate + " --out b.csv --threads 2").code == 0);
    CHECK(slurp(work_dir() / "a.csv") == slurp(work_dir() / "b.csv"));

    const std::string dom = "domain-map --grid 3 --gamma-min -0.2 --gamma-max 0.2 --delta-min 0 --delta-max 0.4 "
                            "--beta-tol 1e-3 --mc-paths 300 --seed 4";
    REQUIRE(cli(dom + " --out d1.csv").code == 0);
    REQUIRE(cli(dom + " --out d2.csv").code == 0);
    CHECK(slurp(work_dir() / "d1.csv") == slurp(work_dir() / "d2.csv"));
    CHECK(slurp(work_dir() / "d1.csv").rfind("gamma,delta,beta_max\n", 0) == 0);
}

TEST_CASE("JSON config is equivalent to flags", "[cli]") {
    write("cfg.json", R"({"schema_version": 1, "simulate": {"alpha": 0, "beta": 0.5, "gamma": -0.1,
                          "delta": 0.3, "n": 5000, "seed": 7, "out": "c.csv"}})");
    REQUIRE(cli("--config cfg.json simulate").code == 0);
    REQUIRE(cli(kSimulate + " --out f.csv").code == 0);
    CHECK(slurp(work_dir() / "c.csv") == slurp(work_dir() / "f.csv"));

    write("unknown.json", R"({"schema_version": 1, "simulate": {"n": 10, "seed": 1, "bogus": 3}})");
    CHECK(cli("--config unknown.json simulate --alpha 0 --beta 0.5 --gamma 0 --delta 0.3").code == 2);
    write("noversion.json", R"({"simulate": {"n": 10, "seed": 1}})");
    CHECK(cli("--config noversion.json simulate --alpha 0 --beta 0.5 --gamma 0 --delta 0.3").code == 2);
}

TEST_CASE("small Monte Carlo study", "[cli]") {
    const Run r = cli("mc-study --alpha 0 --beta 0.5 --gamma -0.1 --delta 0.3 --kind consistency --n 300 600 "
                      "--replications 2 --seed 3 --out mc.json");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(work_dir() / "mc.json"));
    CHECK(j.at("cells").size() == 2);
}
