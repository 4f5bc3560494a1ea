#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "cwa/io.hpp"

using namespace cwa;

namespace {

const std::string kCli = CWA_CLI_PATH;
const std::string kDir = "/tmp/cwa_cli_test";

int run(const std::string& args) {
    std::string cmd = kCli + " " + args + " > " + kDir + "/stdout.txt 2> " + kDir + "/stderr.txt";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Fixture {
    Fixture() {
        std::system(("mkdir -p " + kDir).c_str());
        json dspec{{"generator", "gaussian_blobs"}, {"dim", 8},      {"K", 3},
                   {"per_class", 30},               {"noise", 0.04}, {"seed", 7}};
        save_json_file(kDir + "/dataset_spec.json", dspec);
        json members = json::array();
        for (int i = 0; i < 4; ++i) {
            members.push_back({{"arch", i % 2 == 0 ? "linear" : "mlp"},
                               {"hidden", 6},
                               {"seed", 100 + i},
                               {"epochs", 30}});
        }
        json zspec{{"members", members}, {"surrogates", {0, 1}}, {"holdouts", {2, 3}}};
        save_json_file(kDir + "/zoo_spec.json", zspec);
    }
};

}  // namespace

TEST_CASE("cli end-to-end pipeline") {
    Fixture fx;

    SUBCASE("gen-data writes a dataset and is deterministic") {
        REQUIRE(run("gen-data --spec " + kDir + "/dataset_spec.json --out " + kDir +
                    "/data.json") == 0);
        REQUIRE(run("gen-data --spec " + kDir + "/dataset_spec.json --out " + kDir +
                    "/data2.json") == 0);
        CHECK(slurp(kDir + "/data.json") == slurp(kDir + "/data2.json"));
        json d = load_json_file(kDir + "/data.json");
        CHECK(d["xs"].size() == 90);
        CHECK(d.contains("spec"));  // resolved config embedded
    }

    SUBCASE("missing required flag is a usage error (exit 2)") {
        CHECK(run("gen-data --out " + kDir + "/x.json") == 2);
        CHECK(run("attack --zoo nope.json") == 2);
    }

    SUBCASE("full pipeline: train-zoo, attack, campaign, sweep, report") {
        REQUIRE(run("gen-data --spec " + kDir + "/dataset_spec.json --out " + kDir +
                    "/data.json") == 0);
        REQUIRE(run("train-zoo --dataset " + kDir + "/data.json --spec " + kDir +
                    "/zoo_spec.json --out " + kDir + "/zoo.json") == 0);
        json zoo = load_json_file(kDir + "/zoo.json");
        CHECK(zoo["models"].size() == 4);

        // attack with T=10 on 2 surrogates: NFE = 2*T*n = 40
        REQUIRE(run("attack --zoo " + kDir + "/zoo.json --dataset " + kDir +
                    "/data.json --algo mi-cwa --T 10 --index 3 --seed 5 --out " + kDir +
                    "/trace.json") == 0);
        json trace = load_json_file(kDir + "/trace.json");
        CHECK(trace["nfe"].get<int>() == 40);
        CHECK(trace.contains("config"));
        CHECK(trace["config"]["seed"].get<int>() == 5);
        std::string banner = slurp(kDir + "/stdout.txt");
        CHECK(banner.find("config_hash=") != std::string::npos);
        CHECK(banner.find("seed=") != std::string::npos);

        json ccfg{{"dataset", kDir + "/data.json"},
                  {"zoo", kDir + "/zoo.json"},
                  {"attacks", {"mi", "mi-cwa"}},
                  {"max_points", 20},
                  {"attack_config", {{"seed", 3}}}};
        save_json_file(kDir + "/campaign.json", ccfg);
        REQUIRE(run("campaign --config " + kDir + "/campaign.json --out " + kDir +
                    "/report.json --csv " + kDir + "/report.csv") == 0);
        json rep = load_json_file(kDir + "/report.json");
        CHECK(rep["attacks"].size() == 2);
        CHECK(rep.contains("attack_config"));
        std::string csv = slurp(kDir + "/report.csv");
        // header + 2 attacks x 4 models
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 4);

        json scfg = ccfg;
        scfg["parameter"] = "T";
        scfg["grid"] = {1, 5};
        scfg["attacks"] = {"mi"};
        save_json_file(kDir + "/sweep.json", scfg);
        REQUIRE(run("sweep --config " + kDir + "/sweep.json --out " + kDir + "/sweep_out.json") ==
                0);
        json sw = load_json_file(kDir + "/sweep_out.json");
        CHECK(sw["points"].size() == 2);

        CHECK(run("report --in " + kDir + "/report.json --out " + kDir + "/again.csv") == 0);
        CHECK(slurp(kDir + "/again.csv") == csv);
    }

    SUBCASE("report on a missing file exits 1") {
        CHECK(run("report --in " + kDir + "/no_such_file.json") == 1);
    }

    SUBCASE("verify-theory: pass, unknown check, bad trials") {
        CHECK(run("verify-theory --check projection --trials 50 --seed 3 --out " + kDir +
                  "/verify.json") == 0);
        json v = load_json_file(kDir + "/verify.json");
        REQUIRE(v.size() == 1);
        CHECK(v[0]["check"] == "projection");
        CHECK(v[0]["pass"] == true);
        CHECK(v[0].contains("seed"));
        CHECK(run("verify-theory --check unknown --trials 10") == 2);
        CHECK(run("verify-theory --check nfe --trials 0") == 2);
    }

    SUBCASE("verify-theory holder at 1000 trials passes") {
        CHECK(run("verify-theory --check holder --trials 1000 --seed 11") == 0);
    }
}
