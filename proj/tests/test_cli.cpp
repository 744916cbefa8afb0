#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string cli_path() {
    const char* env = std::getenv("IBD_CLI");
    REQUIRE_MESSAGE(env != nullptr, "IBD_CLI must point at the built binary");
    return env;
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    const fs::path dir = fs::temp_directory_path();
    const fs::path out_file = dir / "ibd_cli_out.tmp";
    const fs::path err_file = dir / "ibd_cli_err.tmp";
    const std::string command = env_prefix + cli_path() + " " + args + " > " +
                                out_file.string() + " 2> " + err_file.string();
    const int status = std::system(command.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    return result;
}

fs::path write_grid_csv() {
    const fs::path path = fs::temp_directory_path() / "ibd_cli_grid.csv";
    std::ofstream out(path, std::ios::binary);
    out << "x1,x2,y\n0,0,0\n0,1,0\n1,0,0\n1,1,1\n"; // y = x1*x2
    return path;
}

fs::path write_xor_csv() {
    const fs::path path = fs::temp_directory_path() / "ibd_cli_xor.csv";
    std::ofstream out(path, std::ios::binary);
    out << "x1,x2\n0,0\n0,1\n1,0\n1,1\n";
    return path;
}

const std::string kXorCommand =
    "\"external:awk -F, 'NR>1{print \\$1 + \\$2 - 2*\\$1*\\$2}'\"";

} // namespace

TEST_CASE("cli explains a trained linear model with the sum identity intact") {
    const fs::path data = write_grid_csv();
    const RunResult result = run_cli("explain --data " + data.string() +
                                     " --target y --model linear --observation 1,1");
    REQUIRE_MESSAGE(result.exit_code == 0, result.err);

    const json doc = json::parse(result.out);
    CHECK(std::abs(doc["baseline"].get<double>() - 0.25) < 1e-9);
    double sum = doc["baseline"].get<double>();
    for (const auto& step : doc["steps"]) sum += step["attribution"].get<double>();
    const double prediction = doc["prediction"].get<double>();
    CHECK(std::abs(sum - prediction) <= 1e-8 * std::max(1.0, std::abs(prediction)));
    CHECK(doc["meta"]["background_rows"] == 4);
}

TEST_CASE("cli passes --order through to the order-specified mode") {
    const fs::path data = write_grid_csv();
    const RunResult result =
        run_cli("explain --data " + data.string() +
                " --target y --model linear --observation 1,1 --order x2,x1");
    REQUIRE_MESSAGE(result.exit_code == 0, result.err);
    const json doc = json::parse(result.out);
    REQUIRE(doc["steps"].size() == 2);
    CHECK(doc["steps"][0]["features"][0] == "x2");
    CHECK(doc["steps"][1]["features"][0] == "x1");
}

TEST_CASE("cli rejects an out-of-range observation row with exit 2") {
    const fs::path data = write_grid_csv();
    const RunResult result = run_cli("explain --data " + data.string() +
                                     " --target y --model linear --observation 9999");
    CHECK(result.exit_code == 2);
    CHECK(result.err.find("--observation") != std::string::npos);
    CHECK(result.err.find("out of range") != std::string::npos);
}

TEST_CASE("cli surfaces model failures with exit 3") {
    const fs::path data = write_xor_csv();
    const RunResult result =
        run_cli("explain --data " + data.string() +
                " --model \"external:sh -c 'exit 5'\" --observation 0");
    CHECK(result.exit_code == 3);
}

TEST_CASE("cli rejects zero permutations with exit 2") {
    const fs::path data = write_xor_csv();
    const RunResult result = run_cli("uncertainty --data " + data.string() + " --model " +
                                     kXorCommand + " --observation 3 --permutations 0");
    CHECK(result.exit_code == 2);
}

TEST_CASE("cli uncertainty over the parity model reproduces the two-order fixture") {
    // With p = 2 half of all seeds draw both orders; pick the first that does.
    const fs::path data = write_xor_csv();
    for (int seed = 0; seed < 64; ++seed) {
        const RunResult result =
            run_cli("uncertainty --data " + data.string() + " --model " + kXorCommand +
                    " --observation 3 --permutations 2 --seed " + std::to_string(seed));
        REQUIRE_MESSAGE(result.exit_code == 0, result.err);
        const json doc = json::parse(result.out);
        REQUIRE(doc["K"] == 2);
        const auto& x1 = doc["features"][0];
        const auto samples = x1["samples"].get<std::vector<double>>();
        if (samples == std::vector<double>{0.0, -0.5} ||
            samples == std::vector<double>{-0.5, 0.0}) {
            CHECK(x1["mean"].get<double>() == -0.25);
            CHECK(x1["q1"].get<double>() == -0.375);
            CHECK(x1["q3"].get<double>() == -0.125);
            CHECK(doc["features"][1]["mean"].get<double>() == -0.25);
            return;
        }
    }
    FAIL("no seed in [0, 64) drew both orders; permutation sampling looks broken");
}

TEST_CASE("cli uncertainty of an additive model degenerates to point whiskers") {
    const fs::path data = write_grid_csv();
    const RunResult result =
        run_cli("uncertainty --data " + data.string() +
                " --target y --model linear --observation 1,1 --permutations 8 --format json");
    REQUIRE_MESSAGE(result.exit_code == 0, result.err);
    const json doc = json::parse(result.out);
    for (const auto& feature : doc["features"]) {
        // Linear model: any spread is floating-point noise.
        CHECK(feature["q3"].get<double>() - feature["q1"].get<double>() <= 1e-10);
    }
}

TEST_CASE("cli renders waterfall svg") {
    const fs::path data = write_xor_csv();
    const RunResult result = run_cli("explain --data " + data.string() + " --model " +
                                     kXorCommand + " --observation 3 --format svg");
    REQUIRE_MESSAGE(result.exit_code == 0, result.err);
    CHECK(result.out.find("<svg") != std::string::npos);
    CHECK(result.out.find("x1:x2") != std::string::npos);
}

TEST_CASE("cli train writes a model file usable for explain") {
    const fs::path dir = fs::temp_directory_path();
    const fs::path data = dir / "ibd_cli_train.csv";
    {
        // A larger additive task so depth-1 boosting has room to split.
        std::ofstream out(data, std::ios::binary);
        out << "a,b,y\n";
        for (int r = 0; r < 60; ++r) {
            const double a = (r % 10) / 10.0;
            const double b = (r % 6) / 6.0;
            out << a << ',' << b << ',' << (a + b > 0.8 ? 1 : 0) << "\n";
        }
    }
    const fs::path model = dir / "ibd_cli_model.json";
    const RunResult trained =
        run_cli("train --data " + data.string() + " --target y --family gbm --depth 1" +
                " --trees 40 --out " + model.string());
    REQUIRE_MESSAGE(trained.exit_code == 0, trained.err);

    const RunResult explained = run_cli("explain --data " + data.string() + " --target y" +
                                        " --model " + model.string() + " --observation 3");
    REQUIRE_MESSAGE(explained.exit_code == 0, explained.err);
    const json doc = json::parse(explained.out);
    for (const auto& step : doc["steps"]) {
        CHECK(step["features"].size() == 1); // depth-1 model: no pair steps
    }
}

TEST_CASE("cli artifacts are byte-identical across reruns") {
    const fs::path data = write_grid_csv();
    const std::string flags = "explain --data " + data.string() +
                              " --target y --model linear --observation 1,1 --seed 9";
    const RunResult a = run_cli(flags);
    const RunResult b = run_cli(flags);
    REQUIRE(a.exit_code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("cli benchmark writes table and csv artifacts") {
    const fs::path dir = fs::temp_directory_path() / "ibd_cli_bench";
    fs::remove_all(dir);

    const fs::path manifest = fs::temp_directory_path() / "ibd_cli_manifest.json";
    {
        std::ofstream out(manifest, std::ios::binary);
        out << R"([{"name": "mini", "generator": "xor", "n": 120, "n_obs": 4, "seed": 3}])";
    }
    const RunResult result =
        run_cli("benchmark --manifest " + manifest.string() + " --out-dir " + dir.string() +
                " --gbm-trees 20 --rf-trees 10");
    REQUIRE_MESSAGE(result.exit_code == 0, result.err);
    CHECK(fs::exists(dir / "bench.txt"));
    CHECK(fs::exists(dir / "bench.csv"));
    const std::string csv = slurp(dir / "bench.csv");
    CHECK(csv.find("mini,rf,") != std::string::npos);
    CHECK(csv.find("mini,gbm1,") != std::string::npos);

    // A manifest entry pointing at a missing file is recorded, not fatal.
    {
        std::ofstream out(manifest, std::ios::binary);
        out << R"([{"name": "gone", "path": "/missing.csv", "target": "y"},
                   {"name": "mini", "generator": "xor", "n": 120, "n_obs": 2, "seed": 3}])";
    }
    const RunResult partial =
        run_cli("benchmark --manifest " + manifest.string() + " --out-dir " + dir.string() +
                " --gbm-trees 5 --rf-trees 5");
    CHECK(partial.exit_code == 0);
    CHECK(partial.err.find("warning") != std::string::npos);
}
