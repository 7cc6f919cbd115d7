#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "specwass/core.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args, const fs::path& out_dir) {
    const fs::path log = out_dir / "cli_log.txt";
    const std::string cmd = std::string(SPECWASS_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    res.output = ss.str();
    return res;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("specwass_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_config(const fs::path& path, const json& cfg) {
    std::ofstream out(path);
    out << cfg.dump(2);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cli converge emits the exact constant-field table") {
    const fs::path dir = fresh_dir("converge");
    const json cfg = {{"command", "converge"}, {"p", 1.0},
                      {"n_exponents", {1, 3, 5}}, {"K", 16},
                      {"seed", 4},
                      {"model", {{"kind", "constant"}, {"sigma", 2.0}}},
                      {"reference", {{"kind", "constant"}, {"sigma", 1.0}}}};
    write_config(dir / "cfg.json", cfg);
    const auto res = run_cli("converge --config " + (dir / "cfg.json").string() + " --out " + dir.string(), dir);
    REQUIRE(res.exit_code == 0);

    std::ifstream csv(dir / "converge.csv");
    std::string line;
    REQUIRE(std::getline(csv, line));  // header
    int rows = 0;
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        REQUIRE(fields.size() == 8);
        REQUIRE_THAT(std::stod(fields[3]), Catch::Matchers::WithinAbs(0.7978845608028654, 1e-12));
        ++rows;
    }
    REQUIRE(rows == 3);
    REQUIRE(fs::exists(dir / "converge.json"));
    REQUIRE(fs::exists(dir / "converge.dat"));
    REQUIRE(fs::exists(dir / "converge.gp"));
}

TEST_CASE("cli rejects configs with missing fields") {
    const fs::path dir = fresh_dir("badcfg");
    const json cfg = {{"command", "converge"}, {"p", 1.0},
                      {"model", {{"kind", "constant"}, {"sigma", 2.0}}}};  // K missing
    write_config(dir / "cfg.json", cfg);
    const auto res = run_cli("converge --config " + (dir / "cfg.json").string() + " --out " + dir.string(), dir);
    REQUIRE(res.exit_code == 2);
    REQUIRE(res.output.find("K") != std::string::npos);
}

TEST_CASE("cli optimal prints the profile constants") {
    const fs::path dir = fresh_dir("optimal");
    write_config(dir / "cfg.json", json{{"command", "optimal"}, {"p", 0.5}});
    const auto res = run_cli("optimal --config " + (dir / "cfg.json").string() + " --out " + dir.string(), dir);
    REQUIRE(res.exit_code == 0);
    REQUIRE(res.output.find("1.4142135623") != std::string::npos);

    const json header = json::parse(slurp(dir / "profile.json"));
    REQUIRE_THAT(header.at("C_p").get<double>(), Catch::Matchers::WithinAbs(1.4142135623730951, 1e-8));

    write_config(dir / "cfg1.json", json{{"command", "optimal"}, {"p", 1.0}});
    const auto res1 = run_cli("optimal --config " + (dir / "cfg1.json").string() + " --out " + dir.string(), dir);
    REQUIRE(res1.exit_code == 0);
    REQUIRE(res1.output.find("1.8378770664") != std::string::npos);

    write_config(dir / "cfg2.json", json{{"command", "optimal"}, {"p", 2.0}});
    const auto res2 = run_cli("optimal --config " + (dir / "cfg2.json").string() + " --out " + dir.string(), dir);
    REQUIRE(res2.exit_code == 0);
    const json h2 = json::parse(slurp(dir / "profile.json"));
    REQUIRE_THAT(h2.at("C_p").get<double>(), Catch::Matchers::WithinAbs(1.0, 1e-8));
}

TEST_CASE("cli simulate round-trips a constant ensemble") {
    const fs::path dir = fresh_dir("simulate");
    const json cfg = {{"command", "simulate"}, {"K", 8}, {"n_exponent", 3}, {"seed", 5},
                      {"csv", true},
                      {"model", {{"kind", "constant"}, {"sigma", 0.0}, {"x0", 0.25}}}};
    write_config(dir / "cfg.json", cfg);
    const auto res = run_cli("simulate --config " + (dir / "cfg.json").string() + " --out " + dir.string(), dir);
    REQUIRE(res.exit_code == 0);
    const auto ens = specwass::PathEnsemble::load_binary((dir / "ensemble.swpe").string());
    REQUIRE(ens.n_paths == 8);
    for (double s : ens.states) REQUIRE(s == 0.25);
    REQUIRE(fs::exists(dir / "ensemble.csv"));
    REQUIRE(fs::exists(dir / "paths.dat"));
}

TEST_CASE("cli verify passes with the default direction and fails when swapped") {
    const fs::path dir = fresh_dir("verify");
    const json cfg = {{"command", "verify"}, {"K", 2048}, {"seed", 12}, {"substeps", 8},
                      {"p_list", {0.5}}, {"value_p_list", {0.5}}, {"t_cut", 0.999}};
    write_config(dir / "cfg.json", cfg);
    const auto ok = run_cli("verify --config " + (dir / "cfg.json").string() + " --out " + dir.string(), dir);
    INFO(ok.output);
    REQUIRE(ok.exit_code == 0);
    const json rep = json::parse(slurp(dir / "verify.json"));
    REQUIRE(rep.at("pass").get<bool>());
    REQUIRE(rep.at("failures").empty());

    json swapped = cfg;
    swapped["swap_competitors_probe"] = true;
    write_config(dir / "swapped.json", swapped);
    const auto bad = run_cli("verify --config " + (dir / "swapped.json").string() + " --out " + dir.string(), dir);
    REQUIRE(bad.exit_code == 1);
    const json rep2 = json::parse(slurp(dir / "verify.json"));
    REQUIRE_FALSE(rep2.at("pass").get<bool>());
    REQUIRE_FALSE(rep2.at("failures").empty());
}

TEST_CASE("cli outputs are byte-identical across runs and worker counts") {
    const fs::path dir_a = fresh_dir("det_a");
    const fs::path dir_b = fresh_dir("det_b");
    const json cfg = {{"command", "converge"}, {"p", 1.0},
                      {"n_exponents", {2, 4}}, {"K", 512},
                      {"seed", 99}, {"substeps", 2},
                      {"model", {{"kind", "sin"}, {"x0", 0.0}}}};
    write_config(dir_a / "cfg.json", cfg);
    write_config(dir_b / "cfg.json", cfg);
    const auto ra = run_cli("converge --config " + (dir_a / "cfg.json").string() + " --out " + dir_a.string() +
                                " --workers 1",
                            dir_a);
    const auto rb = run_cli("converge --config " + (dir_b / "cfg.json").string() + " --out " + dir_b.string() +
                                " --workers 2",
                            dir_b);
    REQUIRE(ra.exit_code == 0);
    REQUIRE(rb.exit_code == 0);
    REQUIRE(slurp(dir_a / "converge.csv") == slurp(dir_b / "converge.csv"));
    REQUIRE(slurp(dir_a / "converge.json") == slurp(dir_b / "converge.json"));
    REQUIRE(slurp(dir_a / "converge.dat") == slurp(dir_b / "converge.dat"));
}

TEST_CASE("cli env var overrides the output directory") {
    const fs::path dir = fresh_dir("envvar");
    const fs::path env_dir = fresh_dir("envvar_target");
    write_config(dir / "cfg.json", json{{"command", "optimal"}, {"p", 2.0}});
    const std::string cmd = "SPECWASS_OUT=" + env_dir.string() + " " + std::string(SPECWASS_CLI_PATH) +
                            " optimal --config " + (dir / "cfg.json").string() + " --out " + dir.string() +
                            " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    REQUIRE(WEXITSTATUS(status) == 0);
    REQUIRE(fs::exists(env_dir / "profile.json"));
    REQUIRE_FALSE(fs::exists(dir / "profile.json"));
}
