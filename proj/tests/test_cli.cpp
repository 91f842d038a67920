#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "spill_test_cli";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Runs the CLI with `args` inside kDir; returns the exit code.
int spill(const std::string& args, std::string* output = nullptr) {
    fs::create_directories(kDir);
    const auto log = kDir / "last.log";
    const std::string cmd =
        "cd '" + kDir.string() + "' && '" SPILL_CLI_PATH "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) *output = slurp(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void make_dataset() {
    static bool done = false;
    if (done) return;
    REQUIRE(spill("--seed 4 --out ds.jsonl synth --intents 4 --per-intent 20 --dim 8") == 0);
    done = true;
}

}  // namespace

TEST_CASE("help and version exit cleanly") {
    std::string out;
    CHECK(spill("--help", &out) == 0);
    CHECK(out.find("simulate") != std::string::npos);
    CHECK(spill("--version", &out) == 0);
}

TEST_CASE("usage errors exit with 1") {
    CHECK(spill("") == 1);
    CHECK(spill("simulate --bogus") == 1);
    CHECK(spill("simulate --dist cauchy") == 1);
    CHECK(spill("--format xml simulate") == 1);
    CHECK(spill("pipeline --data does-not-exist.jsonl") == 1);
}

TEST_CASE("simulate rejects k at or above the smallest cluster before computing") {
    std::string out;
    CHECK(spill("--out never.json simulate --k 50 --runs 50", &out) == 1);
    CHECK(out.find("k=50") != std::string::npos);
    CHECK_FALSE(fs::exists(kDir / "never.json"));
    CHECK(spill("simulate --k 10 --replacement with --size-min 5 --size-max 8 --runs 1 --dim 4") == 0);
}

TEST_CASE("invalid dataset content exits with 1") {
    fs::create_directories(kDir);
    std::ofstream(kDir / "bad.jsonl") << R"({"id":"a","text":"x","embedding":[1,2]})"
                                      << "\n"
                                      << R"({"id":"b","text":"y","embedding":[1]})"
                                      << "\n";
    std::string out;
    CHECK(spill("eval --data bad.jsonl", &out) == 1);
    CHECK(out.find("dimension mismatch") != std::string::npos);
}

TEST_CASE("unwritable output exits with 2") {
    make_dataset();
    CHECK(spill("--out /nonexistent-dir-spill/r.json eval --data ds.jsonl --runs 1") == 2);
}

TEST_CASE("simulate writes report, manifest and csv") {
    REQUIRE(spill("--seed 7 --out sim.json simulate --axis dim --values 8,16 --k 3 --strategy rd,topk --runs 2 "
                  "--csv sim.csv") == 0);
    const auto report = nlohmann::json::parse(slurp(kDir / "sim.json"));
    CHECK(report.at("kind") == "sweep");
    CHECK(report.at("points").size() == 4);
    const auto manifest = nlohmann::json::parse(slurp(kDir / "sim.json.manifest.json"));
    CHECK(manifest.at("command") == "simulate");
    CHECK(manifest.at("seeds").at("rng_seed") == 7);
    CHECK(manifest.contains("created_at"));
    const auto csv = slurp(kDir / "sim.csv");
    CHECK(csv.rfind("axis_value,strategy,k,var_mean", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("reports are byte identical across invocations") {
    make_dataset();
    const std::vector<std::string> commands{
        "--seed 3 --out {} simulate --k 4 --runs 3 --dim 16",
        "--seed 3 --out {} pipeline --data ds.jsonl --ablation full --selector oracle --runs 2 --selections-out {}.sel",
        "--seed 3 --out {} pipeline --data ds.jsonl --ablation stage1 --runs 2",
        "--seed 3 --out {} sweep-hparams --data ds.jsonl --values 10,20 --runs 2 --ablation ground-truth",
        "--seed 3 --out {} eval --data ds.jsonl --runs 2",
        "--seed 3 --format csv --out {} eval --data ds.jsonl --runs 2",
    };
    for (const auto& c : commands) {
        auto with = [&c](const std::string& name) {
            std::string s = c;
            for (auto pos = s.find("{}"); pos != std::string::npos; pos = s.find("{}")) s.replace(pos, 2, name);
            return s;
        };
        REQUIRE_MESSAGE(spill(with("a.out")) == 0, c);
        REQUIRE_MESSAGE(spill(with("b.out")) == 0, c);
        CHECK_MESSAGE(slurp(kDir / "a.out") == slurp(kDir / "b.out"), c);
    }
    CHECK(spill("--out stats.json stats --data ds.jsonl --selections a.out.sel") == 0);
    const auto stats = nlohmann::json::parse(slurp(kDir / "stats.json"));
    CHECK(stats.at("correct_ratio") == 100.0);
}

TEST_CASE("pipeline prints a table row") {
    make_dataset();
    std::string out;
    REQUIRE(spill("--out p.json pipeline --data ds.jsonl --ablation plain --runs 2", &out) == 0);
    CHECK(out.find("NMI ") != std::string::npos);
    CHECK(out.find("Acc ") != std::string::npos);
    CHECK(spill("sweep-hparams --data ds.jsonl --values 4,21 --ablation ground-truth") == 1);
}
