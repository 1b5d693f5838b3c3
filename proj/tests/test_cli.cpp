#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "facetell/experiment.hpp"

#ifndef FACETELL_CLI
#error "FACETELL_CLI must name the command-line binary"
#endif

using namespace facetell;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "facetell_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(FACETELL_CLI) + " " + args + " > " + (kWork / "stdout.txt").string() +
                            " 2> " + (kWork / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

struct Workdir {
    Workdir() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
        write(kWork / "small.json", R"({"layout": [{"name": "A", "apps": ["a1", "a2"]}, {"name": "B", "apps": ["b1"]}],
 "dataset": {"frames_per_app": 12, "train_sessions": 1, "test_sessions": 1}, "seed": 3})");
    }
    ~Workdir() { fs::remove_all(kWork); }
};

std::string p(const char* name) { return (kWork / name).string(); }

}  // namespace

TEST_CASE("exit codes") {
    Workdir w;
    CHECK(run("") == 2);
    CHECK(run("no-such-command") == 2);
    CHECK(run("hlc --out x.csv") == 2);
    CHECK(run("attack --model " + p("missing.json") + " --frames " + p("") + " --out " + p("x.csv")) == 2);
    write(kWork / "bad.json", R"({"hlc": {"sigma_s": 2.0}})");
    CHECK(run("print-config --config " + p("bad.json")) == 1);
    CHECK(slurp(kWork / "stderr.txt").find("sigma_s") != std::string::npos);
    CHECK(run("--help") == 0);
}

TEST_CASE("simulate-weights matches the library") {
    Workdir w;
    REQUIRE(run("simulate-weights --out " + p("w.csv")) == 0);
    const auto curves = scene::simulate_weight_curves(experiment::default_config().weights);
    std::ostringstream expected;
    scene::write_weight_curves(expected, curves);
    CHECK(slurp(kWork / "w.csv") == expected.str());
}

TEST_CASE("mdc matches the library") {
    Workdir w;
    REQUIRE(run("mdc --seed 5 --fractions 0.0625,1 --out " + p("m.csv")) == 0);
    auto c = experiment::default_config();
    c.seed = 5;
    c.mdc.fractions = {0.0625, 1.0};
    std::ostringstream expected;
    analysis::write_mdc_table(expected, analysis::mdc_search(c.scene, experiment::mdc_options(c)));
    CHECK(slurp(kWork / "m.csv") == expected.str());
    CHECK(slurp(kWork / "stdout.txt").find("boundary=") != std::string::npos);
}

TEST_CASE("dataset, training and attack") {
    Workdir w;
    const std::string cfg = " --config " + p("small.json");
    REQUIRE(run("gen-dataset" + cfg + " --out " + p("ds")) == 0);
    const auto rows = experiment::read_manifest(kWork / "ds");
    CHECK(rows.size() == 72);

    REQUIRE(run("train" + cfg + " --dataset " + p("ds") + " --out " + p("model.json")) == 0);
    CHECK(fs::exists(kWork / "model.loss.csv"));
    const auto model = classifier::load_model(kWork / "model.json");
    CHECK(model.layout.total() == 3);

    REQUIRE(run("attack --model " + p("model.json") + " --frames " + p("ds") + " --out " + p("raw.csv") +
                " --truth-out " + p("truth.csv")) == 0);
    CHECK(slurp(kWork / "stdout.txt").rfind("accuracy=", 0) == 0);
    REQUIRE(run("attack --hlc --model " + p("model.json") + " --frames " + p("ds") + " --out " + p("hlc.csv")) == 0);
    REQUIRE(run("hlc --in " + p("raw.csv") + " --out " + p("hlc2.csv")) == 0);
    CHECK(slurp(kWork / "hlc.csv") == slurp(kWork / "hlc2.csv"));

    REQUIRE(run("sweep --pred " + p("raw.csv") + " --truth " + p("truth.csv") + " --out " + p("sweep.csv")) == 0);
    CHECK(slurp(kWork / "sweep.csv").rfind("sigma_s,T_s,sigma_e,T_e,accuracy\n", 0) == 0);

    // Frames without a manifest are read in file-name order.
    fs::create_directories(kWork / "loose");
    for (const auto& r : rows) {
        if (r.sequence == 1) fs::copy_file(r.file, kWork / "loose" / r.file.filename());
    }
    REQUIRE(run("attack --model " + p("model.json") + " --frames " + p("loose") + " --out " + p("loose.csv")) == 0);
    CHECK(slurp(kWork / "loose.csv") == slurp(kWork / "raw.csv"));
    CHECK(slurp(kWork / "stdout.txt").find("accuracy=") == std::string::npos);

    // Truth labels outside the model's layout.
    write(kWork / "small3.json", R"({"dataset": {"frames_per_app": 2, "train_sessions": 0, "test_sessions": 1}})");
    REQUIRE(run("gen-dataset --config " + p("small3.json") + " --out " + p("big")) == 0);
    CHECK(run("attack --model " + p("model.json") + " --frames " + p("big") + " --out " + p("x.csv")) == 1);
}
