// End-to-end checks of the bdk binary: exit-code families, manifest
// emission, and bitwise replay from a recorded manifest.

#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <string>

#include "bdk/io.hpp"
#include "bdk/manifest.hpp"
#include "bdk/noise_model.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = BDK_CLI_PATH;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

} // namespace

TEST_CASE("cli: unknown flags are rejected with the validation exit code") {
    CHECK(run("gen-data --definitely-not-a-flag 3") == 3);
    CHECK(run("no-such-subcommand") == 3);
}

TEST_CASE("cli: missing input files exit with the io code") {
    TempDir dir("bdk_cli_io");
    CHECK(run("--out " + dir.str() + " train --data " + dir.str() + "/absent.bdkd --epochs 1") == 2);
    CHECK(run("--out " + dir.str() + " report --manifest " + dir.str() + "/absent.json") == 2);
}

TEST_CASE("cli: gen-data emits dataset, preview, and manifest; replay is bitwise") {
    TempDir dir("bdk_cli_gen");
    REQUIRE(run("--out " + dir.str() + " --seed 9 gen-data --n 24 --side 8") == 0);
    CHECK(fs::exists(dir.path / "dataset.bdkd"));
    CHECK(fs::exists(dir.path / "dataset_preview.ppm"));
    REQUIRE(fs::exists(dir.path / "gen-data.manifest.json"));

    auto manifest = bdk::load_manifest((dir.path / "gen-data.manifest.json").string());
    CHECK(manifest.command == "gen-data");
    CHECK(manifest.seed == 9);
    CHECK(manifest.flags.count("--n") == 1);

    const std::string first = bdk::read_text_file((dir.path / "dataset.bdkd").string());

    // replay the recorded argv into a fresh directory
    TempDir dir2("bdk_cli_gen_replay");
    std::string argv_joined;
    for (std::size_t i = 1; i < manifest.argv.size(); ++i) {
        std::string piece = manifest.argv[i];
        if (piece == dir.str()) piece = dir2.str();
        argv_joined += piece + " ";
    }
    REQUIRE(run(argv_joined) == 0);
    const std::string second = bdk::read_text_file((dir2.path / "dataset.bdkd").string());
    CHECK(first == second);
}

TEST_CASE("cli: tiny pipeline runs and the edit validates t_m against the boundary") {
    TempDir dir("bdk_cli_pipe");
    const std::string base = "--out " + dir.str() + " --seed 4 ";
    REQUIRE(run(base + "gen-data --n 40 --side 8") == 0);
    REQUIRE(run(base + "train --data " + dir.str() +
                "/dataset.bdkd --epochs 2 --T 20 --hidden 24 --bottleneck 8 --time-embed 8") == 0);
    REQUIRE(run(base + "fit-boundary --checkpoint " + dir.str() + "/checkpoint.bdkc --data " +
                dir.str() + "/dataset.bdkd --tm 10 --attribute marker --latents 40 --epochs 5") == 0);
    CHECK(fs::exists(dir.path / "boundary_marker_epsilon.bdy"));

    // t_m mismatch between flag and boundary file: validation error
    CHECK(run(base + "edit --checkpoint " + dir.str() + "/checkpoint.bdkc --data " + dir.str() +
              "/dataset.bdkd --boundary " + dir.str() +
              "/boundary_marker_epsilon.bdy --zeta 1.0 --tm 15") == 3);

    // matching t_m goes through and writes outputs plus a manifest
    REQUIRE(run(base + "edit --checkpoint " + dir.str() + "/checkpoint.bdkc --data " + dir.str() +
                "/dataset.bdkd --boundary " + dir.str() +
                "/boundary_marker_epsilon.bdy --zeta 1.0 --tm 10") == 0);
    CHECK(fs::exists(dir.path / "edit.ppm"));
    CHECK(fs::exists(dir.path / "edit_report.json"));
    auto manifest = bdk::load_manifest((dir.path / "edit.manifest.json").string());
    CHECK(manifest.checkpoint_checksum.size() == 16);
    REQUIRE(manifest.boundary_checksums.size() == 1);

    // the recorded checksum matches the artifact on disk
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(
                      bdk::checkpoint_file_checksum((dir.path / "checkpoint.bdkc").string())));
    CHECK(manifest.checkpoint_checksum == buf);
}

TEST_CASE("cli: verification subcommands succeed on a clean build") {
    TempDir dir("bdk_cli_verify");
    CHECK(run("--out " + dir.str() + " verify-mixing") == 0);
}

TEST_CASE("cli: edit replay from the manifest is bitwise reproducible") {
    TempDir dir("bdk_cli_replay");
    const std::string base = "--out " + dir.str() + " --seed 21 ";
    REQUIRE(run(base + "gen-data --n 30 --side 8") == 0);
    REQUIRE(run(base + "train --data " + dir.str() +
                "/dataset.bdkd --epochs 2 --T 16 --hidden 16 --bottleneck 8 --time-embed 4") == 0);
    REQUIRE(run(base + "fit-boundary --checkpoint " + dir.str() + "/checkpoint.bdkc --data " +
                dir.str() + "/dataset.bdkd --tm 8 --attribute marker --latents 30 --epochs 5") == 0);
    REQUIRE(run(base + "edit --checkpoint " + dir.str() + "/checkpoint.bdkc --data " + dir.str() +
                "/dataset.bdkd --boundary " + dir.str() +
                "/boundary_marker_epsilon.bdy --zeta 0.5 --tm 8") == 0);
    const std::string first = bdk::read_text_file((dir.path / "edit.ppm").string());

    auto manifest = bdk::load_manifest((dir.path / "edit.manifest.json").string());
    std::string argv_joined;
    for (std::size_t i = 1; i < manifest.argv.size(); ++i) argv_joined += manifest.argv[i] + " ";
    REQUIRE(run(argv_joined) == 0);  // overwrites in place with identical inputs
    const std::string second = bdk::read_text_file((dir.path / "edit.ppm").string());
    CHECK(first == second);
}
