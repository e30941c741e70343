#ifndef BDK_MANIFEST_HPP
#define BDK_MANIFEST_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "bdk/errors.hpp"
#include "bdk/io.hpp"

namespace bdk {

/// Everything needed to re-run a command bit-identically: the exact argv,
/// resolved flags, the seed, and checksums of the artifacts it consumed.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::map<std::string, std::string> flags;
    std::uint64_t seed = 0;
    std::string checkpoint_checksum;               // hex; empty if no checkpoint used
    std::vector<std::string> boundary_checksums;   // hex, in flag order
    std::string build_id;
    double wall_time_seconds = 0.0;
    std::vector<std::string> outputs;
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["argv"] = m.argv;
    j["flags"] = m.flags;
    j["seed"] = m.seed;
    j["checkpoint_checksum"] = m.checkpoint_checksum;
    j["boundary_checksums"] = m.boundary_checksums;
    j["build_id"] = m.build_id;
    j["wall_time_seconds"] = m.wall_time_seconds;
    j["outputs"] = m.outputs;
    return j;
}

inline void save_manifest(const RunManifest& m, const std::string& path) {
    write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

inline RunManifest load_manifest(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("manifest parse error: ") + e.what());
    }
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.argv = j.at("argv").get<std::vector<std::string>>();
        m.flags = j.at("flags").get<std::map<std::string, std::string>>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.checkpoint_checksum = j.value("checkpoint_checksum", std::string{});
        m.boundary_checksums = j.value("boundary_checksums", std::vector<std::string>{});
        m.build_id = j.value("build_id", std::string{});
        m.wall_time_seconds = j.value("wall_time_seconds", 0.0);
        m.outputs = j.value("outputs", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("manifest field error: ") + e.what());
    }
    return m;
}

} // namespace bdk

#endif // BDK_MANIFEST_HPP
