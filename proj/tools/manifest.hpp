#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tortrust/attributes.hpp"

namespace tortrust::cli {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& p);

/// Run record written next to every output as `<output>.manifest.json`.
class RunManifest {
public:
    RunManifest(std::vector<std::string> command);

    void input(const std::filesystem::path& p);
    void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
    void output(const std::filesystem::path& p) { outputs_.push_back(p); }

    /// Writes one manifest per recorded output.
    void write() const;

private:
    Json to_json() const;

    std::vector<std::string> command_;
    std::string started_;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::map<std::string, std::uint64_t> seeds_;
    std::vector<std::filesystem::path> outputs_;
};

}  // namespace tortrust::cli
