#include "manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include "tortrust/error.hpp"
#include "tortrust/io.hpp"

namespace tortrust::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void hash_into(EVP_MD_CTX* ctx, const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
}

}  // namespace

std::string sha256_file(const std::filesystem::path& p) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 unavailable");
    if (std::filesystem::is_directory(p)) {
        // Directory digest: sorted relative names and contents of its regular files.
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::recursive_directory_iterator(p))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const std::string rel = std::filesystem::relative(f, p).generic_string();
            EVP_DigestUpdate(ctx.get(), rel.data(), rel.size() + 1);
            hash_into(ctx.get(), f);
        }
    } else {
        hash_into(ctx.get(), p);
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

RunManifest::RunManifest(std::vector<std::string> command) : command_(std::move(command)), started_(utc_now()) {}

void RunManifest::input(const std::filesystem::path& p) { inputs_.emplace_back(p.string(), sha256_file(p)); }

Json RunManifest::to_json() const {
    Json inputs = Json::array();
    for (const auto& [path, digest] : inputs_) inputs.push_back({{"path", path}, {"sha256", digest}});
    Json outputs = Json::array();
    for (const auto& p : outputs_) outputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    return Json{{"tool", "tortrust"},     {"version", kVersion}, {"command", command_},
                {"inputs", inputs},       {"seeds", seeds_},     {"outputs", outputs},
                {"started", started_},    {"finished", utc_now()}};
}

void RunManifest::write() const {
    const std::string text = dump_json(to_json());
    for (const auto& p : outputs_) {
        // Sibling file, also for directory outputs, so the output itself stays byte-stable.
        std::filesystem::path m = p.has_filename() ? p : p.parent_path();
        m += ".manifest.json";
        write_file_atomic(m, text);
    }
}

}  // namespace tortrust::cli
