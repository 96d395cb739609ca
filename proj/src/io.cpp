#include "tortrust/io.hpp"

#include <fstream>
#include <sstream>

#include "tortrust/error.hpp"

namespace tortrust {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + p.string());
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& p, std::string_view contents) {
    std::filesystem::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw IoError("cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, p, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot rename " + tmp.string() + " to " + p.string() + ": " + ec.message());
    }
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

Json parse_json(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        // nlohmann reports the byte after the offending token.
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        auto [line, col] = line_column(text, at);
        throw ParseError(e.what(), line, col);
    }
}

Json load_json(const std::filesystem::path& p) {
    const std::string text = read_file(p);
    try {
        return parse_json(text);
    } catch (const ParseError& e) {
        throw ParseError(p.string() + ":" + e.what());
    }
}

std::string dump_json(const Json& j) { return j.dump(1, '\t') + "\n"; }

}  // namespace tortrust
