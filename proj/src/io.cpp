#include "pmdtk/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "pmdtk/errors.hpp"

namespace pmdtk {

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    const auto parent = path.parent_path();
    if (!parent.empty()) {
        std::filesystem::create_directories(parent, ec);
        if (ec) {
            throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
        }
    }
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp + " for writing");
        }
        out << content;
        out.flush();
        if (!out) {
            throw IoError("write failed for " + tmp);
        }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename " + tmp + " to " + path.string() + ": " + ec.message());
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw IoError("read failed for " + path.string());
    }
    return ss.str();
}

} // namespace pmdtk
