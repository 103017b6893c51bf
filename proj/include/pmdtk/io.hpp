#pragma once

#include <filesystem>
#include <string>

namespace pmdtk {

/// Format a double with up to 12 significant digits, shortest form
/// ("%.12g"). Used for every numeric CSV/JSON field so that identical runs
/// produce byte-identical files.
std::string format_double(double value);

/// Write `content` atomically: to a sibling temp file, then rename over
/// `path`. Creates parent directories. Throws IoError on any failure.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

/// Read a whole file; IoError when unreadable.
std::string read_text(const std::filesystem::path& path);

} // namespace pmdtk
