#pragma once

#include <teamprod/error.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace teamprod::fs {

namespace stdfs = std::filesystem;

inline std::string read_file(const stdfs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::unreadable_source, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to a sibling temporary and renames over the target, so readers
/// never observe a partially written file.
inline void write_file_atomic(const stdfs::path& path, std::string_view content) {
    if (path.has_parent_path()) stdfs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::internal, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorKind::internal, "short write to " + tmp.string());
    }
    stdfs::rename(tmp, path);
}

}  // namespace teamprod::fs
