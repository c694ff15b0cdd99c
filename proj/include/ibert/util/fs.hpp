#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ibert::util {

// Raised for unreadable/unwritable paths; the message carries the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);

// Writes to "<path>.tmp" in the same directory, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace ibert::util
