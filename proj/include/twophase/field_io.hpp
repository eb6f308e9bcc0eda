#pragma once

#include <filesystem>
#include <string>

#include "twophase/field.hpp"

namespace twophase {

/// `.df` files: one JSON header line {"dim","cells","h","origin"} followed by
/// little-endian float64 values in row-major cell order.
DensityField read_field(const std::filesystem::path& path);
void write_field(const DensityField& field, const std::filesystem::path& path);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

}  // namespace twophase
