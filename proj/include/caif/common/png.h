#pragma once

#include "caif/envs/observation.h"

#include <cstdint>
#include <filesystem>
#include <span>

namespace caif
{

/// Writes an 8-bit RGB image (row-major, interleaved). Throws std::runtime_error on I/O failure.
void write_png(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> rgb);
void write_png(const std::filesystem::path& path, const envs::Observation& observation);

} // namespace caif
