#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "odisphere/multiscale.hpp"
#include "odisphere/raster.hpp"
#include "odisphere/saliency.hpp"

namespace odisphere {

// PFM: "Pf" (1 channel) or "PF" (3 channels), width height, scale -1.0
// (little-endian), then float32 rows from bottom to top.
std::vector<std::uint8_t> encode_pfm(const Raster& img);
Raster decode_pfm(const std::vector<std::uint8_t>& bytes);
void write_pfm(const std::filesystem::path& path, const Raster& img);
Raster read_pfm(const std::filesystem::path& path);

/// 8-bit PNG as 1 (gray) or 3 (RGB) channels scaled to [0, 1]. Alpha is dropped.
Raster read_png(const std::filesystem::path& path);

/// Writes a single-channel map as 8-bit gray PNG, linearly scaled so the
/// maximum maps to 255 (for viewing only).
void write_png_preview(const std::filesystem::path& path, const Raster& map);

/// Reads `.pfm` or `.png` by extension.
Raster read_image(const std::filesystem::path& path);

// OSB1 parameter files; layout documented in docs/formats.md.
enum class Osb1Kind : std::uint32_t { bias_grid = 1, attention = 2 };

std::vector<std::uint8_t> encode_osb1(const BiasGrid& bias);
std::vector<std::uint8_t> encode_osb1(const AttentionParams& params);
Osb1Kind peek_osb1_kind(const std::vector<std::uint8_t>& bytes);
BiasGrid decode_osb1_bias(const std::vector<std::uint8_t>& bytes);
AttentionParams decode_osb1_attention(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

}  // namespace odisphere
