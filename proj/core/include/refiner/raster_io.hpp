#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "refiner/types.hpp"

namespace refiner {

using Bytes = std::vector<std::uint8_t>;

// PNG codecs. Decoders throw ParseError on corrupt or unsupported input.

Bytes encode_png_rgb(const RgbImage& image);
/// Accepts gray, gray+alpha, palette, RGB and RGBA at any bit depth; alpha is dropped.
RgbImage decode_png_rgb(std::span<const std::uint8_t> png);

/// Single-channel 16-bit PNG, sample = round(65535 * s).
Bytes encode_saliency_png16(const SaliencyMap& map);
/// Single-channel 8-bit PNG, sample = round(255 * s).
Bytes encode_saliency_png8(const SaliencyMap& map);
/// Single-channel PNG of depth 8 or 16; samples are divided by the depth's maximum.
SaliencyMap decode_saliency_png(std::span<const std::uint8_t> png);

/// 1-bit grayscale PNG.
Bytes encode_mask_png(const BinaryMask& mask);
/// Any single-channel PNG; a non-zero sample is a set bit.
BinaryMask decode_mask_png(std::span<const std::uint8_t> png);

/// The map as it survives a 16-bit PNG round trip.
SaliencyMap quantize16(const SaliencyMap& map);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Resolves an ImageRef to pixels, decoding the file when the ref points at disk.
RgbImage load_pixels(const ImageRef& image);

/// Full-precision map sidecar: {"width", "height", "values": [...]}.
void write_saliency_sidecar(const std::filesystem::path& path, const SaliencyMap& map);
SaliencyMap read_saliency_sidecar(const std::filesystem::path& path);
/// Dispatches on extension: ".json" reads a sidecar, anything else is decoded as PNG.
SaliencyMap read_saliency_file(const std::filesystem::path& path);

// Content hashes over canonical raw payloads, independent of PNG compression.
std::string content_hash(const RgbImage& image);
std::string content_hash(const SaliencyMap& map);
std::string content_hash(const BinaryMask& mask);

}  // namespace refiner
