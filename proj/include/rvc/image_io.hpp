#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "rvc/image.hpp"

namespace rvc {

/// Binary portable bitmap (P4); 1 bits are black.
std::string encode_pbm(const BinaryImage& img);
BinaryImage decode_pbm(std::string_view bytes);

/// Binary portable graymap (P5, maxval 255) holding round(prob * 255).
/// Decoding clamps into [epsilon, 1 - epsilon].
std::string encode_pgm(const MeanImage& img);
MeanImage decode_pgm(std::string_view bytes, double epsilon = 1e-4);

void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

BinaryImage load_pbm(const std::filesystem::path& path);
void save_pbm(const std::filesystem::path& path, const BinaryImage& img);
void save_pgm(const std::filesystem::path& path, const MeanImage& img);

/// FNV-1a digest of the pixel grid; a stable image identifier.
std::string image_digest(const BinaryImage& img);

std::string base64_encode(std::string_view bytes);

}  // namespace rvc
