#pragma once

// Binary checkpoint (PNCK) and dataset (FSDS) files. All integers and floats
// are little-endian; every file ends with a CRC32 of the preceding bytes.
//
// PNCK: "PNCK" u32 version, u32 tensor count, then per tensor
//       u16 name length, name bytes, u8 rank, u32 dims[rank], f64 values.
// FSDS: "FSDS" u32 version, u8 split, u32 class count, then per class
//       u32 class_id, u32 image count, images (u16 H, u16 W, u16 C, f64 HWC
//       pixels), u8 mask flag and, if set, one u8 per pixel for each image,
//       u32 stylized block count and per block u32 image index, u32 variant
//       count, variant images.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shapeshot/nn.hpp"
#include "shapeshot/synthdata.hpp"

namespace shapeshot {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kDatasetVersion = 1;

std::string version_string();

std::uint32_t crc32_of(const std::vector<std::uint8_t>& bytes, std::size_t length);

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedParameter>& tensors);
// Throws FormatError on bad magic, unknown version, truncation or CRC mismatch.
std::vector<NamedParameter> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_dataset(const ClassDataset& dataset);
ClassDataset decode_dataset(const std::vector<std::uint8_t>& bytes);

// IoError when the file is missing or cannot be written.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedParameter>& tensors);
std::vector<NamedParameter> load_checkpoint(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const ClassDataset& dataset);
ClassDataset load_dataset(const std::filesystem::path& path);

}  // namespace shapeshot
