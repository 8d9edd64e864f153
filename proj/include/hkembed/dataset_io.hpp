#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hkembed/measures.hpp"

namespace hkembed {

/**
 * Canonical dataset container ("UOTD", version 1), little-endian:
 *   magic "UOTD" | u32 version | u32 N | u32 H | u32 W |
 *   N x u32 labels | N*H*W x f32 intensities (row-major per image)
 */
inline constexpr std::uint32_t kDatasetVersion = 1;

std::vector<ImageRecord> read_dataset(const std::filesystem::path& path);

/** All images must share one H x W shape. */
void write_dataset(const std::filesystem::path& path, std::span<const ImageRecord> images);

}  // namespace hkembed
