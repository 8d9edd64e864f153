#include "hkembed/dataset_io.hpp"

#include <cmath>
#include <fstream>

#include "hkembed/binary_io.hpp"
#include "hkembed/errors.hpp"

namespace hkembed {

std::vector<ImageRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open dataset " + path.string());

  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "UOTD") throw FormatError("bad dataset magic in " + path.string());
  std::uint32_t version = 0, n = 0, h = 0, w = 0;
  if (!binio::get(in, version) || !binio::get(in, n) || !binio::get(in, h) || !binio::get(in, w)) {
    throw FormatError("truncated dataset header");
  }
  if (version != kDatasetVersion) throw FormatError("unsupported dataset version " + std::to_string(version));
  if (h == 0 || w == 0) throw FormatError("dataset declares an empty image grid");

  const std::uintmax_t expected = 20ull + 4ull * n + 4ull * n * h * w;
  const std::uintmax_t actual = std::filesystem::file_size(path);
  if (actual != expected) {
    throw FormatError("dataset length " + std::to_string(actual) + " does not match declared " +
                      std::to_string(expected));
  }

  std::vector<ImageRecord> images(n);
  for (auto& img : images) {
    img.height = h;
    img.width = w;
    if (!binio::get(in, img.label)) throw FormatError("truncated label block");
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    auto& img = images[i];
    img.pixels.resize(static_cast<std::size_t>(h) * w);
    if (!in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size() * 4))) {
      throw FormatError("truncated pixel block");
    }
    for (float p : img.pixels) {
      if (!std::isfinite(p) || p < 0.0f || p > 1.0f) {
        throw FormatError("image " + std::to_string(i) + " has an intensity outside [0,1]");
      }
    }
  }
  return images;
}

void write_dataset(const std::filesystem::path& path, std::span<const ImageRecord> images) {
  const std::uint32_t h = images.empty() ? 1 : static_cast<std::uint32_t>(images.front().height);
  const std::uint32_t w = images.empty() ? 1 : static_cast<std::uint32_t>(images.front().width);
  for (const auto& img : images) {
    img.validate();
    if (img.height != h || img.width != w) throw InvalidArgument("all images must share one shape");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write dataset " + path.string());
  out.write("UOTD", 4);
  binio::put<std::uint32_t>(out, kDatasetVersion);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(images.size()));
  binio::put<std::uint32_t>(out, h);
  binio::put<std::uint32_t>(out, w);
  for (const auto& img : images) binio::put<std::uint32_t>(out, img.label);
  for (const auto& img : images) {
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size() * 4));
  }
  if (!out) throw IoFailure("failed writing dataset " + path.string());
}

}  // namespace hkembed
