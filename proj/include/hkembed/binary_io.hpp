#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "hkembed/errors.hpp"

// Little-endian scalar helpers shared by the dataset and cache formats.
namespace hkembed::binio {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& value) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) return false;
  std::memcpy(&value, buf, sizeof(T));
  return true;
}

}  // namespace hkembed::binio
