#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "hkembed/measures.hpp"

namespace hkembed::testutil {

/** Random measure on distinct cells of a side x side grid, masses uniform in [lo, hi]. */
inline GridMeasure random_grid_measure(std::mt19937_64& rng, std::size_t points, std::size_t side, double lo = 0.2,
                                       double hi = 1.0) {
  std::uniform_int_distribution<std::size_t> cell(0, side * side - 1);
  std::uniform_real_distribution<double> mass(lo, hi);
  std::set<std::size_t> cells;
  while (cells.size() < points) cells.insert(cell(rng));
  std::vector<Point2> coords;
  std::vector<double> weights;
  for (std::size_t c : cells) {
    coords.push_back(pixel_center(c / side, c % side, side, side));
    weights.push_back(mass(rng));
  }
  return GridMeasure(std::move(coords), std::move(weights));
}

inline GridMeasure normalized(const GridMeasure& m) { return m.scaled(1.0 / m.total_mass()); }

/** Random sparse image; roughly `fill` of the pixels are lit. */
inline ImageRecord random_image(std::mt19937_64& rng, std::size_t side, double fill, std::uint32_t label = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageRecord img;
  img.height = side;
  img.width = side;
  img.label = label;
  img.pixels.resize(side * side);
  for (auto& p : img.pixels) p = u(rng) < fill ? static_cast<float>(0.05 + 0.95 * u(rng)) : 0.0f;
  img.pixels[side * side / 2] = 1.0f;
  return img;
}

}  // namespace hkembed::testutil
