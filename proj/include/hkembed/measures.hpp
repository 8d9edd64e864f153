#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hkembed {

/** A grayscale raster with intensities in [0,1], stored row-major. */
struct ImageRecord {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;
  std::uint32_t label = 0;

  float at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
  double intensity_sum() const;
  /** Throws InvalidArgument when the invariants (shape, finite values in [0,1]) fail. */
  void validate() const;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double squared_distance(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/**
 * Discrete nonnegative measure on [0,1]^2: distinct support points with
 * strictly positive masses.
 */
class GridMeasure {
 public:
  GridMeasure() = default;
  /** Validates the support; throws InvalidMeasure on any violated invariant. */
  GridMeasure(std::vector<Point2> coords, std::vector<double> weights);

  static GridMeasure dirac(Point2 at, double mass = 1.0) { return GridMeasure({at}, {mass}); }

  std::size_t size() const noexcept { return coords_.size(); }
  bool empty() const noexcept { return coords_.empty(); }
  std::span<const Point2> coords() const noexcept { return coords_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double total_mass() const noexcept { return total_mass_; }

  /** Same support, every weight multiplied by `factor` (> 0). */
  GridMeasure scaled(double factor) const;

 private:
  std::vector<Point2> coords_;
  std::vector<double> weights_;
  double total_mass_ = 0.0;
};

struct MeasureConversionParams {
  bool normalize = true;
  double support_threshold = 1e-6;
  double mass_calibration = 1.0;
};

/**
 * Pixel (row, col) is placed at its center ((col+0.5)/W, (H-row-0.5)/H):
 * row 0 is the top of the image and the y axis points up.
 */
Point2 pixel_center(std::size_t row, std::size_t col, std::size_t height, std::size_t width);

GridMeasure image_to_measure(const ImageRecord& img, const MeasureConversionParams& params);

/** Mean over images of the summed intensities. */
double dataset_mean_mass(std::span<const ImageRecord> dataset);

/**
 * Rasterized indicators of disks of the given radius centered at
 * (0.5, 0.5) + translations[i]; record i carries label i.
 */
std::vector<ImageRecord> make_disk_dataset(std::size_t n, double radius, std::span<const Point2> translations,
                                           std::size_t grid_side);

/** Pixel intensities as doubles, in storage order. */
std::vector<double> flatten(const ImageRecord& img);

}  // namespace hkembed
