#include "hkembed/measures.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hkembed/errors.hpp"

namespace hkembed {

namespace {

// Neumaier-compensated sum; weights are summed in index order so the result is reproducible.
double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

}  // namespace

double ImageRecord::intensity_sum() const {
  double sum = 0.0;
  for (float p : pixels) sum += p;
  return sum;
}

void ImageRecord::validate() const {
  if (height == 0 || width == 0) throw InvalidArgument("image has an empty grid");
  if (pixels.size() != height * width) {
    throw InvalidArgument("image pixel count " + std::to_string(pixels.size()) + " does not match " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
  for (float p : pixels) {
    if (!std::isfinite(p) || p < 0.0f || p > 1.0f) throw InvalidArgument("pixel intensity outside [0,1]");
  }
}

GridMeasure::GridMeasure(std::vector<Point2> coords, std::vector<double> weights)
    : coords_(std::move(coords)), weights_(std::move(weights)) {
  if (coords_.empty()) throw InvalidMeasure("measure has no support points");
  if (coords_.size() != weights_.size()) throw InvalidMeasure("coordinate and weight counts differ");
  for (const auto& p : coords_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0) {
      throw InvalidMeasure("support point outside the unit square");
    }
  }
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidMeasure("weights must be finite and strictly positive");
  }
  std::vector<Point2> sorted = coords_;
  std::sort(sorted.begin(), sorted.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidMeasure("support points must be pairwise distinct");
  }
  total_mass_ = compensated_sum(weights_);
}

GridMeasure GridMeasure::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw InvalidArgument("scale factor must be positive");
  std::vector<double> w(weights_);
  for (double& v : w) v *= factor;
  return GridMeasure(coords_, std::move(w));
}

Point2 pixel_center(std::size_t row, std::size_t col, std::size_t height, std::size_t width) {
  return {(static_cast<double>(col) + 0.5) / static_cast<double>(width),
          (static_cast<double>(height - row) - 0.5) / static_cast<double>(height)};
}

GridMeasure image_to_measure(const ImageRecord& img, const MeasureConversionParams& params) {
  img.validate();
  if (!(params.support_threshold >= 0.0)) throw InvalidArgument("support threshold must be nonnegative");
  if (!(params.mass_calibration > 0.0) || !std::isfinite(params.mass_calibration)) {
    throw InvalidArgument("mass calibration must be positive");
  }

  std::vector<Point2> coords;
  std::vector<double> weights;
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const double v = img.at(r, c);
      if (v > params.support_threshold) {
        coords.push_back(pixel_center(r, c, img.height, img.width));
        weights.push_back(v);
      }
    }
  }
  if (coords.empty()) throw AllMassBelowThreshold("every pixel is at or below the support threshold");

  const double divisor = params.normalize ? compensated_sum(weights) : params.mass_calibration;
  for (double& w : weights) w /= divisor;
  return GridMeasure(std::move(coords), std::move(weights));
}

double dataset_mean_mass(std::span<const ImageRecord> dataset) {
  if (dataset.empty()) throw EmptyDataset("cannot compute the mean mass of an empty dataset");
  double total = 0.0;
  for (const auto& img : dataset) total += img.intensity_sum();
  return total / static_cast<double>(dataset.size());
}

std::vector<ImageRecord> make_disk_dataset(std::size_t n, double radius, std::span<const Point2> translations,
                                           std::size_t grid_side) {
  if (translations.size() != n) throw InvalidArgument("translation count does not match n");
  if (!(radius > 0.0 && radius < 0.5)) throw InvalidArgument("radius must lie in (0, 0.5)");
  if (grid_side < 8) throw InvalidArgument("grid side must be at least 8");

  std::vector<ImageRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 center{0.5 + translations[i].x, 0.5 + translations[i].y};
    if (center.x - radius < 0.0 || center.x + radius > 1.0 || center.y - radius < 0.0 || center.y + radius > 1.0) {
      throw DiskOutOfDomain("disk " + std::to_string(i) + " does not fit inside the unit square");
    }
    ImageRecord img;
    img.height = grid_side;
    img.width = grid_side;
    img.label = static_cast<std::uint32_t>(i);
    img.pixels.assign(grid_side * grid_side, 0.0f);
    const double r2 = radius * radius;
    for (std::size_t r = 0; r < grid_side; ++r) {
      for (std::size_t c = 0; c < grid_side; ++c) {
        if (squared_distance(pixel_center(r, c, grid_side, grid_side), center) <= r2) {
          img.pixels[r * grid_side + c] = 1.0f;
        }
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<double> flatten(const ImageRecord& img) { return {img.pixels.begin(), img.pixels.end()}; }

}  // namespace hkembed
