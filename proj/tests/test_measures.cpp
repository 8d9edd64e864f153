#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "hkembed/dataset_io.hpp"
#include "hkembed/errors.hpp"
#include "hkembed/measures.hpp"
#include "test_util.hpp"

using namespace hkembed;

namespace {

ImageRecord make_image(std::size_t h, std::size_t w, std::vector<float> px, std::uint32_t label = 0) {
  ImageRecord img;
  img.height = h;
  img.width = w;
  img.pixels = std::move(px);
  img.label = label;
  return img;
}

}  // namespace

TEST(ImageToMeasure, DiagonalTwoByTwoSplitsMassEvenly) {
  const auto img = make_image(2, 2, {1, 0, 0, 1});
  const auto m = image_to_measure(img, {.normalize = true, .support_threshold = 0.0, .mass_calibration = 1.0});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m.weights()[0], 0.5);
  EXPECT_DOUBLE_EQ(m.weights()[1], 0.5);
  EXPECT_EQ(m.coords()[0], (Point2{0.25, 0.75}));
  EXPECT_EQ(m.coords()[1], (Point2{0.75, 0.25}));
}

TEST(ImageToMeasure, UnnormalizedAllOnesWithCalibration) {
  const auto img = make_image(28, 28, std::vector<float>(784, 1.0f));
  const auto m = image_to_measure(img, {.normalize = false, .support_threshold = 1e-6, .mass_calibration = 784.0});
  ASSERT_EQ(m.size(), 784u);
  for (double w : m.weights()) EXPECT_DOUBLE_EQ(w, 1.0 / 784.0);
  EXPECT_NEAR(m.total_mass(), 1.0, 1e-12);
}

TEST(ImageToMeasure, AllBelowThresholdThrows) {
  const auto img = make_image(3, 3, std::vector<float>(9, 0.05f));
  EXPECT_THROW(image_to_measure(img, {.normalize = true, .support_threshold = 0.1, .mass_calibration = 1.0}),
               AllMassBelowThreshold);
}

TEST(ImageToMeasure, RejectsBadParameters) {
  const auto img = make_image(2, 2, {1, 0, 0, 1});
  EXPECT_THROW(image_to_measure(img, {.normalize = false, .support_threshold = 0.0, .mass_calibration = 0.0}),
               InvalidArgument);
  EXPECT_THROW(image_to_measure(img, {.normalize = false, .support_threshold = -1.0, .mass_calibration = 1.0}),
               InvalidArgument);
  auto bad = make_image(2, 2, {1, 0, 0, 1.5f});
  EXPECT_THROW(image_to_measure(bad, {}), InvalidArgument);
}

TEST(ImageToMeasure, RandomImagePropertiesHold) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t side = 4 + trial % 25;
    const auto img = testutil::random_image(rng, side, 0.3);
    const double tau = 0.2;

    const auto normalized = image_to_measure(img, {.normalize = true, .support_threshold = tau});
    EXPECT_NEAR(normalized.total_mass(), 1.0, 1e-12);
    double kept_sum = 0.0;
    for (float p : img.pixels) {
      if (p > tau) kept_sum += p;
    }
    for (double w : normalized.weights()) EXPECT_GT(w, tau / kept_sum);

    const double cal = 3.5;
    const auto raw = image_to_measure(img, {.normalize = false, .support_threshold = tau, .mass_calibration = cal});
    for (double w : raw.weights()) EXPECT_GT(w, tau / cal);
    EXPECT_EQ(raw.size(), normalized.size());

    double max_d2 = 0.0;
    for (const auto& p : raw.coords()) {
      EXPECT_GT(p.x, 0.0);
      EXPECT_LT(p.x, 1.0);
      EXPECT_GT(p.y, 0.0);
      EXPECT_LT(p.y, 1.0);
      for (const auto& q : raw.coords()) max_d2 = std::max(max_d2, squared_distance(p, q));
    }
    EXPECT_LT(max_d2, 2.0);

    const auto again = image_to_measure(img, {.normalize = true, .support_threshold = tau});
    EXPECT_TRUE(std::equal(again.weights().begin(), again.weights().end(), normalized.weights().begin()));
  }
}

TEST(GridMeasure, RejectsInvalidSupports) {
  EXPECT_THROW(GridMeasure({{0.1, 0.1}}, {0.0}), InvalidMeasure);
  EXPECT_THROW(GridMeasure({{0.1, 0.1}, {0.1, 0.1}}, {1.0, 1.0}), InvalidMeasure);
  EXPECT_THROW(GridMeasure({{1.2, 0.1}}, {1.0}), InvalidMeasure);
  EXPECT_THROW(GridMeasure({{0.1, 0.1}}, {1.0, 2.0}), InvalidMeasure);
  EXPECT_THROW(GridMeasure({}, {}), InvalidMeasure);
}

TEST(DatasetMeanMass, Examples) {
  const std::vector<ImageRecord> two{make_image(1, 2, {1, 1}), make_image(2, 2, {1, 1, 1, 1})};
  EXPECT_DOUBLE_EQ(dataset_mean_mass(two), 3.0);

  const std::vector<ImageRecord> zero{make_image(2, 2, {0, 0, 0, 0})};
  EXPECT_DOUBLE_EQ(dataset_mean_mass(zero), 0.0);

  const std::vector<ImageRecord> same(100, make_image(2, 2, {0.5f, 0.25f, 0.0f, 1.0f}));
  EXPECT_DOUBLE_EQ(dataset_mean_mass(same), 1.75);

  EXPECT_THROW(dataset_mean_mass(std::vector<ImageRecord>{}), EmptyDataset);
}

TEST(DiskDataset, CenteredDiskAreaMatchesEnumeration) {
  const std::vector<Point2> t{{0.0, 0.0}};
  const auto disks = make_disk_dataset(1, 0.25, t, 64);
  ASSERT_EQ(disks.size(), 1u);

  // Independent count of pixel centers inside the circle.
  std::size_t inside = 0;
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 64; ++c) {
      const double x = (c + 0.5) / 64.0 - 0.5;
      const double y = (r + 0.5) / 64.0 - 0.5;
      if (x * x + y * y <= 0.0625) ++inside;
    }
  }
  const double mass = disks[0].intensity_sum();
  EXPECT_EQ(mass, static_cast<double>(inside));
  const double boundary_band = 2.0 * (2.0 * std::numbers::pi * 0.25) / 64.0;
  EXPECT_NEAR(mass / (64.0 * 64.0), std::numbers::pi * 0.0625, boundary_band);
  EXPECT_EQ(disks[0].label, 0u);
}

TEST(DiskDataset, IdenticalTranslationsGiveIdenticalImages) {
  const std::vector<Point2> t{{0.1, -0.05}, {0.1, -0.05}};
  const auto disks = make_disk_dataset(2, 0.2, t, 32);
  EXPECT_EQ(disks[0].pixels, disks[1].pixels);
  EXPECT_EQ(disks[1].label, 1u);
}

TEST(DiskDataset, EscapingDiskThrows) {
  const std::vector<Point2> t{{0.4, 0.0}};
  EXPECT_THROW(make_disk_dataset(1, 0.2, t, 32), DiskOutOfDomain);
  EXPECT_THROW(make_disk_dataset(1, 0.2, std::vector<Point2>{{0.0, 0.0}}, 4), InvalidArgument);
}

TEST(DatasetIo, RoundTripAndCorruption) {
  std::mt19937_64 rng(3);
  std::vector<ImageRecord> images;
  for (std::uint32_t i = 0; i < 5; ++i) images.push_back(testutil::random_image(rng, 6, 0.4, i % 2));
  const auto dir = std::filesystem::temp_directory_path() / "hkembed_dataset_io";
  std::filesystem::create_directories(dir);
  const auto path = dir / "round.uotd";
  write_dataset(path, images);

  const auto back = read_dataset(path);
  ASSERT_EQ(back.size(), images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    EXPECT_EQ(back[i].pixels, images[i].pixels);
    EXPECT_EQ(back[i].label, images[i].label);
    EXPECT_EQ(back[i].height, 6u);
  }

  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  EXPECT_THROW(read_dataset(path), FormatError);

  write_dataset(path, images);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XOTD", 4);
  }
  EXPECT_THROW(read_dataset(path), FormatError);
  std::filesystem::remove_all(dir);
}

TEST(DatasetIo, ReadsMnistFixture) {
  const auto images = read_dataset(std::filesystem::path(HKEMBED_TEST_DATA_DIR) / "mnist012_14x14.uotd");
  ASSERT_EQ(images.size(), 600u);
  std::array<int, 3> counts{};
  for (const auto& img : images) {
    ASSERT_LT(img.label, 3u);
    ++counts[img.label];
    EXPECT_EQ(img.height, 14u);
  }
  EXPECT_EQ(counts, (std::array<int, 3>{200, 200, 200}));
}
