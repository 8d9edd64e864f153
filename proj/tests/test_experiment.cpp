#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "hkembed/dataset_io.hpp"
#include "hkembed/errors.hpp"
#include "hkembed/experiment.hpp"

using namespace hkembed;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "hkembed_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Three classes: a horizontal bar, a vertical bar, a diagonal; jittered position and intensity.
std::vector<ImageRecord> bar_images(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pos(2, 5);
  std::uniform_real_distribution<double> level(0.5, 1.0);
  std::vector<ImageRecord> out;
  for (std::uint32_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      ImageRecord img;
      img.height = img.width = 8;
      img.label = c;
      img.pixels.assign(64, 0.0f);
      const int p = pos(rng);
      for (int k = 1; k < 7; ++k) {
        const int row = c == 0 ? p : c == 1 ? k : k;
        const int col = c == 0 ? k : c == 1 ? p : (k + p - 3 + 8) % 8;
        img.pixels[static_cast<std::size_t>(row * 8 + col)] = static_cast<float>(level(rng));
      }
      out.push_back(std::move(img));
    }
  }
  return out;
}

ExperimentConfig small_config(const fs::path& dir) {
  const auto data = dir / "bars.uotd";
  write_dataset(data, bar_images(15, 1));
  ExperimentConfig c;
  c.dataset = data;
  c.sample_size = 30;
  c.replicates = 2;
  c.epsilon = 1e-2;
  c.tol = 1e-7;
  c.neighbor_k = 5;
  c.seed = 7;
  c.workers = 2;
  c.cache_dir = dir / "cache";
  c.output_dir = dir / "out";
  return c;
}

}  // namespace

TEST(Subsample, Examples) {
  Labels ten_classes(1000);
  for (std::size_t i = 0; i < ten_classes.size(); ++i) ten_classes[i] = static_cast<std::uint32_t>(i % 10);
  const auto s = subsample(ten_classes, 100, 3);
  std::map<std::uint32_t, int> per;
  for (auto i : s) ++per[ten_classes[i]];
  for (auto& [c, k] : per) EXPECT_EQ(k, 10);
  EXPECT_EQ(subsample(ten_classes, 100, 3), s);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));

  const auto all = subsample(ten_classes, 1000, 9);
  for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
  EXPECT_THROW(subsample(ten_classes, 1001, 0), SizeTooLarge);
}

TEST(Subsample, ProportionalWithinOne) {
  Labels skew;
  for (std::uint32_t c = 0; c < 4; ++c) skew.insert(skew.end(), 10 + 17 * c, c);
  const double n = static_cast<double>(skew.size());
  const auto s = subsample(skew, 37, 5);
  EXPECT_EQ(s.size(), 37u);
  std::map<std::uint32_t, int> per;
  for (auto i : s) ++per[skew[i]];
  for (std::uint32_t c = 0; c < 4; ++c) EXPECT_LE(std::abs(per[c] - 37.0 * (10 + 17 * c) / n), 1.0);
}

TEST(Config, ParsesKeysAndRejectsUnknown) {
  const auto c = parse_config(
      "# comment\n"
      "dataset = data/x.uotd\n"
      "sample_size=200  # trailing\n"
      "metrics = ot, uot\n"
      "embeddings = mds,tsne\n"
      "tasks = knn3, kmeans\n"
      "epsilon = 0.001\n"
      "replicates = 4\n"
      "workers = 3\n",
      "/base");
  EXPECT_EQ(c.dataset, fs::path("/base/data/x.uotd"));
  EXPECT_EQ(c.sample_size, 200u);
  EXPECT_EQ(c.metrics, (std::vector<Metric>{Metric::OT, Metric::UOT}));
  EXPECT_EQ(c.embeddings, (std::vector<EmbedMethod>{EmbedMethod::MDS, EmbedMethod::TSNE}));
  EXPECT_EQ(c.tasks.size(), 2u);
  EXPECT_EQ(c.epsilon, 1e-3);
  EXPECT_EQ(c.replicates, 4u);
  EXPECT_EQ(c.variance_threshold, 0.97);

  EXPECT_THROW(parse_config("dataset = a\nbogus = 1\n"), InvalidArgument);
  EXPECT_THROW(parse_config("dataset = a\nreplicates = 1\n"), InvalidArgument);
  EXPECT_THROW(parse_config("dataset = a\nvariance_threshold = 1.5\n"), InvalidArgument);
  EXPECT_THROW(parse_config("dataset = a\ntasks = knn2\n"), InvalidArgument);
}

TEST(Tables, CsvRoundTripAndMarkdown) {
  ResultsTable t;
  t.dataset = "toy";
  SummaryRow row{"toy", "MDS", "k-means", {}, "strict:UOT"};
  row.cells.push_back({Metric::Euclidean, false, 0.1 + 0.2, 0.01, 0.25, 0.75, });
  row.cells.push_back({Metric::OT, false, 1.0 / 3.0, 0.02, 0.5, 0.125});
  row.cells.push_back({Metric::UOT, false, 0.9, 0.001, 1e-9, 2e-12});
  t.rows.push_back(row);
  SummaryRow failed{"toy", "t-SNE", "LDA", {}, "failed"};
  failed.cells.push_back({Metric::Euclidean, false, 0.5, 0.1, std::nan(""), std::nan("")});
  failed.cells.push_back({Metric::OT, true, std::nan(""), std::nan(""), std::nan(""), std::nan("")});
  failed.cells.push_back({Metric::UOT, false, 0.6, 0.1, std::nan(""), std::nan("")});
  t.rows.push_back(failed);

  const auto back = parse_table_csv(table_csv(t));
  ASSERT_EQ(back.rows.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(back.rows[r].verdict, t.rows[r].verdict);
    for (std::size_t m = 0; m < 3; ++m) {
      const auto& a = t.rows[r].cells[m];
      const auto& b = back.rows[r].cells[m];
      EXPECT_EQ(a.metric, b.metric);
      EXPECT_EQ(a.failed, b.failed);
      if (!a.failed) EXPECT_NEAR(a.mean, b.mean, 1e-12);
    }
  }
  EXPECT_EQ(table_csv(back), table_csv(t));

  const auto md = table_markdown(t);
  EXPECT_NE(md.find("| MDS | k-means | 0.300 ± 0.010 | 0.333 ± 0.020 | **0.900 ± 0.001** |"), std::string::npos);
  EXPECT_NE(md.find("failed"), std::string::npos);

  EXPECT_EQ(table_csv(ResultsTable{}),
            "dataset,embedding,algorithm,metric,mean,std,p_vs_first_other,p_vs_second_other,verdict\n");
  EXPECT_THROW(parse_table_csv("nope\n"), FormatError);
}

TEST(RunExperiment, DeterministicTablesAndWarmCache) {
  const auto dir = scratch("experiment");
  const auto config = small_config(dir);
  const auto first = run_experiment(config);
  EXPECT_EQ(first.failed_cells, 0u);
  EXPECT_EQ(first.transport_solves, 2u * 2u * 435u);
  EXPECT_EQ(first.table.rows.size(), config.embeddings.size() * config.tasks.size());
  for (const auto& row : first.table.rows) {
    ASSERT_EQ(row.cells.size(), 3u);
    EXPECT_NE(row.verdict, "failed");
    for (const auto& c : row.cells) {
      EXPECT_GE(c.mean, 0.0);
      EXPECT_LE(c.mean, 1.0);
      EXPECT_FALSE(std::isnan(c.p_first));
      EXPECT_FALSE(std::isnan(c.p_second));
    }
  }
  const auto csv = read_text(config.output_dir / "results.csv");
  const auto acc = read_text(config.output_dir / "accuracies.csv");

  const auto warm = run_experiment(config);
  EXPECT_EQ(warm.transport_solves, 0u);
  EXPECT_EQ(warm.cache_hits, 6u);
  EXPECT_EQ(read_text(config.output_dir / "results.csv"), csv);
  EXPECT_EQ(read_text(config.output_dir / "accuracies.csv"), acc);

  auto cold = config;
  cold.cache_dir.clear();
  cold.output_dir = dir / "cold";
  cold.workers = 1;
  run_experiment(cold);
  EXPECT_EQ(read_text(cold.output_dir / "results.csv"), csv);
}

TEST(RunExperiment, FailedCellsAreRecordedNotFatal) {
  const auto dir = scratch("failing");
  auto config = small_config(dir);
  auto images = bar_images(15, 2);
  std::fill(images[3].pixels.begin(), images[3].pixels.end(), 0.0f);
  write_dataset(config.dataset, images);
  config.sample_size = 45;
  config.embeddings = {EmbedMethod::MDS};
  config.tasks = {"knn1", "kmeans"};
  const auto out = run_experiment(config);
  EXPECT_EQ(out.failed_cells, 4u);
  for (const auto& row : out.table.rows) {
    EXPECT_EQ(row.verdict, "failed");
    EXPECT_FALSE(row.cells[0].failed);
    EXPECT_TRUE(row.cells[1].failed);
    EXPECT_TRUE(row.cells[2].failed);
  }
  EXPECT_NE(read_text(config.output_dir / "accuracies.csv").find("support threshold"), std::string::npos);
}
