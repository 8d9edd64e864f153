#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hkembed/distmat.hpp"

namespace hkembed {

/** Regularized incomplete beta I_x(a, b) by continued fraction. */
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  /** One-sided p-value for mean(a) > mean(b). */
  double p = 0.5;
};

/**
 * Welch test of mean(a) > mean(b). With both variances zero: equal means give
 * p = 0.5, otherwise t = +-inf and p in {0, 1}.
 */
WelchResult welch_one_sided(std::span<const double> a, std::span<const double> b);

struct TaskResult {
  std::string dataset;
  std::string embedding;
  std::string algorithm;
  Metric metric = Metric::Euclidean;
  std::vector<double> accuracies;

  double mean() const;
  /** Sample standard deviation (n - 1). */
  double stddev() const;
};

enum class Outcome { NoWinner, StrictWinner, BarWinner };

struct Verdict {
  double alpha = 0.05;
  /** p[a][b]: one-sided p-value for metric a beating metric b, indexed by Metric; diagonal unused. */
  std::array<std::array<double, 3>, 3> p{};
  std::array<double, 3> means{};
  Outcome outcome = Outcome::NoWinner;
  std::optional<Metric> winner;
  /** For a bar winner, the one metric it beats. */
  std::optional<Metric> beaten;
};

std::string outcome_name(const Verdict& v);

/** Outcome, winner and beaten from the p-values and means alone. */
void derive_outcome(Verdict& v);

/** Throws MissingMetric unless results hold exactly Euclidean, OT and UOT. */
Verdict verdict(std::span<const TaskResult> results, double alpha = 0.05);

}  // namespace hkembed
