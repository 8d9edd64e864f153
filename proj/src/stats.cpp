#include "hkembed/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "hkembed/errors.hpp"

namespace hkembed {

namespace {

constexpr int kMaxFractionTerms = 10000;
constexpr double kFractionEps = 1e-16;
constexpr double kTiny = 1e-300;

// Lentz evaluation of the incomplete beta continued fraction.
double beta_fraction(double a, double b, double x) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxFractionTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) <= kFractionEps) return h;
  }
  throw ConvergenceFailure("incomplete beta continued fraction did not converge");
}

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double variance_of(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("incomplete beta needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw InvalidArgument("student t needs df > 0");
  if (std::isnan(t)) throw InvalidArgument("student t of NaN");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0.0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t > 0.0 ? 1.0 - tail : tail;
}

WelchResult welch_one_sided(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("Welch test needs at least two samples per side");
  for (double x : a) {
    if (!std::isfinite(x)) throw InvalidArgument("Welch test samples must be finite");
  }
  for (double x : b) {
    if (!std::isfinite(x)) throw InvalidArgument("Welch test samples must be finite");
  }
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean_of(a), mb = mean_of(b);
  const double qa = variance_of(a, ma) / na, qb = variance_of(b, mb) / nb;
  const double se2 = qa + qb;
  WelchResult r;
  if (se2 == 0.0) {
    r.df = na + nb - 2.0;
    if (ma == mb) return r;
    r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = ma > mb ? 0.0 : 1.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  r.p = student_t_cdf(-r.t, r.df);
  return r;
}

double TaskResult::mean() const {
  if (accuracies.empty()) throw InvalidArgument("no accuracies");
  return mean_of(accuracies);
}

double TaskResult::stddev() const {
  if (accuracies.size() < 2) throw InvalidArgument("standard deviation needs two accuracies");
  return std::sqrt(variance_of(accuracies, mean()));
}

std::string outcome_name(const Verdict& v) {
  switch (v.outcome) {
    case Outcome::StrictWinner:
      return "strict:" + metric_name(*v.winner);
    case Outcome::BarWinner:
      return "bar:" + metric_name(*v.winner) + ">" + metric_name(*v.beaten);
    case Outcome::NoWinner:
      break;
  }
  return "none";
}

void derive_outcome(Verdict& v) {
  v.outcome = Outcome::NoWinner;
  v.winner.reset();
  v.beaten.reset();
  auto beats = [&](int a, int b) { return v.p[a][b] < v.alpha; };
  for (int m = 0; m < 3; ++m) {
    if (beats(m, (m + 1) % 3) && beats(m, (m + 2) % 3)) {
      v.outcome = Outcome::StrictWinner;
      v.winner = static_cast<Metric>(m);
      return;
    }
  }
  int best = 0;
  for (int m = 1; m < 3; ++m) {
    if (v.means[m] > v.means[best]) best = m;
  }
  const int first = (best + 1) % 3, second = (best + 2) % 3;
  if (beats(best, first) != beats(best, second)) {
    v.outcome = Outcome::BarWinner;
    v.winner = static_cast<Metric>(best);
    v.beaten = static_cast<Metric>(beats(best, first) ? first : second);
  }
}

Verdict verdict(std::span<const TaskResult> results, double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw InvalidArgument("alpha must lie in (0, 0.5)");
  std::array<const TaskResult*, 3> by_metric{};
  for (const auto& r : results) {
    auto& slot = by_metric[static_cast<std::size_t>(r.metric)];
    if (slot) throw InvalidArgument("metric " + metric_name(r.metric) + " appears twice");
    slot = &r;
  }
  for (std::size_t m = 0; m < 3; ++m) {
    if (!by_metric[m]) throw MissingMetric("no results for metric " + metric_name(static_cast<Metric>(m)));
  }
  const std::size_t reps = by_metric[0]->accuracies.size();
  for (const auto* r : by_metric) {
    if (r->accuracies.size() != reps) throw LengthMismatch("metrics have different replicate counts");
  }

  Verdict v;
  v.alpha = alpha;
  for (std::size_t a = 0; a < 3; ++a) {
    v.means[a] = by_metric[a]->mean();
    v.p[a][a] = 0.5;
    for (std::size_t b = 0; b < 3; ++b) {
      if (a != b) v.p[a][b] = welch_one_sided(by_metric[a]->accuracies, by_metric[b]->accuracies).p;
    }
  }
  derive_outcome(v);
  return v;
}

}  // namespace hkembed
