#include "hkembed/learn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "hkembed/errors.hpp"
#include "hkembed/seeding.hpp"

namespace hkembed {

namespace {

struct ClassIndex {
  Labels classes;
  std::vector<std::size_t> of;  // class position per sample
};

ClassIndex index_classes(std::span<const std::uint32_t> y) {
  ClassIndex ci;
  ci.classes.assign(y.begin(), y.end());
  std::sort(ci.classes.begin(), ci.classes.end());
  ci.classes.erase(std::unique(ci.classes.begin(), ci.classes.end()), ci.classes.end());
  ci.of.reserve(y.size());
  for (auto label : y) {
    ci.of.push_back(static_cast<std::size_t>(std::lower_bound(ci.classes.begin(), ci.classes.end(), label) -
                                             ci.classes.begin()));
  }
  return ci;
}

void require_rows(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y) {
  if (x.rows() == 0) throw InvalidArgument("no training rows");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw LengthMismatch("one label per row is required");
  if (!x.allFinite()) throw InvalidArgument("coordinates must be finite");
}

Labels argmax_rows(const Eigen::MatrixXd& scores, const Labels& classes) {
  Labels out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  explicit Standardizer(const Eigen::MatrixXd& x) {
    mean = x.colwise().mean();
    scale = ((x.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
    for (Eigen::Index c = 0; c < scale.size(); ++c) {
      if (!(scale[c] > 0.0)) scale[c] = 1.0;
    }
  }
};

// Standardized rows with a trailing column of ones.
Eigen::MatrixXd design(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& mean, const Eigen::RowVectorXd& scale) {
  Eigen::MatrixXd out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = (x.rowwise() - mean).array().rowwise() / scale.array();
  out.col(x.cols()).setOnes();
  return out;
}

}  // namespace

TrainTestSplit split_80_20(std::span<const std::uint32_t> labels, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (n < 5) throw InvalidArgument("an 80/20 split needs at least 5 items");
  const auto ci = index_classes(labels);
  const std::size_t classes = ci.classes.size();
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < n; ++i) members[ci.of[i]].push_back(i);
  for (std::size_t c = 0; c < classes; ++c) {
    if (members[c].size() < 2) {
      throw ClassTooSmall("class " + std::to_string(ci.classes[c]) + " has fewer than 2 members");
    }
  }

  // round(n/5) in integers; largest remainder of n_c/5 distributes it.
  const std::size_t total = (2 * n + 5) / 10;
  std::vector<std::size_t> quota(classes);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) assigned += quota[c] = members[c].size() / 5;
  std::vector<std::size_t> order(classes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return members[a].size() % 5 > members[b].size() % 5; });
  for (std::size_t r = 0; assigned < total && r < classes; ++r, ++assigned) ++quota[order[r]];

  for (std::size_t c = 0; c < classes; ++c) {
    if (quota[c] > 0) continue;
    quota[c] = 1;
    std::size_t donor = classes;
    for (std::size_t o = 0; o < classes; ++o) {
      if (quota[o] > 1 && (donor == classes || quota[o] > quota[donor])) donor = o;
    }
    if (donor < classes) --quota[donor];
  }

  TrainTestSplit split;
  split.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < classes; ++c) {
    auto idx = members[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    split.train.insert(split.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

Labels take(std::span<const std::uint32_t> labels, std::span<const std::size_t> rows) {
  Labels out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

Labels knn_predict(const Eigen::MatrixXd& train, std::span<const std::uint32_t> train_labels,
                   const Eigen::MatrixXd& test, std::size_t k) {
  require_rows(train, train_labels);
  if (k == 0 || k > static_cast<std::size_t>(train.rows())) throw InvalidArgument("k must lie in [1, |train|]");
  if (test.cols() != train.cols()) throw LengthMismatch("train and test dimensions differ");

  const auto m = static_cast<std::size_t>(train.rows());
  Labels out;
  out.reserve(static_cast<std::size_t>(test.rows()));
  std::vector<double> dist(m);
  std::vector<std::size_t> order(m);
  for (Eigen::Index t = 0; t < test.rows(); ++t) {
    for (std::size_t i = 0; i < m; ++i) dist[i] = (train.row(static_cast<Eigen::Index>(i)) - test.row(t)).squaredNorm();
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
    std::map<std::uint32_t, std::size_t> votes;
    std::size_t top = 0;
    for (std::size_t r = 0; r < k; ++r) top = std::max(top, ++votes[train_labels[order[r]]]);
    for (std::size_t r = 0; r < k; ++r) {
      if (votes[train_labels[order[r]]] == top) {
        out.push_back(train_labels[order[r]]);
        break;
      }
    }
  }
  return out;
}

Eigen::MatrixXd LdaModel::decision(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd pm = precision * means.transpose();  // d x C
  Eigen::MatrixXd scores = x * pm;
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    scores.col(c).array() += log_priors[c] - 0.5 * means.row(c).dot(pm.col(c));
  }
  return scores;
}

LdaModel lda_fit(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y, double ridge) {
  require_rows(x, y);
  if (!(ridge >= 0.0)) throw InvalidArgument("ridge must be nonnegative");
  const auto ci = index_classes(y);
  const auto classes = static_cast<Eigen::Index>(ci.classes.size());
  if (classes < 2) throw InvalidArgument("LDA needs at least two classes");
  const Eigen::Index d = x.cols();

  LdaModel m;
  m.classes = ci.classes;
  m.means = Eigen::MatrixXd::Zero(classes, d);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(classes);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto c = static_cast<Eigen::Index>(ci.of[static_cast<std::size_t>(i)]);
    m.means.row(c) += x.row(i);
    counts[c] += 1.0;
  }
  for (Eigen::Index c = 0; c < classes; ++c) m.means.row(c) /= counts[c];

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::RowVectorXd r = x.row(i) - m.means.row(static_cast<Eigen::Index>(ci.of[static_cast<std::size_t>(i)]));
    cov.noalias() += r.transpose() * r;
  }
  const double dof = x.rows() > classes ? static_cast<double>(x.rows() - classes) : static_cast<double>(x.rows());
  cov /= dof;
  cov.diagonal().array() += ridge * cov.trace() / static_cast<double>(d);
  cov = 0.5 * (cov + cov.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw SingularCovariance("covariance eigensolver failed");
  const double top = eig.eigenvalues().maxCoeff();
  const double bottom = eig.eigenvalues().minCoeff();
  if (!(top > 0.0) || bottom <= 1e-12 * top) throw SingularCovariance("regularized pooled covariance is singular");
  m.precision = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  m.log_priors = (counts / static_cast<double>(x.rows())).array().log().matrix();
  return m;
}

Labels lda_predict(const LdaModel& m, const Eigen::MatrixXd& x) { return argmax_rows(m.decision(x), m.classes); }

double mlr_objective(const Eigen::MatrixXd& x, std::span<const std::size_t> y, const Eigen::MatrixXd& w, double l2,
                     Eigen::MatrixXd* gradient) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (w.rows() != d + 1) throw LengthMismatch("MLR parameters must have d+1 rows");
  Eigen::MatrixXd logits = x * w.topRows(d);
  logits.rowwise() += w.row(d);
  double loss = 0.0;
  Eigen::MatrixXd prob(n, w.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double peak = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - peak).exp().matrix();
    const double z = e.sum();
    prob.row(i) = e / z;
    loss -= logits(i, static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)])) - peak - std::log(z);
  }
  loss /= static_cast<double>(n);
  loss += 0.5 * l2 * w.topRows(d).squaredNorm();
  if (gradient) {
    for (Eigen::Index i = 0; i < n; ++i) prob(i, static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)])) -= 1.0;
    prob /= static_cast<double>(n);
    gradient->resize(w.rows(), w.cols());
    gradient->topRows(d) = x.transpose() * prob + l2 * w.topRows(d);
    gradient->row(d) = prob.colwise().sum();
  }
  return loss;
}

Eigen::MatrixXd MlrModel::decision(const Eigen::MatrixXd& x) const { return design(x, mean, scale) * weights; }

MlrModel mlr_fit(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y, double l2, std::size_t iters) {
  require_rows(x, y);
  if (!(l2 > 0.0)) throw InvalidArgument("MLR needs l2 > 0");
  const auto ci = index_classes(y);
  const Standardizer st(x);
  const Eigen::MatrixXd xs = (x.rowwise() - st.mean).array().rowwise() / st.scale.array();

  MlrModel m;
  m.classes = ci.classes;
  m.mean = st.mean;
  m.scale = st.scale;
  m.weights = Eigen::MatrixXd::Zero(x.cols() + 1, static_cast<Eigen::Index>(ci.classes.size()));
  Eigen::MatrixXd grad, trial_grad;
  double f = mlr_objective(xs, ci.of, m.weights, l2, &grad);
  m.objective_trace.push_back(f);
  double step = 1.0;
  while (m.iterations < iters) {
    if (grad.norm() <= 1e-6) {
      m.converged = true;
      break;
    }
    ++m.iterations;
    const Eigen::MatrixXd trial = m.weights - step * grad;
    const double ft = mlr_objective(xs, ci.of, trial, l2, &trial_grad);
    if (ft < f) {
      m.weights = trial;
      f = ft;
      grad.swap(trial_grad);
      m.objective_trace.push_back(f);
    } else {
      step *= 0.5;
      if (step < 1e-30) break;
    }
  }
  if (!m.converged && grad.norm() <= 1e-6) m.converged = true;
  return m;
}

Labels mlr_predict(const MlrModel& m, const Eigen::MatrixXd& x) { return argmax_rows(m.decision(x), m.classes); }

Eigen::MatrixXd SvmModel::decision(const Eigen::MatrixXd& x) const { return design(x, mean, scale) * weights; }

SvmModel linear_svm_fit(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y, double l2, std::size_t iters,
                        std::uint64_t seed) {
  require_rows(x, y);
  if (!(l2 > 0.0)) throw InvalidArgument("SVM needs l2 > 0");
  if (iters == 0) throw InvalidArgument("SVM needs at least one iteration");
  const auto ci = index_classes(y);
  const Standardizer st(x);
  const Eigen::MatrixXd xd = design(x, st.mean, st.scale);
  const Eigen::Index dim = xd.cols();
  const double radius = 1.0 / std::sqrt(l2);

  SvmModel m;
  m.classes = ci.classes;
  m.mean = st.mean;
  m.scale = st.scale;
  m.weights = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(ci.classes.size()));
  std::uniform_int_distribution<Eigen::Index> pick(0, xd.rows() - 1);
  for (std::size_t c = 0; c < ci.classes.size(); ++c) {
    std::mt19937_64 rng(derive_seed(seed, {c}));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(dim);
    std::size_t averaged = 0;
    for (std::size_t t = 1; t <= iters; ++t) {
      const Eigen::Index i = pick(rng);
      const double target = ci.of[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
      const double eta = 1.0 / (l2 * static_cast<double>(t));
      const double margin = target * xd.row(i).dot(w);
      w *= 1.0 - eta * l2;
      if (margin < 1.0) w += (eta * target) * xd.row(i).transpose();
      const double norm = w.norm();
      if (norm > radius) w *= radius / norm;
      if (2 * t > iters) {
        avg += w;
        ++averaged;
      }
    }
    m.weights.col(static_cast<Eigen::Index>(c)) = avg / static_cast<double>(averaged);
  }
  return m;
}

Labels linear_svm_predict(const SvmModel& m, const Eigen::MatrixXd& x) { return argmax_rows(m.decision(x), m.classes); }

double accuracy(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> truth) {
  if (pred.size() != truth.size()) throw LengthMismatch("prediction and truth lengths differ");
  if (pred.empty()) throw InvalidArgument("accuracy of an empty prediction");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

std::string ClassifierSpec::name() const {
  switch (kind) {
    case ClassifierKind::KNN:
      return "KNN(k=" + std::to_string(k) + ")";
    case ClassifierKind::LDA:
      return "LDA";
    case ClassifierKind::MLR:
      return "MLR";
    case ClassifierKind::LinearSVM:
      return "SVM(L)";
  }
  return "?";
}

void ClassifierSpec::validate() const {
  if (kind == ClassifierKind::KNN && (k == 0 || k % 2 == 0)) throw InvalidArgument("KNN needs an odd k >= 1");
  if (!(ridge >= 0.0) || !(l2 >= 0.0)) throw InvalidArgument("regularization must be nonnegative");
}

Labels fit_predict(const ClassifierSpec& spec, const Eigen::MatrixXd& train, std::span<const std::uint32_t> train_labels,
                   const Eigen::MatrixXd& test) {
  spec.validate();
  switch (spec.kind) {
    case ClassifierKind::KNN:
      return knn_predict(train, train_labels, test, spec.k);
    case ClassifierKind::LDA:
      return lda_predict(lda_fit(train, train_labels, spec.ridge), test);
    case ClassifierKind::MLR:
      return mlr_predict(mlr_fit(train, train_labels, spec.l2, spec.iters), test);
    case ClassifierKind::LinearSVM:
      return linear_svm_predict(linear_svm_fit(train, train_labels, spec.l2, spec.iters, spec.seed), test);
  }
  throw InvalidArgument("unknown classifier");
}

}  // namespace hkembed
