#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hkembed {

using Labels = std::vector<std::uint32_t>;

struct TrainTestSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

/**
 * Stratified 80/20 split. The test total is round(0.2 n), spread over classes
 * by largest remainder of 0.2 n_c, with at least one test item per class.
 */
TrainTestSplit split_80_20(std::span<const std::uint32_t> labels, std::uint64_t seed);

/** Rows of `x` at `rows`, in that order. */
Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows);
Labels take(std::span<const std::uint32_t> labels, std::span<const std::size_t> rows);

/**
 * Majority vote of the k nearest training rows. Distance ties go to the lower
 * training index; vote ties to the class of the nearest neighbor among the tied classes.
 */
Labels knn_predict(const Eigen::MatrixXd& train, std::span<const std::uint32_t> train_labels,
                   const Eigen::MatrixXd& test, std::size_t k);

struct LdaModel {
  Labels classes;
  Eigen::MatrixXd means;  // one row per class
  Eigen::MatrixXd precision;
  Eigen::VectorXd log_priors;

  Eigen::MatrixXd decision(const Eigen::MatrixXd& x) const;
};

/** Pooled covariance plus ridge * trace/d * I; throws SingularCovariance if it stays singular. */
LdaModel lda_fit(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y, double ridge);
Labels lda_predict(const LdaModel& m, const Eigen::MatrixXd& x);

/**
 * Mean softmax cross-entropy + (l2/2)|W|^2 for standardized rows `x` (n x d),
 * class indices `y`, parameters `w` ((d+1) x C, last row the unpenalized bias).
 * Fills `gradient` when given.
 */
double mlr_objective(const Eigen::MatrixXd& x, std::span<const std::size_t> y, const Eigen::MatrixXd& w, double l2,
                     Eigen::MatrixXd* gradient);

struct MlrModel {
  Labels classes;
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;
  Eigen::MatrixXd weights;
  std::size_t iterations = 0;
  bool converged = false;
  /** Objective after each accepted step, starting from the zero initialization. */
  std::vector<double> objective_trace;

  Eigen::MatrixXd decision(const Eigen::MatrixXd& x) const;
};

MlrModel mlr_fit(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y, double l2, std::size_t iters);
Labels mlr_predict(const MlrModel& m, const Eigen::MatrixXd& x);

struct SvmModel {
  Labels classes;
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;
  /** (d+1) x C, one averaged one-vs-rest separator per class, last row the bias. */
  Eigen::MatrixXd weights;

  Eigen::MatrixXd decision(const Eigen::MatrixXd& x) const;
};

/** One-vs-rest Pegasos: step 1/(l2 t), iterates averaged over the final half. */
SvmModel linear_svm_fit(const Eigen::MatrixXd& x, std::span<const std::uint32_t> y, double l2, std::size_t iters,
                        std::uint64_t seed);
Labels linear_svm_predict(const SvmModel& m, const Eigen::MatrixXd& x);

double accuracy(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> truth);

enum class ClassifierKind { KNN, LDA, MLR, LinearSVM };

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::KNN;
  std::size_t k = 1;
  double ridge = 1e-3;
  double l2 = 1e-4;
  std::size_t iters = 500;
  std::uint64_t seed = 0;

  /** "KNN(k=1)", "LDA", "MLR", "SVM(L)". */
  std::string name() const;
  void validate() const;
};

Labels fit_predict(const ClassifierSpec& spec, const Eigen::MatrixXd& train, std::span<const std::uint32_t> train_labels,
                   const Eigen::MatrixXd& test);

}  // namespace hkembed
