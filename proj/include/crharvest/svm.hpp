#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

#include "crharvest/errors.hpp"

namespace crharvest::svm {

struct KernelSpec {
  enum class Type { Linear, Rbf };
  Type type = Type::Rbf;
  double gamma = 1.0;  // rbf: k(a, b) = exp(-gamma ||a - b||^2)
};

double kernel_value(const KernelSpec& kernel, const Eigen::VectorXd& a,
                    const Eigen::VectorXd& b);

struct TrainOptions {
  double slack_penalty = 10.0;  // zeta-bar
  double kkt_tolerance = 1e-3;
  int max_iterations = 200000;
};

/// Soft-margin binary SVM trained on the dual by sequential two-variable
/// coordinate optimization (most-violating-pair selection).
struct PairwiseSvm {
  KernelSpec kernel;
  Eigen::MatrixXd support_vectors;  // one row per support vector
  Eigen::VectorXd sv_signed_alpha;  // alpha_i * y_i per support vector
  std::vector<int> sv_rows;         // row indices into the training matrix
  Eigen::VectorXd alpha;            // full dual vector, training order
  std::vector<double> labels;       // +-1 per training row
  double bias = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;

  /// Decision value sum_sv alpha y k(x_sv, x) + bias; positive side is the
  /// +1 class.
  double decision(const Eigen::VectorXd& x) const;
};

/// Trains on rows of X with labels +-1. Requires at least one point of each
/// sign; stops when the maximal KKT violation falls below kkt_tolerance.
PairwiseSvm train_pairwise(const Eigen::MatrixXd& X, std::span<const int> y_sign,
                           const KernelSpec& kernel, const TrainOptions& options = {});

/// Per-feature affine map to zero mean and unit (population) variance.
/// Constant features keep scale one.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& X) const;
};

/// One unordered class pair of the one-vs-one decomposition. When only one
/// side had training data the pair degenerates to a fixed default vote; when
/// neither side had data the pair casts no vote.
struct PairModel {
  int class_i = 0;
  int class_j = 0;
  std::optional<PairwiseSvm> svm;
  std::optional<int> default_vote;
};

struct OvoOptions {
  TrainOptions train;
  KernelSpec::Type kernel_type = KernelSpec::Type::Rbf;
  /// Explicit RBF width; by default 1/(2 l^2) with l = half the median
  /// pairwise distance of the standardized training inputs.
  std::optional<double> rbf_gamma;
};

/// Max-Wins vote over the pairwise models; x must already be standardized.
/// Ties break towards the earliest class in `classes`.
int predict_max_wins(std::span<const PairModel> pairs, std::span<const int> classes,
                     const Eigen::VectorXd& x);

struct OvoClassifier {
  std::vector<int> classes;
  std::vector<PairModel> pairs;  // Y(Y-1)/2 in class order
  Standardizer scaler;
  std::vector<bool> support_rows;  // per training row: support vector in any pair

  int predict(const Eigen::VectorXd& x_raw) const;
};

/// One-vs-one multi-class training over the given class list. Pairs with a
/// missing class degrade per PairModel semantics.
OvoClassifier train_ovo(const Eigen::MatrixXd& X, std::span<const int> labels,
                        std::span<const int> classes, const OvoOptions& options = {});

}  // namespace crharvest::svm
