#include "crharvest/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace crharvest::svm {

double kernel_value(const KernelSpec& kernel, const Eigen::VectorXd& a,
                    const Eigen::VectorXd& b) {
  switch (kernel.type) {
    case KernelSpec::Type::Linear:
      return a.dot(b);
    case KernelSpec::Type::Rbf:
      return std::exp(-kernel.gamma * (a - b).squaredNorm());
  }
  return 0.0;
}

double PairwiseSvm::decision(const Eigen::VectorXd& x) const {
  double value = bias;
  for (Eigen::Index s = 0; s < support_vectors.rows(); ++s) {
    value += sv_signed_alpha(s) * kernel_value(kernel, support_vectors.row(s).transpose(), x);
  }
  return value;
}

PairwiseSvm train_pairwise(const Eigen::MatrixXd& X, std::span<const int> y_sign,
                           const KernelSpec& kernel, const TrainOptions& options) {
  const Eigen::Index n = X.rows();
  if (static_cast<std::size_t>(n) != y_sign.size()) {
    throw DomainError("train_pairwise: label count mismatch");
  }
  bool has_pos = false, has_neg = false;
  for (int y : y_sign) {
    if (y == 1) has_pos = true;
    else if (y == -1) has_neg = true;
    else throw DomainError("train_pairwise: labels must be +-1");
  }
  if (!has_pos || !has_neg) {
    throw DomainError("train_pairwise: both classes must be represented");
  }

  const double C = options.slack_penalty;
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = y_sign[static_cast<std::size_t>(i)];

  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double value = kernel_value(kernel, X.row(i).transpose(), X.row(j).transpose());
      K(i, j) = value;
      K(j, i) = value;
    }
  }

  // Dual: min 1/2 a^T Q a - e^T a, Q_ij = y_i y_j K_ij, 0 <= a <= C, y^T a = 0.
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // G_i = (Q a)_i - 1

  double violation = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    // Most violating pair: i maximizes -y G over I_up, j minimizes over I_low.
    int i = -1, j = -1;
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
      const double score = -y(k) * grad(k);
      const bool in_up = (y(k) > 0 && alpha(k) < C) || (y(k) < 0 && alpha(k) > 0);
      const bool in_low = (y(k) > 0 && alpha(k) > 0) || (y(k) < 0 && alpha(k) < C);
      if (in_up && score > up) {
        up = score;
        i = static_cast<int>(k);
      }
      if (in_low && score < low) {
        low = score;
        j = static_cast<int>(k);
      }
    }
    if (i < 0 || j < 0) {
      violation = 0.0;  // no admissible pair left: the box is tight
      break;
    }
    violation = up - low;
    if (violation <= options.kkt_tolerance) {
      break;
    }

    // Directional step alpha_i += y_i t, alpha_j -= y_j t with the
    // box-induced interval for t.
    const double curvature = std::max(K(i, i) + K(j, j) - 2.0 * K(i, j), 1e-12);
    double t = violation / curvature;
    auto interval = [C](double a, double sign) {
      // bounds on t so that a + sign * t stays within [0, C]
      return sign > 0 ? std::pair{-a, C - a} : std::pair{a - C, a};
    };
    const auto [ilo, ihi] = interval(alpha(i), y(i));
    const auto [jlo, jhi] = interval(alpha(j), -y(j));
    t = std::clamp(t, std::max(ilo, jlo), std::min(ihi, jhi));
    if (t == 0.0) {
      break;  // boxed in; the violation cannot be reduced along this pair
    }

    const double delta_i = y(i) * t;
    const double delta_j = -y(j) * t;
    alpha(i) += delta_i;
    alpha(j) += delta_j;
    grad += (y.array() * K.col(i).array()).matrix() * (y(i) * delta_i) +
            (y.array() * K.col(j).array()).matrix() * (y(j) * delta_j);
  }
  if (violation > options.kkt_tolerance) {
    throw Error("train_pairwise: no convergence after iteration cap, KKT residual " +
                std::to_string(violation));
  }

  PairwiseSvm model;
  model.kernel = kernel;
  model.alpha = alpha;
  model.labels.assign(n, 0.0);
  for (Eigen::Index k = 0; k < n; ++k) model.labels[static_cast<std::size_t>(k)] = y(k);
  model.kkt_residual = std::max(violation, 0.0);
  model.iterations = iter;

  // Bias from free support vectors; midpoint of the violation interval when
  // every support vector sits on the box boundary.
  double bias_sum = 0.0;
  int bias_count = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (alpha(k) > 1e-12 && alpha(k) < C - 1e-12) {
      bias_sum += -y(k) * grad(k);
      ++bias_count;
    }
  }
  if (bias_count > 0) {
    model.bias = bias_sum / bias_count;
  } else {
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
      const double score = -y(k) * grad(k);
      const bool in_up = (y(k) > 0 && alpha(k) < C) || (y(k) < 0 && alpha(k) > 0);
      const bool in_low = (y(k) > 0 && alpha(k) > 0) || (y(k) < 0 && alpha(k) < C);
      if (in_up) up = std::max(up, score);
      if (in_low) low = std::min(low, score);
    }
    model.bias = 0.5 * (up + low);
  }

  std::vector<int> sv_rows;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (alpha(k) > 1e-12) sv_rows.push_back(static_cast<int>(k));
  }
  model.sv_rows = sv_rows;
  model.support_vectors.resize(static_cast<Eigen::Index>(sv_rows.size()), X.cols());
  model.sv_signed_alpha.resize(static_cast<Eigen::Index>(sv_rows.size()));
  for (std::size_t s = 0; s < sv_rows.size(); ++s) {
    model.support_vectors.row(static_cast<Eigen::Index>(s)) = X.row(sv_rows[s]);
    model.sv_signed_alpha(static_cast<Eigen::Index>(s)) =
        alpha(sv_rows[s]) * y(sv_rows[s]);
  }
  return model;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean();
  s.scale.resize(X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double variance = (X.col(c).array() - s.mean(c)).square().sum() / n;
    s.scale(c) = variance > 0.0 ? std::sqrt(variance) : 1.0;
  }
  return s;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  return (x - mean).cwiseQuotient(scale);
}

Eigen::MatrixXd Standardizer::apply_rows(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out = X;
  out.rowwise() -= mean.transpose();
  out.array().rowwise() /= scale.transpose().array();
  return out;
}

int predict_max_wins(std::span<const PairModel> pairs, std::span<const int> classes,
                     const Eigen::VectorXd& x) {
  std::vector<int> votes(classes.size(), 0);
  auto bump = [&](int cls) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      if (classes[c] == cls) {
        ++votes[c];
        return;
      }
    }
  };
  for (const PairModel& pair : pairs) {
    if (pair.svm.has_value()) {
      bump(pair.svm->decision(x) >= 0.0 ? pair.class_i : pair.class_j);
    } else if (pair.default_vote.has_value()) {
      bump(*pair.default_vote);
    }
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes.size(); ++c) {
    if (votes[c] > votes[best]) best = c;  // ties keep the earliest class
  }
  return classes[best];
}

int OvoClassifier::predict(const Eigen::VectorXd& x_raw) const {
  return predict_max_wins(pairs, classes, scaler.apply(x_raw));
}

namespace {

double median_pairwise_distance(const Eigen::MatrixXd& X) {
  std::vector<double> distances;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
      distances.push_back((X.row(i) - X.row(j)).norm());
    }
  }
  if (distances.empty()) return 0.0;
  auto mid = distances.begin() + static_cast<std::ptrdiff_t>(distances.size() / 2);
  std::nth_element(distances.begin(), mid, distances.end());
  return *mid;
}

}  // namespace

OvoClassifier train_ovo(const Eigen::MatrixXd& X, std::span<const int> labels,
                        std::span<const int> classes, const OvoOptions& options) {
  if (classes.size() < 2) {
    throw DomainError("train_ovo: at least two classes required");
  }
  if (static_cast<std::size_t>(X.rows()) != labels.size()) {
    throw DomainError("train_ovo: label count mismatch");
  }

  OvoClassifier model;
  model.classes.assign(classes.begin(), classes.end());
  model.scaler = Standardizer::fit(X);
  const Eigen::MatrixXd Xs = model.scaler.apply_rows(X);
  model.support_rows.assign(static_cast<std::size_t>(X.rows()), false);

  KernelSpec kernel;
  kernel.type = options.kernel_type;
  if (kernel.type == KernelSpec::Type::Rbf) {
    if (options.rbf_gamma.has_value()) {
      kernel.gamma = *options.rbf_gamma;
    } else {
      const double length_scale = 0.5 * median_pairwise_distance(Xs);
      kernel.gamma =
          length_scale > 0.0 ? 1.0 / (2.0 * length_scale * length_scale) : 1.0;
    }
  }

  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      PairModel pair;
      pair.class_i = classes[a];
      pair.class_j = classes[b];

      std::vector<int> rows;
      std::vector<int> signs;
      for (Eigen::Index r = 0; r < X.rows(); ++r) {
        const int label = labels[static_cast<std::size_t>(r)];
        if (label == pair.class_i) {
          rows.push_back(static_cast<int>(r));
          signs.push_back(1);
        } else if (label == pair.class_j) {
          rows.push_back(static_cast<int>(r));
          signs.push_back(-1);
        }
      }
      const bool has_i = std::find(signs.begin(), signs.end(), 1) != signs.end();
      const bool has_j = std::find(signs.begin(), signs.end(), -1) != signs.end();
      if (has_i && has_j) {
        Eigen::MatrixXd Xp(static_cast<Eigen::Index>(rows.size()), X.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
          Xp.row(static_cast<Eigen::Index>(r)) = Xs.row(rows[r]);
        }
        pair.svm = train_pairwise(Xp, signs, kernel, options.train);
        for (int local : pair.svm->sv_rows) {
          model.support_rows[static_cast<std::size_t>(rows[static_cast<std::size_t>(local)])] =
              true;
        }
      } else if (has_i || has_j) {
        pair.default_vote = has_i ? pair.class_i : pair.class_j;  // represented class
      }
      model.pairs.push_back(std::move(pair));
    }
  }
  return model;
}

}  // namespace crharvest::svm
