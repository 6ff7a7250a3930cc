#include "crharvest/gp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace crharvest::gp {

Monomial::Monomial(double coefficient, std::vector<double> exponents)
    : coefficient_(coefficient), exponents_(std::move(exponents)) {
  if (!(coefficient_ > 0.0) || !std::isfinite(coefficient_)) {
    throw StructuralError("Monomial: coefficient must be strictly positive and finite");
  }
}

double Monomial::eval(std::span<const double> z) const {
  if (z.size() != exponents_.size()) {
    throw DomainError("Monomial::eval: point arity mismatch");
  }
  double value = coefficient_;
  for (std::size_t n = 0; n < exponents_.size(); ++n) {
    if (!(z[n] > 0.0)) {
      throw DomainError("Monomial::eval: point must be strictly positive");
    }
    if (exponents_[n] != 0.0) {
      value *= std::pow(z[n], exponents_[n]);
    }
  }
  return value;
}

Posynomial::Posynomial(std::vector<Monomial> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) {
    throw StructuralError("Posynomial: at least one monomial term required");
  }
  for (const Monomial& term : terms_) {
    if (term.var_count() != terms_.front().var_count()) {
      throw StructuralError("Posynomial: terms disagree on variable count");
    }
  }
}

Posynomial Posynomial::from_terms(
    std::span<const std::pair<double, std::vector<double>>> terms) {
  std::vector<Monomial> kept;
  kept.reserve(terms.size());
  for (const auto& [coefficient, exponents] : terms) {
    if (coefficient == 0.0) {
      continue;  // zero-coefficient terms are dropped
    }
    kept.emplace_back(coefficient, exponents);
  }
  return Posynomial(std::move(kept));
}

double Posynomial::eval(std::span<const double> z) const {
  double total = 0.0;
  for (const Monomial& term : terms_) {
    total += term.eval(z);
  }
  return total;
}

Posynomial& Posynomial::operator+=(const Monomial& term) {
  if (term.var_count() != var_count()) {
    throw StructuralError("Posynomial: appended term arity mismatch");
  }
  terms_.push_back(term);
  return *this;
}

Monomial condense(const Posynomial& g, std::span<const double> z_prev) {
  const std::size_t n = g.var_count();
  if (z_prev.size() != n) {
    throw DomainError("condense: expansion point arity mismatch");
  }

  const double g_value = g.eval(z_prev);
  // Weights mu~_k = mu_k(z_prev) / g(z_prev); they sum to one.
  // g~(z) = prod_k (mu_k(z) / mu~_k)^{mu~_k}
  //       = [prod_k (c_k / mu~_k)^{mu~_k}] * prod_n z_n^{sum_k mu~_k a_kn}.
  double log_coefficient = 0.0;
  std::vector<double> exponents(n, 0.0);
  for (const Monomial& term : g.terms()) {
    const double weight = term.eval(z_prev) / g_value;
    if (weight <= 0.0) {
      continue;  // degenerate weight, excluded from the product
    }
    log_coefficient += weight * (std::log(term.coefficient()) - std::log(weight));
    for (std::size_t v = 0; v < n; ++v) {
      exponents[v] += weight * term.exponents()[v];
    }
  }
  return Monomial(std::exp(log_coefficient), std::move(exponents));
}

void GpProblem::validate() const {
  const std::size_t n = variables.size();
  auto check = [n](std::size_t arity, const char* what) {
    if (arity != n) {
      throw StructuralError(std::string("GpProblem: ") + what +
                            " references a different variable count");
    }
  };
  check(objective.var_count(), "objective");
  for (const Posynomial& f : less_equal_one) check(f.var_count(), "inequality");
  for (const Monomial& f : equal_one) check(f.var_count(), "equality");
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Posynomial in log coordinates: F(y) = log sum_k exp(A_k . y + b_k).
struct LogSumExp {
  MatrixXd A;  // K x n exponent rows
  VectorXd b;  // K log-coefficients

  static LogSumExp from(const Posynomial& p, std::size_t n) {
    const auto& terms = p.terms();
    LogSumExp f;
    f.A.resize(static_cast<Eigen::Index>(terms.size()), static_cast<Eigen::Index>(n));
    f.b.resize(static_cast<Eigen::Index>(terms.size()));
    for (std::size_t k = 0; k < terms.size(); ++k) {
      f.b(static_cast<Eigen::Index>(k)) = std::log(terms[k].coefficient());
      for (std::size_t v = 0; v < n; ++v) {
        f.A(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(v)) =
            terms[k].exponents()[v];
      }
    }
    return f;
  }

  double value(const VectorXd& y) const {
    const VectorXd w = A * y + b;
    const double shift = w.maxCoeff();
    return shift + std::log((w.array() - shift).exp().sum());
  }

  double value_grad_hess(const VectorXd& y, VectorXd* grad, MatrixXd* hess) const {
    const VectorXd w = A * y + b;
    const double shift = w.maxCoeff();
    VectorXd p = (w.array() - shift).exp();
    const double total = p.sum();
    p /= total;
    if (grad != nullptr) {
      *grad = A.transpose() * p;
    }
    if (hess != nullptr) {
      const VectorXd g = A.transpose() * p;
      *hess = A.transpose() * p.asDiagonal() * A - g * g.transpose();
    }
    return shift + std::log(total);
  }
};

// Smooth function interface: value plus optional gradient/Hessian. Lets the
// phase-one slack problem reuse the same centering machinery.
using SmoothFn = std::function<double(const VectorXd&, VectorXd*, MatrixXd*)>;

SmoothFn wrap(const LogSumExp& f) {
  return [&f](const VectorXd& y, VectorXd* g, MatrixXd* h) {
    return f.value_grad_hess(y, g, h);
  };
}

struct CenteringOutcome {
  VectorXd y;
  int newton_iterations = 0;
};

// Equality-constrained Newton minimization of f0 + (1/t) * barrier over
// {C y = d}; the 1/t scaling keeps line-search comparisons well conditioned
// when t grows large. The start must satisfy the equalities and lie strictly
// inside every inequality.
CenteringOutcome center(const SmoothFn& f0, const std::vector<SmoothFn>& fis,
                        const MatrixXd& C, double t, VectorXd y, int max_newton) {
  const Eigen::Index n = y.size();
  const Eigen::Index e = C.rows();
  const double inv_t = 1.0 / t;

  auto scaled_value = [&](const VectorXd& point, bool* in_domain) -> double {
    double value = f0(point, nullptr, nullptr);
    for (const SmoothFn& fi : fis) {
      const double c = fi(point, nullptr, nullptr);
      if (c >= 0.0) {
        *in_domain = false;
        return std::numeric_limits<double>::infinity();
      }
      value -= inv_t * std::log(-c);
    }
    *in_domain = true;
    return value;
  };

  VectorXd grad(n), fi_grad(n);
  MatrixXd hess(n, n), fi_hess(n, n);
  int iterations = 0;

  for (; iterations < max_newton; ++iterations) {
    double value = f0(y, &grad, &hess);
    for (const SmoothFn& fi : fis) {
      const double c = fi(y, &fi_grad, &fi_hess);
      value -= inv_t * std::log(-c);
      grad += inv_t * fi_grad / (-c);
      hess += inv_t * (fi_hess / (-c) + (fi_grad * fi_grad.transpose()) / (c * c));
    }
    hess.diagonal().array() += 1e-14;

    VectorXd step(n);
    if (e > 0) {
      MatrixXd kkt = MatrixXd::Zero(n + e, n + e);
      kkt.topLeftCorner(n, n) = hess;
      kkt.topRightCorner(n, e) = C.transpose();
      kkt.bottomLeftCorner(e, n) = C;
      VectorXd rhs = VectorXd::Zero(n + e);
      rhs.head(n) = -grad;
      const VectorXd sol = kkt.fullPivLu().solve(rhs);
      step = sol.head(n);
    } else {
      step = hess.ldlt().solve(-grad);
    }

    const double decrement_sq = -grad.dot(step);
    if (!(decrement_sq > 0.0) || 0.5 * decrement_sq < 1e-15) {
      break;
    }

    // Backtracking line search: stay in the barrier domain, then Armijo.
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      bool in_domain = false;
      const VectorXd candidate = y + alpha * step;
      const double candidate_value = scaled_value(candidate, &in_domain);
      if (in_domain && candidate_value <= value - 0.25 * alpha * decrement_sq) {
        y = candidate;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) {
      break;  // progress below measurable resolution
    }
  }
  return {std::move(y), iterations};
}

VectorXd project_onto_equalities(const MatrixXd& C, const VectorXd& d, VectorXd y) {
  if (C.rows() == 0) return y;
  const VectorXd residual = C * y - d;
  const MatrixXd gram = C * C.transpose();
  y -= C.transpose() * gram.fullPivLu().solve(residual);
  return y;
}

}  // namespace

GpSolution solve_gp(const GpProblem& problem, std::span<const double> start,
                    const SolveOptions& options) {
  problem.validate();
  const std::size_t n = problem.variables.size();
  if (start.size() != n) {
    throw DomainError("solve_gp: start point arity mismatch");
  }
  VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t v = 0; v < n; ++v) {
    if (!(start[v] > 0.0)) {
      throw DomainError("solve_gp: start point must be strictly positive");
    }
    y(static_cast<Eigen::Index>(v)) = std::log(start[v]);
  }

  const LogSumExp objective = LogSumExp::from(problem.objective, n);
  std::vector<LogSumExp> constraints;
  constraints.reserve(problem.less_equal_one.size());
  for (const Posynomial& f : problem.less_equal_one) {
    constraints.push_back(LogSumExp::from(f, n));
  }

  // Monomial equalities are affine in log space: a . y = -log(c).
  const Eigen::Index e = static_cast<Eigen::Index>(problem.equal_one.size());
  MatrixXd C(e, static_cast<Eigen::Index>(n));
  VectorXd d(e);
  for (Eigen::Index i = 0; i < e; ++i) {
    const Monomial& m = problem.equal_one[static_cast<std::size_t>(i)];
    for (std::size_t v = 0; v < n; ++v) {
      C(i, static_cast<Eigen::Index>(v)) = m.exponents()[v];
    }
    d(i) = -std::log(m.coefficient());
  }
  y = project_onto_equalities(C, d, y);

  std::vector<SmoothFn> fis;
  fis.reserve(constraints.size());
  for (const LogSumExp& c : constraints) {
    fis.push_back(wrap(c));
  }

  int total_newton = 0;
  const double barrier_scale = 50.0;

  // Phase one: find a strictly feasible point when the start is not one.
  double worst = -std::numeric_limits<double>::infinity();
  for (const LogSumExp& c : constraints) {
    worst = std::max(worst, c.value(y));
  }
  if (!constraints.empty() && worst >= -1e-10) {
    const Eigen::Index np = static_cast<Eigen::Index>(n) + 1;
    VectorXd yp(np);
    yp.head(static_cast<Eigen::Index>(n)) = y;
    yp(np - 1) = worst + 1.0;

    SmoothFn slack_objective = [np](const VectorXd& point, VectorXd* g, MatrixXd* h) {
      if (g != nullptr) {
        g->setZero(np);
        (*g)(np - 1) = 1.0;
      }
      if (h != nullptr) h->setZero(np, np);
      return point(np - 1);
    };
    std::vector<SmoothFn> phase_one_fis;
    phase_one_fis.reserve(constraints.size());
    for (const LogSumExp& c : constraints) {
      phase_one_fis.push_back(
          [&c, n, np](const VectorXd& point, VectorXd* g, MatrixXd* h) {
            VectorXd gy;
            MatrixXd hy;
            const double value =
                c.value_grad_hess(point.head(static_cast<Eigen::Index>(n)),
                                  g != nullptr ? &gy : nullptr, h != nullptr ? &hy : nullptr);
            if (g != nullptr) {
              g->setZero(np);
              g->head(static_cast<Eigen::Index>(n)) = gy;
              (*g)(np - 1) = -1.0;
            }
            if (h != nullptr) {
              h->setZero(np, np);
              h->topLeftCorner(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) =
                  hy;
            }
            return value - point(np - 1);
          });
    }
    MatrixXd Cp(e, np);
    if (e > 0) {
      Cp.setZero();
      Cp.leftCols(static_cast<Eigen::Index>(n)) = C;
    }

    double t = 1.0;
    bool feasible = false;
    for (int outer = 0; outer < 64; ++outer) {
      CenteringOutcome outcome =
          center(slack_objective, phase_one_fis, Cp, t, yp, options.max_newton_iterations);
      yp = std::move(outcome.y);
      total_newton += outcome.newton_iterations;
      if (yp(np - 1) < -1e-8) {
        feasible = true;
        break;
      }
      if (static_cast<double>(phase_one_fis.size()) / t < options.duality_gap_tol) {
        break;
      }
      t *= barrier_scale;
    }
    if (!feasible) {
      throw InfeasibleError("solve_gp: phase one certified an empty feasible interior");
    }
    y = yp.head(static_cast<Eigen::Index>(n));
  }

  // Phase two: follow the central path of the original problem.
  const SmoothFn f0 = wrap(objective);
  double t = 1.0;
  for (int outer = 0; outer < 64; ++outer) {
    CenteringOutcome outcome = center(f0, fis, C, t, y, options.max_newton_iterations);
    y = std::move(outcome.y);
    total_newton += outcome.newton_iterations;
    if (constraints.empty() ||
        static_cast<double>(constraints.size()) / t < options.duality_gap_tol) {
      break;
    }
    t *= barrier_scale;
  }

  GpSolution solution;
  solution.z.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    solution.z[v] = std::exp(y(static_cast<Eigen::Index>(v)));
  }
  solution.objective = problem.objective.eval(solution.z);
  solution.newton_iterations = total_newton;

  // KKT report: fit multipliers (lambda >= 0 on inequalities, free nu on
  // equalities) minimizing the Lagrangian stationarity norm; active-set
  // clipping removes constraints that would need negative lambda.
  VectorXd g0(static_cast<Eigen::Index>(n));
  objective.value_grad_hess(y, &g0, nullptr);
  const std::size_t m = constraints.size();
  MatrixXd all_grads(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  double max_violation = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    VectorXd ci_grad(static_cast<Eigen::Index>(n));
    const double ci =
        constraints[i].value_grad_hess(y, &ci_grad, nullptr);
    max_violation = std::max(max_violation, std::expm1(ci));
    all_grads.col(static_cast<Eigen::Index>(i)) = ci_grad;
  }
  if (e > 0) {
    const VectorXd eq_residual = C * y - d;
    for (Eigen::Index i = 0; i < e; ++i) {
      max_violation = std::max(max_violation, std::abs(std::expm1(eq_residual(i))));
    }
  }

  std::vector<std::size_t> kept(m);
  for (std::size_t i = 0; i < m; ++i) kept[i] = i;
  VectorXd residual = g0;
  for (std::size_t pass = 0; pass <= m; ++pass) {
    const Eigen::Index k = static_cast<Eigen::Index>(kept.size());
    MatrixXd basis(static_cast<Eigen::Index>(n), k + e);
    for (Eigen::Index i = 0; i < k; ++i) {
      basis.col(i) = all_grads.col(static_cast<Eigen::Index>(kept[static_cast<std::size_t>(i)]));
    }
    if (e > 0) basis.rightCols(e) = C.transpose();
    if (basis.cols() == 0) {
      residual = g0;
      break;
    }
    const VectorXd mu = basis.colPivHouseholderQr().solve(-g0);
    Eigen::Index worst_index = -1;
    double worst_value = -1e-12;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (mu(i) < worst_value) {
        worst_value = mu(i);
        worst_index = i;
      }
    }
    if (worst_index < 0) {
      residual = g0 + basis * mu;
      break;
    }
    kept.erase(kept.begin() + worst_index);
  }
  solution.kkt_residual = residual.lpNorm<Eigen::Infinity>();
  solution.max_constraint_violation = std::max(max_violation, 0.0);

  if (solution.max_constraint_violation > options.feasibility_tol) {
    throw Error("solve_gp: returned point violates feasibility tolerance");
  }
  if (solution.kkt_residual > options.kkt_tol) {
    throw Error("solve_gp: stationarity tolerance not reached");
  }
  return solution;
}

ScaResult sca_solve(const ProblemBuilder& builder, const ScaSettings& settings) {
  if (settings.start.empty()) {
    throw DomainError("sca_solve: an initial point is required");
  }
  for (double z : settings.start) {
    if (!(z > 0.0)) {
      throw DomainError("sca_solve: initial point must be strictly positive");
    }
  }

  ScaResult result;
  std::vector<double> z_prev = settings.start;

  // chi^(0): objective at the initial feasible point.
  double chi_prev = builder(z_prev).objective.eval(z_prev);
  if (settings.record_trace) {
    result.trace.push_back({0, chi_prev, z_prev});
  }

  for (int r = 1; r <= settings.max_iterations; ++r) {
    GpProblem subproblem = builder(z_prev);
    GpSolution solution = solve_gp(subproblem, z_prev, settings.solver);
    result.iterations = r;
    z_prev = solution.z;
    const double chi = solution.objective;
    if (settings.record_trace) {
      result.trace.push_back({r, chi, z_prev});
    }
    const bool converged = std::abs(chi - chi_prev) <= settings.tolerance;
    chi_prev = chi;
    if (converged) {
      result.converged = true;
      break;
    }
  }
  result.z = std::move(z_prev);
  result.objective = chi_prev;
  return result;
}

}  // namespace crharvest::gp
