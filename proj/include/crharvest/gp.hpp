#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crharvest/errors.hpp"

namespace crharvest::gp {

/// Monomial c * prod_n z_n^{a_n} over the positive orthant.
/// The coefficient is strictly positive; zero- or negative-coefficient
/// terms are rejected at construction.
class Monomial {
 public:
  Monomial(double coefficient, std::vector<double> exponents);

  double coefficient() const { return coefficient_; }
  const std::vector<double>& exponents() const { return exponents_; }
  std::size_t var_count() const { return exponents_.size(); }

  double eval(std::span<const double> z) const;

  bool operator==(const Monomial&) const = default;

 private:
  double coefficient_;
  std::vector<double> exponents_;
};

/// Ordered sum of monomials, all over the same variable list.
class Posynomial {
 public:
  explicit Posynomial(std::vector<Monomial> terms);

  /// Builds from (coefficient, exponents) pairs, dropping zero-coefficient
  /// terms. Negative coefficients raise StructuralError.
  static Posynomial from_terms(std::span<const std::pair<double, std::vector<double>>> terms);

  const std::vector<Monomial>& terms() const { return terms_; }
  std::size_t var_count() const { return terms_.front().var_count(); }

  double eval(std::span<const double> z) const;

  Posynomial& operator+=(const Monomial& term);

  bool operator==(const Posynomial&) const = default;

 private:
  std::vector<Monomial> terms_;
};

/// Arithmetic-geometric-mean condensation: the best monomial lower bound of
/// g at z_prev. The result satisfies condense(g, z0)(z) <= g(z) everywhere
/// on the positive orthant, with equality at z = z0.
Monomial condense(const Posynomial& g, std::span<const double> z_prev);

/// Standard-form geometric program: minimize a posynomial subject to
/// posynomial <= 1 and monomial == 1 constraints, variables positive.
struct GpProblem {
  std::vector<std::string> variables;
  Posynomial objective;
  std::vector<Posynomial> less_equal_one;
  std::vector<Monomial> equal_one;

  /// Checks structural consistency (arity of every term vs. variable list).
  void validate() const;
};

struct SolveOptions {
  double feasibility_tol = 1e-8;
  double kkt_tol = 1e-6;
  double duality_gap_tol = 1e-10;
  int max_newton_iterations = 200;
};

struct GpSolution {
  std::vector<double> z;
  double objective = 0.0;
  int newton_iterations = 0;
  double kkt_residual = 0.0;
  double max_constraint_violation = 0.0;  // max over f_l(z) - 1 and |monomial - 1|
};

/// Solves the GP via the log-space barrier (interior-point) method.
/// Throws InfeasibleError when phase one certifies an empty interior and
/// Error when Newton fails to converge within the iteration budget.
GpSolution solve_gp(const GpProblem& problem, std::span<const double> start,
                    const SolveOptions& options = {});

/// One recorded outer iteration of the SCA loop.
struct ScaIterate {
  int iteration = 0;
  double objective = 0.0;
  std::vector<double> z;
};

struct ScaSettings {
  double tolerance = 1e-6;  // varpi: stop when |chi^(r+1) - chi^(r)| <= tolerance
  int max_iterations = 50;
  std::vector<double> start;  // z^(0), strictly positive and subproblem-feasible
  bool record_trace = false;
  SolveOptions solver;
};

struct ScaResult {
  std::vector<double> z;
  double objective = 0.0;
  int iterations = 0;  // number of inner GP solves performed
  bool converged = false;
  std::vector<ScaIterate> trace;  // populated when record_trace is set
};

using ProblemBuilder = std::function<GpProblem(std::span<const double> z_prev)>;

/// Successive convex approximation: repeatedly rebuilds the condensed
/// subproblem at the previous iterate and solves it, until the objective
/// change falls below the tolerance. The objective sequence is
/// non-increasing because each condensation is tight at its expansion point.
ScaResult sca_solve(const ProblemBuilder& builder, const ScaSettings& settings);

}  // namespace crharvest::gp
