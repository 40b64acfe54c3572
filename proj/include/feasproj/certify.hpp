#pragma once

#include <string>
#include <vector>

#include "feasproj/nlp_solver.hpp"
#include "feasproj/pop.hpp"

namespace feasproj {

// System of quadratic equations f: R^m -> R^n; derivatives of order >= 3
// vanish identically.
struct PolySystem {
  std::vector<QuadraticFunction> equations;
  Index dim = 0;
};

Vector system_value(const PolySystem& sys, const Vector& x);
Matrix system_jacobian(const PolySystem& sys, const Vector& x);

// Moore-Penrose pseudoinverse via SVD; singular values below
// rel_tol * sigma_max are truncated. rank_deficient reports a truncation.
Matrix pseudo_inverse(const Matrix& J, double rel_tol = 1e-10,
                      bool* rank_deficient = nullptr);

// N_f(x) = x - [Jf(x)]^+ f(x)
Vector newton_step(const PolySystem& sys, const Vector& x);

struct AlphaCertificate {
  double alpha = 0, beta = 0, gamma = 0;
  double alpha0 = 0;       // (13 - 3 sqrt(17)) / 4
  bool certified = false;  // alpha <= alpha0
  Vector refined_point;
  double distance_bound = 0;  // 2 beta bounds the distance to the associated zero
};

extern const double kAlpha0;

// beta = ||x - N_f(x)||, gamma bounded by the spectral norm of the unfolded
// second-derivative contraction (sound over-estimate), alpha = beta * gamma.
AlphaCertificate alpha_test(const PolySystem& sys, const Vector& x);

struct NewtonRefineResult {
  Vector point;
  bool converged = false;
  bool diverged = false;
  std::vector<double> trace;  // residual sup-norms per iteration
};

NewtonRefineResult newton_refine(const PolySystem& sys, const Vector& x0, int max_iter,
                                 double tol);

// Power-flow equality system with the standard PV/slack split; controls
// (voltage magnitude setpoints, non-slack generator injections) come from the
// case's generator setpoints.
PolySystem build_power_flow_system(const CaseData& cd, const FlowMatrices& fm);

enum class Stage3Mode { power_flow, least_squares };

struct Stage3Result {
  bool success = false;
  Vector point;  // unslacked layout
  double objective = 0;
  double max_violation = 0;
  double distance = 0;  // ||chi - chi_tilde||_2
  std::string status;
  bool has_certificate = false;
  AlphaCertificate certificate;
};

// Projects chi_tilde onto the feasible set: returns chi_tilde when already
// feasible; power_flow mode refines the power-flow equalities by Newton
// iteration seeded at chi_tilde (least-squares fallback when Newton fails);
// least_squares mode solves min ||chi - chi_tilde||_p subject to the
// unslacked constraints.
Stage3Result project_stage3(const PopProblem& unslacked, const CaseData& cd,
                            const FlowMatrices& fm, const Vector& chi_tilde,
                            Stage3Mode mode, NormKind norm, const NlpOptions& opts,
                            double feasibility_tol = 1e-6, int newton_max_iter = 100);

}  // namespace feasproj
