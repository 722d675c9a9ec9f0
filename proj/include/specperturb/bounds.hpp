#ifndef SPECPERTURB_BOUNDS_HPP
#define SPECPERTURB_BOUNDS_HPP

// Perturbation inequalities evaluated on concrete instances. Each check
// returns lhs, rhs and whether lhs <= rhs + 1e-9 max(1, |rhs|).

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "json.hpp"
#include "specperturb/affinity.hpp"
#include "specperturb/completion.hpp"
#include "specperturb/embedding.hpp"
#include "specperturb/numkernel.hpp"
#include "specperturb/sensing.hpp"
#include "specperturb/subspace.hpp"

namespace specperturb {

struct BoundReport {
  std::string theorem;  // stewart | sin_theta | projection | procrustes_2norm | row_coords |
                        // cs_affinity | cs_frobenius | mc_affinity
  double lhs = 0.0;
  double rhs = 0.0;
  std::optional<double> alpha;
  bool satisfied = false;
  bool verifiable = true;  // false when the hypotheses (gap > 1e-8) fail
  std::map<std::string, double> parameters;
  std::string notes;

  nlohmann::ordered_json to_json() const {
    auto num = [](double v) -> nlohmann::ordered_json {
      if (std::isfinite(v)) return v;
      return nullptr;
    };
    nlohmann::ordered_json j;
    j["theorem"] = theorem;
    j["lhs"] = num(lhs);
    j["rhs"] = num(rhs);
    j["alpha"] = alpha ? num(*alpha) : nlohmann::ordered_json(nullptr);
    j["satisfied"] = satisfied;
    j["verifiable"] = verifiable;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [key, v] : parameters) params[key] = num(v);
    j["parameters"] = params;
    j["notes"] = notes;
    return j;
  }
};

inline bool bound_holds(double lhs, double rhs) {
  return std::isfinite(lhs) && std::isfinite(rhs) && lhs <= rhs + 1e-9 * std::max(1.0, std::abs(rhs));
}

inline constexpr double kGapFloor = 1e-8;

namespace detail {

inline void require_same_square(const Matrix& a, const Matrix& at, const char* who) {
  require(a.rows() == a.cols(), std::string(who) + ": A must be square");
  require(at.rows() == a.rows() && at.cols() == a.cols(), std::string(who) + ": A and A~ differ in shape");
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

inline BoundReport stewart_from(const Matrix& A, const Matrix& At, const SymEigResult& e, const SymEigResult& et,
                                double slack_factor) {
  require(A.rows() >= 3, "check_stewart: need N >= 3 for lambda_3");
  require(slack_factor >= 0.0, "check_stewart: slack_factor must be non-negative");
  BoundReport r;
  r.theorem = "stewart";
  const Vector v2 = e.eigenvectors.col(1);
  const Vector vt2 = et.eigenvectors.col(1);
  r.lhs = std::min((vt2 - v2).norm(), (vt2 + v2).norm());
  const double gap = e.eigenvalues(1) - e.eigenvalues(2);
  const double enorm = symmetric_spectral_norm(At - A);
  r.alpha = gap;
  r.parameters["lambda_2"] = e.eigenvalues(1);
  r.parameters["lambda_3"] = e.eigenvalues(2);
  r.parameters["E_2norm"] = enorm;
  r.parameters["slack_factor"] = slack_factor;
  r.notes = "heuristic: the O(|E|^2) constant is unspecified, replaced by slack_factor*|E|_2^2";
  if (gap <= kGapFloor) {
    r.rhs = slack_factor * enorm * enorm;
    r.satisfied = false;
    r.verifiable = false;
    r.notes = "eigengap collapsed; rhs holds only the quadratic slack term. " + r.notes;
    return r;
  }
  r.rhs = enorm / gap + slack_factor * enorm * enorm;
  r.satisfied = bound_holds(r.lhs, r.rhs);
  return r;
}

struct GapInfo {
  double alpha;            // min(lambda_k - lambda_{k+1}, lambda_k) of A
  double alpha_perturbed;  // min(|lambda~_k - lambda_{k+1}|, lambda~_k)
};

inline GapInfo gaps(const SymEigResult& e, const SymEigResult& et, int k) {
  const Eigen::Index n = e.eigenvalues.size();
  require(k >= 1 && k < n, "bound check: need 1 <= k < N");
  const double lk = e.eigenvalues(k - 1), lk1 = e.eigenvalues(k), ltk = et.eigenvalues(k - 1);
  return {std::min(lk - lk1, lk), std::min(std::abs(ltk - lk1), ltk)};
}

inline void annotate_gaps(BoundReport& r, const GapInfo& g, int k) {
  r.alpha = g.alpha;
  r.parameters["k"] = k;
  r.parameters["alpha_cor3"] = g.alpha;
  r.parameters["alpha_perturbed"] = g.alpha_perturbed;
}

inline void mark_unverifiable(BoundReport& r) {
  r.satisfied = false;
  r.verifiable = false;
  r.rhs = 0.0;
  r.notes = "alpha collapsed (<= 1e-8); inequality not verifiable. " + r.notes;
}

inline std::pair<BoundReport, BoundReport> sin_theta_from(const Matrix& A, const Matrix& At, const SymEigResult& e,
                                                          const SymEigResult& et, int k) {
  const GapInfo g = gaps(e, et, k);
  const Matrix V = e.eigenvectors.leftCols(k);
  const Matrix Vt = et.eigenvectors.leftCols(k);
  const Vector st = et.eigenvalues.head(k);

  BoundReport r1;
  r1.theorem = "sin_theta";
  annotate_gaps(r1, g, k);
  r1.notes = "alpha from A (lambda_k - lambda_{k+1}, lambda_k); alpha_perturbed uses lambda~_k";
  BoundReport r2;
  r2.theorem = "projection";
  annotate_gaps(r2, g, k);
  r2.notes = r1.notes;

  const SubspaceComparison cmp = compare_subspaces(V, Vt);
  r1.lhs = cmp.sin_theta_fro;
  r2.lhs = cmp.proj_dist_fro;
  const double resid = (A * Vt - Vt * st.asDiagonal()).norm();
  const double efro = (A - At).norm();
  r1.parameters["residual_fro"] = resid;
  r2.parameters["E_fro"] = efro;
  if (!(g.alpha > kGapFloor)) {
    mark_unverifiable(r1);
    mark_unverifiable(r2);
    return {r1, r2};
  }
  r1.rhs = resid / g.alpha;
  r2.rhs = std::sqrt(2.0) * efro / g.alpha;
  r1.satisfied = bound_holds(r1.lhs, r1.rhs);
  r2.satisfied = bound_holds(r2.lhs, r2.rhs);
  return {r1, r2};
}

inline std::pair<BoundReport, BoundReport> embedding_from(const Matrix& A, const Matrix& At, const SymEigResult& e,
                                                          const SymEigResult& et, int k) {
  const GapInfo g = gaps(e, et, k);
  const Matrix V = e.eigenvectors.leftCols(k);
  const Matrix Vt = et.eigenvectors.leftCols(k);
  const ProcrustesResult pr = procrustes_align(V, Vt);

  BoundReport r1;
  r1.theorem = "procrustes_2norm";
  annotate_gaps(r1, g, k);
  BoundReport r2;
  r2.theorem = "row_coords";
  annotate_gaps(r2, g, k);

  r1.lhs = pr.embed_dist_2;
  r2.lhs = pr.row_dists.maxCoeff();
  const double efro = (A - At).norm();
  r1.parameters["E_fro"] = efro;
  r2.parameters["E_fro"] = efro;
  const bool row_dominated = bound_holds(r2.lhs, r1.lhs);
  r2.parameters["row_le_matrix"] = row_dominated ? 1.0 : 0.0;
  if (!row_dominated) r2.notes = "row distance exceeds the matrix 2-norm distance";
  if (!(g.alpha > kGapFloor)) {
    mark_unverifiable(r1);
    mark_unverifiable(r2);
    return {r1, r2};
  }
  r1.rhs = (1.0 + std::sqrt(2.0)) * efro / g.alpha;
  r2.rhs = r1.rhs;
  r1.satisfied = bound_holds(r1.lhs, r1.rhs);
  r2.satisfied = bound_holds(r2.lhs, r2.rhs) && row_dominated;
  return {r1, r2};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Eigenvector / subspace bounds. The AffinityPack overloads use the
// stationary-direction basis for a repeated top eigenvalue; the Matrix
// overloads take any pair of symmetric matrices.

inline BoundReport check_stewart(const Matrix& A, const Matrix& At, double slack_factor = 10.0) {
  detail::require_same_square(A, At, "check_stewart");
  return detail::stewart_from(A, At, sym_eig(A), sym_eig(At), slack_factor);
}

inline BoundReport check_stewart(const AffinityPack& a, const AffinityPack& at, double slack_factor = 10.0) {
  detail::require_same_square(a.A, at.A, "check_stewart");
  return detail::stewart_from(a.A, at.A, affinity_eigen(a), affinity_eigen(at), slack_factor);
}

/// Returns (sin_theta, projection).
inline std::pair<BoundReport, BoundReport> check_sin_theta(const Matrix& A, const Matrix& At, int k) {
  detail::require_same_square(A, At, "check_sin_theta");
  return detail::sin_theta_from(A, At, sym_eig(A), sym_eig(At), k);
}

inline std::pair<BoundReport, BoundReport> check_sin_theta(const AffinityPack& a, const AffinityPack& at, int k) {
  detail::require_same_square(a.A, at.A, "check_sin_theta");
  return detail::sin_theta_from(a.A, at.A, affinity_eigen(a), affinity_eigen(at), k);
}

/// Returns (procrustes_2norm, row_coords).
inline std::pair<BoundReport, BoundReport> check_embedding(const Matrix& A, const Matrix& At, int k) {
  detail::require_same_square(A, At, "check_embedding");
  return detail::embedding_from(A, At, sym_eig(A), sym_eig(At), k);
}

inline std::pair<BoundReport, BoundReport> check_embedding(const AffinityPack& a, const AffinityPack& at, int k) {
  detail::require_same_square(a.A, at.A, "check_embedding");
  return detail::embedding_from(a.A, at.A, affinity_eigen(a), affinity_eigen(at), k);
}

// ---------------------------------------------------------------------------
// Affinity bounds under data perturbation

/// Compressed-sensing affinity bound on rows X and their measurements.
/// Returns (cs_affinity, cs_frobenius).
inline std::pair<BoundReport, BoundReport> check_cs_affinity(const Matrix& X, const Matrix& measured, double sigma) {
  require(X.rows() == measured.rows(), "check_cs_affinity: row count mismatch");
  require(sigma > 0.0, "check_cs_affinity: sigma must be positive");
  const RipEstimate rip = rip_delta_between(X, measured);
  const Matrix d2 = pairwise_sq_distances(X);
  const double C = d2.maxCoeff() / (2.0 * sigma);
  const AffinityPack a = normalize_affinity(kernel_from_sq_distances(d2, sigma));
  const AffinityPack at = perturbed_affinity(measured, sigma);
  const double per_entry = std::expm1(2.0 * rip.delta_emp * C);
  const double n = static_cast<double>(X.rows());

  BoundReport r;
  r.theorem = "cs_affinity";
  r.lhs = detail::max_abs_diff(at.A, a.A);
  r.rhs = per_entry;
  r.parameters["delta_emp"] = rip.delta_emp;
  r.parameters["C"] = C;
  r.parameters["sigma"] = sigma;
  r.parameters["m"] = static_cast<double>(measured.cols());
  r.parameters["eps"] = per_entry;
  r.parameters["pairs_checked"] = static_cast<double>(rip.pairs_checked);
  r.satisfied = bound_holds(r.lhs, r.rhs);
  r.notes = "delta is the empirical restricted-isometry constant over the data's difference vectors";

  BoundReport f;
  f.theorem = "cs_frobenius";
  f.lhs = (a.A - at.A).norm();
  f.rhs = n * per_entry;
  f.parameters = r.parameters;
  f.satisfied = bound_holds(f.lhs, f.rhs);
  return {r, f};
}

inline std::pair<BoundReport, BoundReport> check_cs_affinity(const Matrix& X, const MeasurementOperator& op,
                                                             double sigma) {
  auto out = check_cs_affinity(X, measure(X, op), sigma);
  out.first.parameters["seed"] = static_cast<double>(op.seed());
  out.second.parameters["seed"] = static_cast<double>(op.seed());
  return out;
}

/// Optional completion inputs, used only to report the theoretical gamma.
struct CompletionContext {
  double p = 1.0;
  double delta = 0.0;
};

/// Affinity bound for completed data. gamma is measured as |X - Xhat|_F.
/// The exponent keeps the full quadratic term: |d^2 - dhat^2| <= 4 gamma d
/// + 4 gamma^2, so each degree-normalized entry moves by at most
/// exp(2 gamma C + 4 gamma^2 / sigma) - 1.
inline BoundReport check_mc_affinity(const Matrix& X, const Matrix& Xhat, double sigma,
                                     std::optional<CompletionContext> theory = std::nullopt) {
  require(X.rows() == Xhat.rows() && X.cols() == Xhat.cols(), "check_mc_affinity: shape mismatch");
  require(sigma > 0.0, "check_mc_affinity: sigma must be positive");
  require_finite(Xhat, "check_mc_affinity");
  const double gamma = (X - Xhat).norm();
  const Matrix d2 = pairwise_sq_distances(X);
  const double C = 4.0 * std::sqrt(d2.maxCoeff()) / (2.0 * sigma);
  const AffinityPack a = normalize_affinity(kernel_from_sq_distances(d2, sigma));
  const AffinityPack at = perturbed_affinity(Xhat, sigma);

  BoundReport r;
  r.theorem = "mc_affinity";
  r.lhs = detail::max_abs_diff(at.A, a.A);
  r.rhs = std::expm1(2.0 * gamma * C + 4.0 * gamma * gamma / sigma);
  r.parameters["gamma_emp"] = gamma;
  r.parameters["C"] = C;
  r.parameters["sigma"] = sigma;
  r.notes = "gamma measured directly as |X - Xhat|_F";
  if (theory) {
    const double g = completion_error_bound(theory->p, X.rows(), X.cols(), theory->delta);
    r.parameters["p"] = theory->p;
    r.parameters["delta"] = theory->delta;
    r.parameters["gamma_theory"] = g;
    r.parameters["rhs_theory"] = std::expm1(2.0 * g * C + 4.0 * g * g / sigma);
    if (g > gamma) r.notes += "; theoretical gamma exceeds the measured one, bound from theory is looser";
  }
  r.satisfied = bound_holds(r.lhs, r.rhs);
  return r;
}

}  // namespace specperturb

#endif  // SPECPERTURB_BOUNDS_HPP
