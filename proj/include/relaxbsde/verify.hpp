#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relaxbsde/hamiltonian.hpp"
#include "relaxbsde/optimizer.hpp"
#include "relaxbsde/problem.hpp"

namespace relaxbsde {

enum class CertificateKind { kNecessaryRelaxed, kNecessaryStrict };

std::string to_string(CertificateKind kind);

/// Maximum-principle certificate for a schedule.
struct Certificate {
  CertificateKind kind = CertificateKind::kNecessaryRelaxed;
  double total_gap = 0.0;
  double gap_std_error = 0.0;
  double tol = 0.0;
  bool passed = false;
  /// (step, per-step gap), the five largest, descending.
  std::vector<std::pair<std::size_t, double>> worst_steps;
  GapReport gap;
  CostEstimate cost;
};

/// Default tolerance: 3 standard errors of the gap plus 0.01.
double default_gap_tolerance(const GapReport& gap);

/// Solves state and adjoint under the control and certifies the integrated
/// maximum condition: pass iff total_gap <= tol. Strict controls run the
/// relaxed pipeline on their Dirac embedding.
Certificate check_necessary(const ProblemSpec& spec, const RelaxedControlSchedule& control,
                            std::optional<double> tol, const PathsConfig& paths);
Certificate check_necessary(const ProblemSpec& spec, const StrictControlSchedule& control,
                            std::optional<double> tol, const PathsConfig& paths);

/// Verdict from a gap already computed.
Certificate make_certificate(CertificateKind kind, const GapReport& gap, std::optional<double> tol);

struct ConvexityReport {
  std::size_t g_convex_passed = 0;
  std::size_t g_convex_total = 0;
  std::size_t h_concave_passed = 0;
  std::size_t h_concave_total = 0;
  std::uint64_t probe_seed = 0;
  double worst_violation = 0.0;

  bool all_passed() const {
    return g_convex_passed == g_convex_total && h_concave_passed == h_concave_total;
  }
};

/// Slack on the midpoint inequalities.
inline constexpr double kConvexitySlack = 1e-9;

/// Midpoint probes of the sufficiency hypotheses: g convex, and the
/// Hamiltonian concave in (y, z). Probes are drawn from the range of (y, z, p)
/// observed on the solved trajectory under mu, inflated by 20%.
ConvexityReport check_sufficient_hypotheses(const ProblemSpec& spec, const RelaxedControlSchedule& mu,
                                            std::size_t n_probes, std::uint64_t seed,
                                            const PathsConfig& paths = {});

}  // namespace relaxbsde
