#pragma once

#include "fcml/common.hpp"
#include "fcml/modulation.hpp"
#include "fcml/sampling.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace fcml {

/// P = I - alpha dS dS'.
[[nodiscard]] Matrix system_matrix(const Vector& ds, double alpha);

/// Closed-form spectrum of system_matrix, ascending: {1 - alpha dS'dS} and N-3 ones.
[[nodiscard]] Vector system_matrix_eigenvalues(const Vector& ds, double alpha);

/// dS at sample n = 0..Ndis-1 of the schedule, evaluated on the exact extremum grid.
[[nodiscard]] std::vector<Vector> switching_sequence(const DutyVector& d,
                                                     const SamplingSchedule& schedule);

/// Rank of the stacked rows by Gaussian elimination with partial pivoting.
[[nodiscard]] int stacked_rank(const std::vector<Vector>& rows, double tol = 1e-9);

struct PfrResult {
    Matrix p_fr;          ///< P[Ndis-1] ... P[1] P[0]
    double beta_max = 0;  ///< spectral radius of p_fr
};

[[nodiscard]] PfrResult p_fr_and_beta_max(const std::vector<Vector>& seq, double alpha);

[[nodiscard]] std::vector<std::pair<double, double>> beta_max_curve(const std::vector<Vector>& seq,
                                                                    const std::vector<double>& alphas);

/// Smallest sampled alpha with ndis taus ff_err_rate / (1 - beta_max) <= ve_dc.
/// ff_err_rate is the steady feedforward drift in V/s. Throws InfeasibleError when no
/// sampled alpha qualifies.
[[nodiscard]] double alpha_lower_bound_dc(const std::vector<std::pair<double, double>>& curve,
                                          int ndis, double taus, double ff_err_rate,
                                          double ve_dc);

// -----------------------------------------------------------------------------
// Full-rank feasibility over duty space
// -----------------------------------------------------------------------------

struct RankReport {
    int levels = 0;
    double dduty_max = 0.0;
    double grid_step = 0.0;
    double dead_margin = 0.0;
    bool feasible = false;
    double evaluated_points = 0;  ///< grid points checked (exact below 2^53)
    double failing_points = 0;
    double skipped_points = 0;    ///< grid points dropped by dead-duty gating
    std::vector<DutyVector> failing;  ///< one concrete grid witness per failing band pattern
    std::vector<std::vector<int>> failing_bands;
    int failing_patterns = 0;
};

/// Sweeps d_k = j * grid_step in (0, 1) with |d_{k+1} - d_k| <= dduty_max. Grid points
/// within dead_margin of a dead duty are skipped. Comparator outcomes at the sampling
/// instants only depend on which band between adjacent carrier sample levels each d_k
/// occupies, so the sweep enumerates band patterns and counts their grid points.
[[nodiscard]] RankReport full_rank_feasibility(int levels, double dduty_max, double grid_step,
                                               double dead_margin = kDefaultDeadMargin,
                                               std::size_t max_witnesses = 64);

/// Point-by-point reference sweep (exponential in N; for cross-checking only).
[[nodiscard]] RankReport full_rank_feasibility_bruteforce(int levels, double dduty_max,
                                                          double grid_step,
                                                          double dead_margin = kDefaultDeadMargin);

struct FeasibilityBoundary {
    std::optional<double> max_feasible;  ///< largest feasible multiple of grid_step
    std::optional<double> first_failing; ///< smallest infeasible multiple of grid_step
};

[[nodiscard]] FeasibilityBoundary max_feasible_dduty(int levels, double grid_step,
                                                     double dead_margin = kDefaultDeadMargin,
                                                     double upper = 1.0);

// -----------------------------------------------------------------------------
// Estimator frequency response
// -----------------------------------------------------------------------------

struct FrequencyResponseConfig {
    int levels = 6;
    int ns = 47;
    double switching_frequency = 120e3;
    double amplitude = 1.0;
    int settle_periods = 20;
    int measure_periods = 10;
    std::int64_t max_samples = 20'000'000;
};

struct BodePoint {
    double freq = 0.0;
    double gain_db = 0.0;
    double phase_deg = 0.0;
    bool converged = false;
};

/// Drives every capacitor with A sin(2 pi f n taus), synthesizes v_sw from the pole
/// equation and the feedforward as (1 - ff_error_ratio) times the exact increment.
/// ff_error_ratio = 1 is the feedback-only estimator.
[[nodiscard]] std::vector<BodePoint> estimator_frequency_response(
    const FrequencyResponseConfig& cfg, const DutyVector& duty, double alpha,
    double ff_error_ratio, const std::vector<double>& freqs);

}  // namespace fcml
