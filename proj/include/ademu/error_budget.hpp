#pragma once

#include "ademu/ade.hpp"
#include "ademu/pwl.hpp"
#include "ademu/step_response.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace ademu {

inline constexpr std::int64_t kHalfTileBits = 18 * 1024;

/// Total output error as a fraction of the output swing R*max|F|. The e_N
/// share comes first; the rest is split evenly over e_A, e_B, e_T and e_X.
struct ErrorBudget {
    double total = 1e-3;
    double eN_share = 0.6;
};

/// TX timing the tables are trimmed for, in ns.
struct TapGeometry {
    double T_ns = 0.125;
    double J_ns = 0.0;
    double dt_min_ns() const { return T_ns - J_ns; }
};

struct FitOptions {
    double tol_rel = 1e-3; ///< PWL tolerance as a fraction of F's swing
    Eigen::Index max_segments = kMaxSegments;
};

/// The five bounds, in output units.
struct BoundSet {
    double eN = 0.0, eA = 0.0, eB = 0.0, eT = 0.0, eX = 0.0;
    double sum() const { return eN + eA + eB + eT + eX; }
};

struct BudgetReport {
    int n = 0;
    double swing = 0.0;
    BoundSet shares;   ///< allocated
    BoundSet realized; ///< recomputed from the chosen n and exponents
    std::vector<int> u, v, w, z;
    std::vector<std::int64_t> bits;
    std::vector<std::int64_t> half_tiles;
    std::int64_t total_bits = 0;
    std::int64_t total_half_tiles = 0;
    double max_fit_error = 0.0;

    /// Fraction of taps whose table fits one half tile.
    double single_half_tile_fraction() const;
};

struct Allocation {
    BudgetReport report;
    std::vector<PwlTable> tables; ///< quantized with u_j, v_j
};

/// Smallest integer e >= 0 with coeff * 2^-e <= share (0 when coeff == 0).
int min_exponent(double coeff, double share);

/// Tap count from the e_N share, then trimmed/fitted tables and the smallest
/// per-tap exponents meeting an equal per-term split of every other share.
/// `force_n` overrides the tap count (the e_N check then reports honestly).
Allocation allocate(const StepResponse& F, const ErrorBudget& budget, const TapGeometry& geo, double R,
                    const FitOptions& fit = {}, std::optional<int> force_n = std::nullopt);

/// Realized bounds of a table set against explicit exponents.
BoundSet realized_bounds(const StepResponse& F, std::span<const PwlTable> tables, std::span<const int> w,
                         std::span<const int> z, double dt_min_ns, double R);

struct SweepRow {
    double share = 0.0;
    int n = 0;
    std::int64_t total_bits = 0;
    bool ok = true;
};

/// Tap count and storage versus e_N share at a fixed total.
std::vector<SweepRow> sweep_eN_share(const StepResponse& F, double total, std::span<const double> shares,
                                     const TapGeometry& geo, double R, const FitOptions& fit = {});

/// Share with the fewest total bits among the successful rows.
std::optional<SweepRow> best_share(std::span<const SweepRow> rows);

struct StorageReport {
    std::vector<std::int64_t> bits;
    std::vector<std::int64_t> half_tiles;
    std::int64_t total_bits = 0;
    std::int64_t total_half_tiles = 0;
};

StorageReport storage_report(std::span<const PwlTable> tables);

nlohmann::json to_json(const BudgetReport& r);

} // namespace ademu
