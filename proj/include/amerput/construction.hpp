#pragma once

#include "amerput/curves.hpp"
#include "amerput/tree.hpp"

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace amerput {

/// Sub-problem of the construction: a spot reached at time `t_old`, the American
/// curve still to be embedded and the terminal law at maturity.
struct Picture {
    double spot = 1.0;
    double t_old = 0.0;
    PLCurve american;
    DiscreteMeasure measure;
};

/// Settings shared by every picture of one construction.
struct BuildSettings {
    double rate = 0.0;
    double maturity = 1.0;
    double tolerance = kDefaultTolerance;
};

struct ExtendedPiece {
    Line line;
    double start = 0.0;  ///< left end of the piece on the extended curve
    bool extension = false;
};

/// American curve continued past the point where it meets K - S, slope corrected
/// at European atoms. `pieces` holds the positive-slope pieces only; the flat zero
/// piece and the final K - S piece are implicit.
struct ExtendedAmerican {
    PLCurve curve;
    std::vector<ExtendedPiece> pieces;
    std::size_t n_original = 0;
    std::optional<double> k_p;  ///< first atom where the continued piece had to be corrected
};

ExtendedAmerican extend_american(const Picture& picture, const BuildSettings& settings);

/// E(exp(r (T - t_old - t)) K): the bound on American prices still achievable after
/// waiting `t` inside the picture.
double upper_bound(const Picture& picture, const BuildSettings& settings, double strike, double t);

struct PieceCandidate {
    double time = 0.0;
    std::size_t atom = 0;
};

/// Closed-form first time (relative to t_old) the upper bound reaches the line, and
/// the atom it touches at. May exceed the picture's remaining life.
PieceCandidate critical_time_piece(const Picture& picture, const BuildSettings& settings, const Line& piece);

struct CriticalPoint {
    double t_crit = 0.0;
    double k_crit = 0.0;
    std::size_t piece = 0;  ///< index into ExtendedAmerican::pieces
    std::size_t atom = 0;   ///< index into the picture's measure
};

/// Earliest critical time over all pieces, or nullopt when nothing crosses before
/// maturity (the picture embeds its European law at T).
std::optional<CriticalPoint> critical_time(const Picture& picture, const BuildSettings& settings,
                                           const ExtendedAmerican& ext);

struct SplitResult {
    double t_crit = 0.0;
    double t_jump = 0.0;
    double k_crit = 0.0;
    double p_down = 0.0;
    double p_up = 0.0;
    double s_down = 0.0;
    double s_up = 0.0;
    std::size_t piece_index = 0;
    Picture picture_down;
    Picture picture_up;
};

SplitResult embed_step(const Picture& picture, const BuildSettings& settings, const ExtendedAmerican& ext,
                       const CriticalPoint& crit);

/// True when the picture's American curve equals max{E, (K - spot)_+}.
bool is_lower_bound_picture(const Picture& picture, const BuildSettings& settings);

struct BuildStats {
    std::size_t splits = 0;
    std::size_t regular_pieces = 0;  ///< N_A of the root American curve
    std::size_t max_depth = 0;
};

struct BuildResult {
    TreeModel model;
    BuildStats stats;
    std::vector<SplitResult> splits;  ///< in the order they were made, in normalized units
};

/// Martingale tree that reprices every quote. Throws InconsistencyError when the
/// market violates a condition and InternalError on invariant breakdown.
BuildResult build_model(const Market& market);

/// Lower model (jump to the European law at T) and upper model (jump at `delta`,
/// then deterministic growth). A negative `delta` selects T * 1e-6.
std::pair<TreeModel, TreeModel> extremal_models(const Market& market, double delta = -1.0);

} // namespace amerput
