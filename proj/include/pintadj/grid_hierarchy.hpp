#pragma once

#include <vector>

#include "pintadj/core.hpp"

namespace pintadj {

/// Uniform time grid t_i = t_start + i * dt, i = 0..n_steps.
struct TimeGridSpec {
    double t_start = 0.0;
    double t_final = 1.0;
    Index n_steps = 1;
    double dt = 1.0;

    /// Builds a validated grid; throws ConfigError on n_steps < 1 or t_final <= t_start.
    static TimeGridSpec uniform(double t_start, double t_final, Index n_steps);

    Index points() const { return n_steps + 1; }
};

enum class PointKind { C, F };

/// C iff index is divisible by the coarsening factor.
PointKind classify(Index index, Index m);

/// Fine grid plus the coarse grids obtained by keeping every m-th point.
///
/// Level 0 is the finest. Point i on level l sits at fine index i * m^l, and its
/// time value is computed from that fine index so it matches the fine grid bitwise.
class TimeHierarchy {
public:
    TimeHierarchy(TimeGridSpec fine, Index m, std::vector<Index> points_per_level);

    int num_levels() const { return static_cast<int>(levels_.size()); }
    int coarsest() const { return num_levels() - 1; }
    Index coarsening_factor() const { return m_; }

    const TimeGridSpec& level(int l) const { return levels_.at(l); }
    Index points(int l) const { return levels_[l].n_steps + 1; }
    double dt(int l) const { return levels_[l].dt; }
    double time(int l, Index i) const;
    Index fine_index(int l, Index i) const { return i * stride_[l]; }
    Index stride(int l) const { return stride_[l]; }
    PointKind kind(int /*l*/, Index i) const { return classify(i, m_); }

    /// Per-level C/F map. Mostly useful for tests and diagnostics.
    std::vector<PointKind> cf_map(int l) const;

private:
    Index m_;
    std::vector<TimeGridSpec> levels_;
    std::vector<Index> stride_;
};

/// Coarsens `spec` by factor m until max_levels is reached or the next level would
/// have fewer than min_coarse_points points. Trailing points past the last C-point of
/// a non-divisible level stay on that level as a short F-interval.
TimeHierarchy build_hierarchy(const TimeGridSpec& spec, Index m, int max_levels,
                              Index min_coarse_points = 2);

}  // namespace pintadj
