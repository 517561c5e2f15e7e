#include "pintadj/grid_hierarchy.hpp"

#include <cmath>
#include <string>

namespace pintadj {

TimeGridSpec TimeGridSpec::uniform(double t_start, double t_final, Index n_steps)
{
    if (n_steps < 1) {
        throw ConfigError("time grid needs at least one step, got " + std::to_string(n_steps));
    }
    if (!(t_final > t_start) || !std::isfinite(t_start) || !std::isfinite(t_final)) {
        throw ConfigError("time grid needs t_final > t_start");
    }
    return TimeGridSpec{t_start, t_final, n_steps, (t_final - t_start) / static_cast<double>(n_steps)};
}

PointKind classify(Index index, Index m)
{
    return index % m == 0 ? PointKind::C : PointKind::F;
}

TimeHierarchy::TimeHierarchy(TimeGridSpec fine, Index m, std::vector<Index> points_per_level) : m_(m)
{
    Index stride = 1;
    for (std::size_t l = 0; l < points_per_level.size(); ++l) {
        const Index n = points_per_level[l] - 1;
        TimeGridSpec spec;
        spec.t_start = fine.t_start;
        spec.n_steps = n;
        spec.dt = fine.dt * static_cast<double>(stride);
        spec.t_final = fine.t_start + static_cast<double>(n * stride) * fine.dt;
        if (l == 0) {
            spec.t_final = fine.t_final;
        }
        levels_.push_back(spec);
        stride_.push_back(stride);
        stride *= m;
    }
}

double TimeHierarchy::time(int l, Index i) const
{
    const Index fi = fine_index(l, i);
    if (fi == levels_[0].n_steps) {
        return levels_[0].t_final;
    }
    return levels_[0].t_start + static_cast<double>(fi) * levels_[0].dt;
}

std::vector<PointKind> TimeHierarchy::cf_map(int l) const
{
    std::vector<PointKind> map(static_cast<std::size_t>(points(l)));
    for (Index i = 0; i < points(l); ++i) {
        map[static_cast<std::size_t>(i)] = kind(l, i);
    }
    return map;
}

TimeHierarchy build_hierarchy(const TimeGridSpec& spec, Index m, int max_levels, Index min_coarse_points)
{
    if (m < 2) {
        throw ConfigError("coarsening factor must be at least 2, got " + std::to_string(m));
    }
    if (spec.n_steps < 1) {
        throw ConfigError("time grid needs at least one step");
    }
    if (max_levels < 1) {
        throw ConfigError("max_levels must be at least 1");
    }
    if (min_coarse_points < 2) {
        min_coarse_points = 2;
    }

    std::vector<Index> points{spec.n_steps + 1};
    while (static_cast<int>(points.size()) < max_levels) {
        const Index next = (points.back() - 1) / m + 1;
        if (next < min_coarse_points) {
            break;
        }
        points.push_back(next);
    }
    return TimeHierarchy(spec, m, std::move(points));
}

}  // namespace pintadj
