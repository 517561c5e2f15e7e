#pragma once

#include <cstddef>
#include <vector>

#include "pintadj/app.hpp"
#include "pintadj/core.hpp"
#include "pintadj/grid_hierarchy.hpp"

namespace pintadj {

enum class Relaxation { F, FCF };

struct SolverConfig {
    double tol = 1e-9;
    int max_iter = 50;
    int max_levels = 3;
    Index coarsening = 4;
    Index min_coarse_points = 2;
    Relaxation relaxation = Relaxation::FCF;
    /// Record every hook call of an iteration so it can be reversed.
    bool record_tape = false;
    int workers = 1;

    void validate() const;
};

/// Finest-level space-time state, one vector per point 0..N.
using SpaceTimeState = std::vector<Vector>;

/// States of one level plus its FAS terms. A coarse level solves
///   u^j = (Phi(u^{j-1}) - shift^j) + rhs^j,
/// i.e. the FAS right-hand side is rhs - shift. Both are empty on the finest level.
/// Keeping them apart makes an exact fine solution a bitwise fixed point.
struct LevelState {
    std::vector<Vector> u;
    std::vector<Vector> rhs;
    std::vector<Vector> shift;
};

struct IterationResult {
    SpaceTimeState state;
    /// Objective of the input iterate, accumulated by the access sweep.
    double objective = 0.0;
    /// ||output - input|| over points 1..N.
    double residual = 0.0;
};

struct AdjointIterationResult {
    SpaceTimeState state;
    double objective = 0.0;
    double residual = 0.0;
    /// Adjoint at the iteration's input vectors, points 0..N (point 0 is always zero).
    std::vector<Vector> adjoint;
    Vector gradient;
    std::size_t tape_entries = 0;
    std::size_t tape_steps = 0;
};

struct SolveResult {
    SpaceTimeState state;
    /// Objective of the returned state.
    double objective = 0.0;
    std::vector<double> residual_history;
    int iterations = 0;
    bool converged = false;
    double seconds = 0.0;
};

/// Everything the shared iteration driver produces; piggyback uses the adjoint half.
struct RunResult {
    SpaceTimeState state;
    std::vector<Vector> adjoint;
    double objective = 0.0;
    Vector gradient;
    std::vector<double> primal_history;
    std::vector<double> adjoint_history;
    int iterations = 0;
    bool converged = false;
    double seconds = 0.0;
};

/// MGRIT with FAS V-cycles over an App. All operations run on `config.workers`
/// in-process ranks and give bitwise identical results for any worker count.
///
/// The level operations (f_relax ... coarse_solve) work on a whole level and are
/// exposed mostly for testing; `solve` is the normal entry point.
class Solver {
public:
    Solver(const App& app, const TimeGridSpec& grid, SolverConfig config);

    const App& app() const { return *app_; }
    const TimeHierarchy& hierarchy() const { return hierarchy_; }
    const SolverConfig& config() const { return config_; }

    /// init(t_i) at every fine point.
    SpaceTimeState initial_guess() const;

    LevelState f_relax(int level, LevelState state, const Design& design) const;
    LevelState c_relax(int level, LevelState state, const Design& design) const;
    LevelState fcf_relax(int level, LevelState state, const Design& design) const;
    /// Injected coarse state and FAS terms on level+1: shift^j = Phi(v^{j-1}) and
    /// rhs^j = v^j + [Phi(u^{mj-1}) + g^{mj} - u^{mj}].
    LevelState restrict_fas(int level, const LevelState& state, const Design& design) const;
    /// Forward substitution v^j = (Phi(v^{j-1}) - shift^j) + rhs^j on `level`.
    LevelState coarse_solve(int level, LevelState state, const Design& design) const;

    /// One V-cycle u_{k+1} = H(u_k), with the access sweep on u_k.
    IterationResult mgrit_iteration(const SpaceTimeState& state, const Design& design) const;

    /// One taped V-cycle followed by its reverse sweep seeded with `adjoint` on the
    /// outputs and `bar_objective` on the objective.
    AdjointIterationResult adjoint_iteration(const SpaceTimeState& state, const std::vector<Vector>& adjoint,
                                             const Design& design, double bar_objective = 1.0) const;

    SolveResult solve(const Design& design) const;

    /// Shared driver. With `with_adjoint` every iteration is taped and reversed
    /// (piggyback); iteration stops once every tracked residual is below tol.
    RunResult run(const Design& design, bool with_adjoint) const;

private:
    const App* app_;
    SolverConfig config_;
    TimeHierarchy hierarchy_;
};

}  // namespace pintadj
