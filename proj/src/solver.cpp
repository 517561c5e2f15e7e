#include "pintadj/solver.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <optional>
#include <string>

#include "pintadj/actions.hpp"
#include "pintadj/parallel.hpp"
#include "pintadj/tape.hpp"

namespace pintadj {

void SolverConfig::validate() const
{
    if (!(tol > 0.0)) {
        throw ConfigError("tol must be positive");
    }
    if (max_iter < 0) {
        throw ConfigError("max_iter must be non-negative");
    }
    if (max_levels < 1) {
        throw ConfigError("max_levels must be at least 1");
    }
    if (coarsening < 2) {
        throw ConfigError("coarsening factor must be at least 2");
    }
    if (workers < 1) {
        throw ConfigError("workers must be at least 1");
    }
}

namespace {

struct LevelData {
    Range range;
    bool has_rhs = false;
    std::vector<TrackedVector> u;
    std::vector<TrackedVector> rhs;
    std::vector<TrackedVector> shift;
    std::vector<TrackedVector> injected;

    std::size_t local(Index i) const { return static_cast<std::size_t>(i - range.begin); }
    TrackedVector& at(Index i) { return u[local(i)]; }
    const TrackedVector& at(Index i) const { return u[local(i)]; }

    void clear()
    {
        u.clear();
        rhs.clear();
        shift.clear();
        injected.clear();
        has_rhs = false;
    }
};

/// One rank of the SPMD solver. Owns a contiguous slice of every level and runs the
/// cycle phases on it, exchanging boundary states with its neighbours.
///
/// Within a phase each state is read at most once by a step or a send, or in a
/// fixed per-point order, so adjoint accumulation order does not depend on where
/// the rank boundaries fall.
class Worker {
public:
    Worker(const Solver& solver, const Partition& partition, const Endpoint& endpoint, const Design& design)
        : app_(solver.app()), h_(solver.hierarchy()), cfg_(solver.config()), partition_(partition),
          endpoint_(endpoint), rec_(solver.app(), design, &endpoint_),
          levels_(static_cast<std::size_t>(solver.hierarchy().num_levels()))
    {
        for (int l = 0; l < h_.num_levels(); ++l) {
            levels_[static_cast<std::size_t>(l)].range = partition.range(l, endpoint.rank());
        }
    }

    ActionRecorder& recorder() { return rec_; }
    LevelData& level(int l) { return levels_[static_cast<std::size_t>(l)]; }
    int rank() const { return endpoint_.rank(); }

    void load(int l, const std::vector<Vector>& u, const std::vector<Vector>* rhs = nullptr,
              const std::vector<Vector>* shift = nullptr)
    {
        auto& L = level(l);
        L.clear();
        for (Index i = L.range.begin; i < L.range.end; ++i) {
            L.u.push_back(rec_.adopt(u[static_cast<std::size_t>(i)]));
        }
        if (rhs && !rhs->empty()) {
            L.has_rhs = true;
            for (Index i = L.range.begin; i < L.range.end; ++i) {
                L.rhs.push_back(rec_.adopt((*rhs)[static_cast<std::size_t>(i)]));
                L.shift.push_back(rec_.adopt(shift && !shift->empty() ? (*shift)[static_cast<std::size_t>(i)]
                                                                       : Vector(u[static_cast<std::size_t>(i)].size(), 0.0)));
            }
        }
    }

    void store(int l, LevelState& out)
    {
        auto& L = level(l);
        for (Index i = L.range.begin; i < L.range.end; ++i) {
            out.u[static_cast<std::size_t>(i)] = L.at(i).value;
            if (L.has_rhs && !out.rhs.empty()) {
                out.rhs[static_cast<std::size_t>(i)] = L.rhs[L.local(i)].value;
                out.shift[static_cast<std::size_t>(i)] = L.shift[L.local(i)].value;
            }
        }
    }

    /// Fresh zero slots on every fine vector; returns them (the iteration inputs).
    std::vector<SlotPtr> refresh_slots()
    {
        std::vector<SlotPtr> inputs;
        for (auto& v : level(0).u) {
            v.bar = make_slot(v.value.size());
            inputs.push_back(v.bar);
        }
        return inputs;
    }

    void drop_slots()
    {
        for (auto& v : level(0).u) {
            v.bar.reset();
        }
    }

    std::vector<Vector> fine_values() const
    {
        std::vector<Vector> out;
        out.reserve(levels_[0].u.size());
        for (const auto& v : levels_[0].u) {
            out.push_back(v.value);
        }
        return out;
    }

    // ---- cycle phases -------------------------------------------------------

    void f_relax(int l)
    {
        auto& L = level(l);
        const Range r = L.range;
        if (r.empty()) {
            return;
        }
        const Index m = h_.coarsening_factor();
        const Index first_c = std::min(((r.begin + m - 1) / m) * m, r.end);
        const bool send_last = r.end < h_.points(l) && h_.kind(l, r.end) == PointKind::F;

        for (Index i = first_c; i < r.end; ++i) {
            if (h_.kind(l, i) == PointKind::F) {
                L.at(i) = propagate(l, i, L.at(i - 1));
            }
        }
        if (send_last && r.end - 1 >= first_c) {
            send(l, r.end - 1);
        }
        if (first_c > r.begin) {
            // leading F-points continue an interval whose C-point lives on a lower rank
            TrackedVector ghost = receive(l, r.begin - 1);
            L.at(r.begin) = propagate(l, r.begin, ghost);
            for (Index i = r.begin + 1; i < first_c; ++i) {
                L.at(i) = propagate(l, i, L.at(i - 1));
            }
            if (send_last && r.end - 1 < first_c) {
                send(l, r.end - 1);
            }
        }
    }

    void c_relax(int l)
    {
        auto& L = level(l);
        const Range r = L.range;
        if (r.empty()) {
            return;
        }
        if (r.end < h_.points(l) && h_.kind(l, r.end) == PointKind::C) {
            send(l, r.end - 1);
        }
        for (Index i = r.begin; i < r.end; ++i) {
            if (i == 0 || h_.kind(l, i) != PointKind::C) {
                continue;
            }
            if (i - 1 < r.begin) {
                TrackedVector ghost = receive(l, i - 1);
                L.at(i) = propagate(l, i, ghost);
            } else {
                L.at(i) = propagate(l, i, L.at(i - 1));
            }
        }
    }

    void relax(int l)
    {
        f_relax(l);
        if (cfg_.relaxation == Relaxation::FCF) {
            c_relax(l);
            f_relax(l);
        }
    }

    /// Injection plus FAS terms on level l+1:
    ///   rhs^j = [Phi_l(u^{mj-1}) + g_l^{mj} - u^{mj}] + v^j,  shift^j = Phi_{l+1}(v^{j-1})
    void restrict_level(int l)
    {
        const int c = l + 1;
        auto& F = level(l);
        auto& C = level(c);
        const Range r = F.range;
        const Range cr = C.range;
        const Index m = h_.coarsening_factor();

        if (!r.empty() && r.end < h_.points(l) && h_.kind(l, r.end) == PointKind::C) {
            send(l, r.end - 1);
        }

        C.clear();
        C.has_rhs = true;
        for (Index j = cr.begin; j < cr.end; ++j) {
            const Index fi = j * m;
            if (j == 0) {
                TrackedVector v = rec_.clone(F.at(0));
                TrackedVector inj = rec_.clone(F.at(0));
                Vector zero = app_.clone(v.value);
                app_.sum(0.0, v.value, 0.0, zero);
                C.rhs.push_back(TrackedVector{zero, nullptr});
                C.shift.push_back(TrackedVector{std::move(zero), nullptr});
                C.u.push_back(std::move(v));
                C.injected.push_back(std::move(inj));
                continue;
            }

            std::optional<TrackedVector> ghost_f;
            if (fi - 1 < r.begin) {
                ghost_f = receive(l, fi - 1);
            }
            TrackedVector res = propagate(l, fi, ghost_f ? *ghost_f : F.at(fi - 1));
            rec_.sum(-1.0, F.at(fi), 1.0, res);

            TrackedVector v = rec_.clone(F.at(fi));
            TrackedVector inj = rec_.clone(F.at(fi));

            std::optional<TrackedVector> ghost_c;
            if (j - 1 < cr.begin) {
                ghost_c = receive(c, j - 1);
            }
            TrackedVector phi = rec_.step(ghost_c ? *ghost_c : C.u.back(), info(c, j));
            rec_.sum(1.0, v, 1.0, res);

            C.u.push_back(std::move(v));
            C.injected.push_back(std::move(inj));
            C.rhs.push_back(std::move(res));
            C.shift.push_back(std::move(phi));
        }

        if (!cr.empty() && cr.end < h_.points(c)) {
            send(c, cr.end - 1);
        }
    }

    void coarse_solve(int l)
    {
        auto& L = level(l);
        const Range r = L.range;
        for (Index i = r.begin; i < r.end; ++i) {
            if (i == 0) {
                continue;
            }
            if (i - 1 < r.begin) {
                TrackedVector ghost = receive(l, i - 1);
                L.at(i) = propagate(l, i, ghost);
            } else {
                L.at(i) = propagate(l, i, L.at(i - 1));
            }
        }
        if (!r.empty() && r.end < h_.points(l)) {
            send(l, r.end - 1);
        }
    }

    /// u_l^{mj} += v^j - injected^j, then drop level l+1.
    void correct(int l)
    {
        auto& F = level(l);
        auto& C = level(l + 1);
        const Index m = h_.coarsening_factor();
        for (Index j = C.range.begin; j < C.range.end; ++j) {
            if (j == 0) {
                continue;
            }
            auto& v = C.at(j);
            rec_.sum(-1.0, C.injected[C.local(j)], 1.0, v);
            rec_.sum(1.0, v, 1.0, F.at(j * m));
        }
        C.clear();
    }

    void cycle()
    {
        const int coarsest = h_.coarsest();
        for (int l = 0; l < coarsest; ++l) {
            relax(l);
            restrict_level(l);
        }
        coarse_solve(coarsest);
        for (int l = coarsest - 1; l >= 0; --l) {
            correct(l);
            f_relax(l);
        }
    }

    /// Objective of the current fine state, summed in index order over all ranks.
    double access_sweep()
    {
        auto& L = level(0);
        std::vector<double> terms;
        terms.reserve(static_cast<std::size_t>(L.range.size()));
        for (Index i = L.range.begin; i < L.range.end; ++i) {
            if (i == 0) {
                continue;
            }
            terms.push_back(rec_.access(L.at(i), i));
        }
        return endpoint_.all_reduce(std::move(terms), 1)[0];
    }

    /// ||current - before|| over fine points 1..N.
    double difference_norm(const std::vector<Vector>& now, const std::vector<Vector>& before) const
    {
        const Range r = levels_[0].range;
        std::vector<double> terms;
        for (Index i = r.begin; i < r.end; ++i) {
            if (i == 0) {
                continue;
            }
            const auto k = static_cast<std::size_t>(i - r.begin);
            Vector d = app_.clone(now[k]);
            app_.sum(-1.0, before[k], 1.0, d);
            const double n = app_.norm(d);
            terms.push_back(n * n);
        }
        return std::sqrt(endpoint_.all_reduce(std::move(terms), 1)[0]);
    }

private:
    StepInfo info(int l, Index i) const
    {
        return StepInfo{l, i, h_.time(l, i - 1), h_.time(l, i), h_.dt(l)};
    }

    /// (Phi_l(prev) - shift^i) + rhs^i
    TrackedVector propagate(int l, Index i, const TrackedVector& prev)
    {
        TrackedVector out = rec_.step(prev, info(l, i));
        auto& L = level(l);
        if (L.has_rhs) {
            rec_.sum(-1.0, L.shift[L.local(i)], 1.0, out);
            rec_.sum(1.0, L.rhs[L.local(i)], 1.0, out);
        }
        return out;
    }

    void send(int l, Index i)
    {
        rec_.send(level(l).at(i), partition_.owner(l, i + 1), l, i);
    }

    TrackedVector receive(int l, Index i)
    {
        return rec_.recv(partition_.owner(l, i), l, i);
    }

    const App& app_;
    const TimeHierarchy& h_;
    const SolverConfig& cfg_;
    const Partition& partition_;
    Endpoint endpoint_;
    ActionRecorder rec_;
    std::vector<LevelData> levels_;
};

struct DriveOptions {
    int max_iter = 0;
    bool adjoint = false;
    bool stop_on_tol = true;
    double bar_objective = 1.0;
    const SpaceTimeState* initial = nullptr;
    const std::vector<Vector>* initial_adjoint = nullptr;
};

struct DriveOutput {
    RunResult run;
    double last_objective = 0.0;
    double last_residual = 0.0;
    std::size_t tape_entries = 0;
    std::size_t tape_steps = 0;
};

DriveOutput drive(const Solver& solver, const Design& design, const DriveOptions& opt)
{
    const auto& h = solver.hierarchy();
    const auto& cfg = solver.config();
    const App& app = solver.app();
    const Partition partition(h, cfg.workers);
    const auto n_points = static_cast<std::size_t>(h.points(0));
    const std::size_t p = design.size();

    const SpaceTimeState initial = opt.initial ? *opt.initial : solver.initial_guess();
    if (initial.size() != n_points) {
        throw ConfigError("state has " + std::to_string(initial.size()) + " points, grid has " +
                          std::to_string(n_points));
    }
    if (opt.initial_adjoint && opt.initial_adjoint->size() != n_points) {
        throw ConfigError("adjoint has the wrong number of points");
    }

    DriveOutput out;
    out.run.state.resize(n_points);
    if (opt.adjoint) {
        out.run.adjoint.resize(n_points);
        out.run.gradient.assign(p, 0.0);
    }

    const auto start = std::chrono::steady_clock::now();
    run_workers(cfg.workers, [&](Endpoint endpoint) {
        Worker w(solver, partition, endpoint, design);
        const bool lead = endpoint.rank() == 0;
        const Range fine = partition.range(0, endpoint.rank());
        w.load(0, initial);

        std::vector<Vector> bar;
        for (Index i = fine.begin; i < fine.end; ++i) {
            const auto gi = static_cast<std::size_t>(i);
            if (opt.initial_adjoint && i > 0) {
                bar.push_back((*opt.initial_adjoint)[gi]);
            } else {
                bar.emplace_back(initial[gi].size(), 0.0);
            }
        }

        for (int k = 0; k < opt.max_iter; ++k) {
            ActionTape tape;
            std::vector<SlotPtr> inputs;
            if (opt.adjoint) {
                w.recorder().attach(&tape);
                inputs = w.refresh_slots();
            }

            const double objective = w.access_sweep();
            const auto before = w.fine_values();
            w.cycle();
            const double residual = w.difference_norm(w.fine_values(), before);

            double adjoint_residual = 0.0;
            if (opt.adjoint) {
                w.recorder().attach(nullptr);
                const auto counts = endpoint.all_reduce(
                    {static_cast<double>(tape.size()), static_cast<double>(tape.count(ActionKind::Step))}, 2);

                auto& L = w.level(0);
                for (Index i = fine.begin; i < fine.end; ++i) {
                    if (i > 0) {
                        L.at(i).bar->add(bar[static_cast<std::size_t>(i - fine.begin)]);
                    }
                }
                GradientAccumulator gradient(p, fine.begin, fine.size(), h.coarsening_factor());
                SweepContext ctx{&app, &design, opt.bar_objective, &endpoint, &gradient};
                reverse_sweep(tape, ctx);

                std::vector<Vector> next;
                next.reserve(bar.size());
                for (Index i = fine.begin; i < fine.end; ++i) {
                    const auto k_local = static_cast<std::size_t>(i - fine.begin);
                    next.push_back(i == 0 ? Vector(bar[k_local].size(), 0.0) : inputs[k_local]->value());
                }
                inputs.clear();
                w.drop_slots();
                adjoint_residual = w.difference_norm(next, bar);
                bar = std::move(next);
                auto grad = endpoint.all_reduce(gradient.terms(), p);
                if (lead) {
                    out.run.gradient = std::move(grad);
                    out.run.adjoint_history.push_back(adjoint_residual);
                    out.tape_entries = static_cast<std::size_t>(counts[0]);
                    out.tape_steps = static_cast<std::size_t>(counts[1]);
                }
            }

            if (lead) {
                out.run.primal_history.push_back(residual);
                out.run.iterations = k + 1;
                out.last_objective = objective;
                out.last_residual = residual;
            }
            if (opt.stop_on_tol && residual < cfg.tol && (!opt.adjoint || adjoint_residual < cfg.tol)) {
                if (lead) {
                    out.run.converged = true;
                }
                break;
            }
        }

        const double final_objective = w.access_sweep();
        if (lead) {
            out.run.objective = final_objective;
        }
        auto& L = w.level(0);
        for (Index i = fine.begin; i < fine.end; ++i) {
            const auto gi = static_cast<std::size_t>(i);
            out.run.state[gi] = L.at(i).value;
            if (opt.adjoint) {
                out.run.adjoint[gi] = bar[static_cast<std::size_t>(i - fine.begin)];
            }
        }
    });
    out.run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

/// Runs one level operation on every rank and gathers the level back.
template <class Body>
LevelState run_level_op(const Solver& solver, int level, int out_level, const LevelState& state,
                        const Design& design, Body body)
{
    const auto& h = solver.hierarchy();
    if (level < 0 || level >= h.num_levels() || out_level >= h.num_levels()) {
        throw ConfigError("level " + std::to_string(level) + " out of range");
    }
    if (state.u.size() != static_cast<std::size_t>(h.points(level))) {
        throw ConfigError("level state has the wrong number of points");
    }
    if (!state.rhs.empty() && state.rhs.size() != state.u.size()) {
        throw ConfigError("FAS right-hand side has the wrong number of points");
    }
    if (!state.shift.empty() && state.shift.size() != state.u.size()) {
        throw ConfigError("FAS shift has the wrong number of points");
    }
    const Partition partition(h, solver.config().workers);
    LevelState out;
    out.u.resize(static_cast<std::size_t>(h.points(out_level)));
    if (out_level != level || !state.rhs.empty()) {
        out.rhs.resize(out.u.size());
        out.shift.resize(out.u.size());
    }
    run_workers(solver.config().workers, [&](Endpoint endpoint) {
        Worker w(solver, partition, endpoint, design);
        w.load(level, state.u, &state.rhs, &state.shift);
        body(w);
        w.store(out_level, out);
    });
    return out;
}

}  // namespace

Solver::Solver(const App& app, const TimeGridSpec& grid, SolverConfig config)
    : app_(&app), config_(config),
      hierarchy_(build_hierarchy(grid, config.coarsening, config.max_levels, config.min_coarse_points))
{
    config_.validate();
    // fail early rather than inside the workers
    (void)partition(hierarchy_.points(0), config_.workers);
}

SpaceTimeState Solver::initial_guess() const
{
    SpaceTimeState u;
    u.reserve(static_cast<std::size_t>(hierarchy_.points(0)));
    for (Index i = 0; i < hierarchy_.points(0); ++i) {
        u.push_back(app_->init(hierarchy_.time(0, i)));
    }
    return u;
}

LevelState Solver::f_relax(int level, LevelState state, const Design& design) const
{
    return run_level_op(*this, level, level, state, design, [&](Worker& w) { w.f_relax(level); });
}

LevelState Solver::c_relax(int level, LevelState state, const Design& design) const
{
    return run_level_op(*this, level, level, state, design, [&](Worker& w) { w.c_relax(level); });
}

LevelState Solver::fcf_relax(int level, LevelState state, const Design& design) const
{
    return run_level_op(*this, level, level, state, design, [&](Worker& w) {
        w.f_relax(level);
        w.c_relax(level);
        w.f_relax(level);
    });
}

LevelState Solver::restrict_fas(int level, const LevelState& state, const Design& design) const
{
    if (level + 1 >= hierarchy_.num_levels()) {
        throw ConfigError("cannot restrict from the coarsest level");
    }
    return run_level_op(*this, level, level + 1, state, design, [&](Worker& w) { w.restrict_level(level); });
}

LevelState Solver::coarse_solve(int level, LevelState state, const Design& design) const
{
    return run_level_op(*this, level, level, state, design, [&](Worker& w) { w.coarse_solve(level); });
}

IterationResult Solver::mgrit_iteration(const SpaceTimeState& state, const Design& design) const
{
    DriveOptions opt;
    opt.max_iter = 1;
    opt.stop_on_tol = false;
    opt.initial = &state;
    auto out = drive(*this, design, opt);
    return IterationResult{std::move(out.run.state), out.last_objective, out.last_residual};
}

AdjointIterationResult Solver::adjoint_iteration(const SpaceTimeState& state, const std::vector<Vector>& adjoint,
                                                 const Design& design, double bar_objective) const
{
    DriveOptions opt;
    opt.max_iter = 1;
    opt.adjoint = true;
    opt.stop_on_tol = false;
    opt.bar_objective = bar_objective;
    opt.initial = &state;
    opt.initial_adjoint = &adjoint;
    auto out = drive(*this, design, opt);
    AdjointIterationResult r;
    r.state = std::move(out.run.state);
    r.objective = out.last_objective;
    r.residual = out.last_residual;
    r.adjoint = std::move(out.run.adjoint);
    r.gradient = std::move(out.run.gradient);
    r.tape_entries = out.tape_entries;
    r.tape_steps = out.tape_steps;
    return r;
}

SolveResult Solver::solve(const Design& design) const
{
    auto run_result = run(design, config_.record_tape);
    SolveResult r;
    r.state = std::move(run_result.state);
    r.objective = run_result.objective;
    r.residual_history = std::move(run_result.primal_history);
    r.iterations = run_result.iterations;
    r.converged = run_result.converged;
    r.seconds = run_result.seconds;
    return r;
}

RunResult Solver::run(const Design& design, bool with_adjoint) const
{
    DriveOptions opt;
    opt.max_iter = config_.max_iter;
    opt.adjoint = with_adjoint;
    return drive(*this, design, opt).run;
}

}  // namespace pintadj
