// Command-line front end for the model problem.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "pintadj/model/vdp_advdiff.hpp"
#include "pintadj/oracles.hpp"
#include "pintadj/piggyback.hpp"
#include "pintadj/solver.hpp"

namespace {

using namespace pintadj;

enum Exit : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kNotConverged = 3, kStepFailure = 4 };

struct Options {
    std::string mode = "piggyback";
    Index n_steps = 60000;
    Index m = 4;
    int levels = 3;
    double tol = 1e-9;
    int max_iter = 50;
    std::vector<double> rho{2.0};
    int workers = 1;
    double eps = 1e-6;
    std::string scheme = "forward";
    std::string norm = "discrete";
    std::string relax = "FCF";
    std::string output;
    unsigned seed = 1;
};

model::ModelConfig model_config(const Options& o)
{
    model::ModelConfig mc;
    mc.n_steps = o.n_steps;
    mc.norm = o.norm == "weighted" ? model::ObjectiveNorm::Weighted : model::ObjectiveNorm::Discrete;
    mc.validate();
    return mc;
}

SolverConfig solver_config(const Options& o)
{
    SolverConfig sc;
    sc.tol = o.tol;
    sc.max_iter = o.max_iter;
    sc.max_levels = o.levels;
    sc.coarsening = o.m;
    sc.workers = o.workers;
    sc.relaxation = o.relax == "F" ? Relaxation::F : Relaxation::FCF;
    sc.validate();
    return sc;
}

/// CSV target: the --output file, or nothing.
class Csv {
public:
    Csv(const std::string& path, const std::string& header)
    {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) {
                throw ConfigError("cannot open output file " + path);
            }
            file_ << header << '\n';
        }
    }

    template <class... Ts>
    void row(const Ts&... values)
    {
        if (!file_.is_open()) {
            return;
        }
        bool first = true;
        ((file_ << (first ? "" : ",") << cell(values), first = false), ...);
        file_ << '\n';
    }

private:
    static std::string cell(double v) { return format_number(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(Index v) { return std::to_string(v); }

    std::ofstream file_;
};

int run_sequential(const Options& o)
{
    const model::VdpAdvDiff app(model_config(o));
    const auto grid = app.config().time_grid();
    Csv csv(o.output, "N,rho,objective,gradient");
    for (double rho : o.rho) {
        const Design design{rho};
        const auto fwd = oracles::sequential_forward(app, grid, design);
        const auto adj = oracles::sequential_adjoint(app, grid, design, fwd);
        std::cout << "rho " << format_number(rho) << "  J " << format_number(fwd.objective) << "  dJ/drho "
                  << format_number(adj.gradient[0]) << '\n';
        csv.row(o.n_steps, rho, fwd.objective, adj.gradient[0]);
    }
    return kOk;
}

int run_mgrit(const Options& o)
{
    const model::VdpAdvDiff app(model_config(o));
    const Solver solver(app, app.config().time_grid(), solver_config(o));
    Csv csv(o.output, "iter,residual");
    int status = kOk;
    for (double rho : o.rho) {
        const auto r = solver.solve(Design{rho});
        for (std::size_t k = 0; k < r.residual_history.size(); ++k) {
            csv.row(static_cast<int>(k + 1), r.residual_history[k]);
        }
        std::cout << "rho " << format_number(rho) << "  J " << format_number(r.objective) << "  iterations "
                  << r.iterations << "  residual "
                  << format_number(r.residual_history.empty() ? 0.0 : r.residual_history.back()) << "  time "
                  << format_number(r.seconds) << " s\n";
        if (!r.converged) {
            std::cerr << "error: MGRIT did not reach tol " << format_number(o.tol) << " in " << o.max_iter
                      << " iterations\n";
            status = kNotConverged;
        }
    }
    return status;
}

int run_piggyback(const Options& o)
{
    const model::VdpAdvDiff app(model_config(o));
    const Solver solver(app, app.config().time_grid(), solver_config(o));
    Csv csv(o.output, "iter,primal_residual,adjoint_residual");
    int status = kOk;
    for (double rho : o.rho) {
        const auto s = piggyback_solve(solver, Design{rho});
        for (std::size_t k = 0; k < s.primal_history.size(); ++k) {
            csv.row(static_cast<int>(k + 1), s.primal_history[k], s.adjoint_history[k]);
        }
        std::cout << "rho " << format_number(rho) << '\n' << gradient_report(s).to_string();
        if (!s.converged) {
            std::cerr << "error: piggyback iteration did not reach tol " << format_number(o.tol)
                      << " (primal " << format_number(s.primal_residual()) << ", adjoint "
                      << format_number(s.adjoint_residual()) << ")\n";
            status = kNotConverged;
        }
    }
    return status;
}

Vector random_vector(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector v(n);
    for (double& x : v) {
        x = dist(rng);
    }
    return v;
}

int run_fd_check(const Options& o)
{
    const model::VdpAdvDiff app(model_config(o));
    const Solver solver(app, app.config().time_grid(), solver_config(o));
    const auto& h = solver.hierarchy();
    std::mt19937_64 rng(o.seed);
    bool ok = true;
    auto report = [&](const std::string& name, double err, double limit) {
        const bool pass = err < limit;
        ok = ok && pass;
        std::cout << (pass ? "PASS " : "FAIL ") << name << "  rel_error " << format_number(err) << " (limit "
                  << format_number(limit) << ")\n";
    };

    const double rho = o.rho.front();
    const Design design{rho};
    for (int l = 0; l < h.num_levels(); ++l) {
        Vector u = app.init(0.0);
        const Vector noise = random_vector(rng, u.size());
        for (std::size_t k = 0; k < u.size(); ++k) {
            u[k] += 0.1 * noise[k];
        }
        const StepInfo info{l, 1, 0.0, h.dt(l), h.dt(l)};
        const auto c = oracles::step_dot_product(app, u, info, design, random_vector(rng, u.size()),
                                                 random_vector(rng, u.size()));
        report("step_adjoint dot product, level " + std::to_string(l), c.relative_error(), 1e-7);
    }

    const auto state = solver.initial_guess();
    std::vector<Vector> d;
    std::vector<Vector> bar;
    for (const auto& ui : state) {
        d.push_back(random_vector(rng, ui.size()));
        bar.push_back(random_vector(rng, ui.size()));
    }
    // a larger step keeps the central difference clear of roundoff when the cycle output barely moves
    const auto it = oracles::iteration_dot_product(solver, state, design, d, bar, 1e-4);
    report("V-cycle dot product", it.relative_error(), 1e-6);

    const auto s = piggyback_solve(solver, design);
    oracles::FDSpec fd;
    fd.epsilon = o.eps;
    fd.scheme = o.scheme == "central" ? oracles::FDScheme::Central : oracles::FDScheme::Forward;
    const double g_fd = oracles::finite_difference_gradient(app, app.config().time_grid(), design, fd);
    std::cout << "adjoint gradient " << format_number(s.gradient[0]) << "  finite difference "
              << format_number(g_fd) << '\n';
    report("adjoint vs finite-difference gradient", std::abs(s.gradient[0] - g_fd) / std::abs(g_fd), 0.02);
    if (!s.converged) {
        std::cerr << "error: piggyback iteration did not converge\n";
        return kNotConverged;
    }
    return ok ? kOk : kCheckFailed;
}

int run_validate_gradients(const Options& o)
{
    const model::VdpAdvDiff app(model_config(o));
    const Solver solver(app, app.config().time_grid(), solver_config(o));
    Csv csv(o.output, "N,rho,epsilon,fd_gradient,adjoint_gradient,rel_error");
    bool ok = true;
    bool converged = true;
    oracles::FDSpec fd;
    fd.epsilon = o.eps;
    fd.scheme = o.scheme == "central" ? oracles::FDScheme::Central : oracles::FDScheme::Forward;
    for (double rho : o.rho) {
        const Design design{rho};
        const auto s = piggyback_solve(solver, design);
        converged = converged && s.converged;
        const double g_fd = oracles::finite_difference_gradient(app, app.config().time_grid(), design, fd);
        const double rel = std::abs(s.gradient[0] - g_fd) / std::abs(g_fd);
        csv.row(o.n_steps, rho, o.eps, g_fd, s.gradient[0], rel);
        std::cout << "N " << o.n_steps << "  rho " << format_number(rho) << "  fd " << format_number(g_fd)
                  << "  adjoint " << format_number(s.gradient[0]) << "  rel_error " << format_number(100.0 * rel)
                  << " %  " << (rel < 0.02 ? "PASS" : "FAIL") << '\n';
        ok = ok && rel < 0.02;
    }
    if (!converged) {
        return kNotConverged;
    }
    return ok ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv)
{
    Options o;
    if (const char* env = std::getenv("PINTADJ_WORKERS")) {
        try {
            o.workers = std::stoi(env);
        } catch (const std::exception&) {
            std::cerr << "error: PINTADJ_WORKERS must be an integer\n";
            return kConfigError;
        }
    }

    CLI::App cli{"MGRIT primal and adjoint solver for the Van-der-Pol / advection-diffusion model"};
    cli.add_option("--mode", o.mode, "Run mode")
        ->check(CLI::IsMember({"sequential", "mgrit", "piggyback", "fd-check", "validate-gradients"}))
        ->capture_default_str();
    cli.add_option("--N", o.n_steps, "Number of fine time steps")->capture_default_str();
    cli.add_option("--m", o.m, "Coarsening factor")->capture_default_str();
    cli.add_option("--levels", o.levels, "Maximum number of time grid levels")->capture_default_str();
    cli.add_option("--tol", o.tol, "Residual tolerance")->capture_default_str();
    cli.add_option("--max-iter", o.max_iter, "Maximum MGRIT iterations")->capture_default_str();
    cli.add_option("--rho", o.rho, "Design value(s)")->capture_default_str();
    cli.add_option("--workers", o.workers, "Worker count (default: PINTADJ_WORKERS or 1)")->capture_default_str();
    cli.add_option("--eps", o.eps, "Finite-difference step")->capture_default_str();
    cli.add_option("--fd-scheme", o.scheme, "Finite-difference scheme")
        ->check(CLI::IsMember({"forward", "central"}))
        ->capture_default_str();
    cli.add_option("--norm", o.norm, "Objective norm")
        ->check(CLI::IsMember({"discrete", "weighted"}))
        ->capture_default_str();
    cli.add_option("--relax", o.relax, "Relaxation")->check(CLI::IsMember({"F", "FCF"}))->capture_default_str();
    cli.add_option("--seed", o.seed, "Random seed for fd-check")->capture_default_str();
    cli.add_option("--output", o.output, "CSV output path");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (o.rho.empty()) {
            throw ConfigError("at least one --rho value is required");
        }
        if (o.mode == "sequential") {
            return run_sequential(o);
        }
        if (o.mode == "mgrit") {
            return run_mgrit(o);
        }
        if (o.mode == "piggyback") {
            return run_piggyback(o);
        }
        if (o.mode == "fd-check") {
            return run_fd_check(o);
        }
        return run_validate_gradients(o);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const StepError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kStepFailure;
    }
}
