#pragma once

#include <memory>
#include <vector>

#include "pintadj/app.hpp"
#include "pintadj/grid_hierarchy.hpp"

namespace pintadj::model {

/// Which squared norm the objective integrates.
enum class ObjectiveNorm {
    /// z^2 + w^2 + sum_j v_j^2
    Discrete,
    /// z^2 + w^2 + dx * sum_j v_j^2
    Weighted,
};

/// How the implicit Crank-Nicolson equation is solved.
enum class StepSolver {
    /// Fixed-point iteration u <- u_prev + dt/2 (g(u_prev) + g(u)).
    Functional,
    /// Newton on the oscillator, then one linear solve for the field. The field is
    /// linear and does not feed back into the oscillator, so this is Newton on the
    /// full Crank-Nicolson residual.
    Newton,
};

struct ModelConfig {
    double a = 1.0;
    double mu = 1e-5;
    double dx = 0.01;
    int n = 100;
    double t_final = 30.0;
    Index n_steps = 60000;
    /// Step iterations stop once the update 2-norm drops below this.
    double step_tol = 1e-12;
    int step_max_iter = 100;
    StepSolver step_solver = StepSolver::Newton;
    ObjectiveNorm norm = ObjectiveNorm::Discrete;
    /// Initial condition: z, w and a uniform field value.
    double z0 = 1.0;
    double w0 = 1.0;
    double v0 = 1.0;

    void validate() const;
    TimeGridSpec time_grid() const { return TimeGridSpec::uniform(0.0, t_final, n_steps); }
    std::size_t dim() const { return static_cast<std::size_t>(n) + 2; }
};

/// Banded square matrix with diagonals -kLower..+kUpper around the main one.
class BandMatrix {
public:
    static constexpr int kLower = 3;
    static constexpr int kUpper = 1;
    static constexpr int kWidth = kLower + kUpper + 1;

    explicit BandMatrix(std::size_t n) : n_(n), d_(n * kWidth, 0.0) {}

    std::size_t size() const { return n_; }
    /// Entry (r, c); zero outside the band.
    double at(std::size_t r, std::size_t c) const;
    void add(std::size_t r, std::size_t c, double value);

    Vector multiply(const Vector& x) const;
    Vector multiply_transposed(const Vector& x) const;

private:
    std::size_t n_;
    std::vector<double> d_;  // row-major, column offset c - r + kLower
};

/// Van-der-Pol oscillator feeding the inflow of a 1-D advection-diffusion field.
///
/// State u = (z, w, v_1..v_n). Crank-Nicolson in time; the adjoint step
/// differentiates the converged scheme implicitly.
/// Design is the scalar damping rho.
class VdpAdvDiff : public App {
public:
    explicit VdpAdvDiff(ModelConfig config);

    const ModelConfig& config() const { return config_; }

    /// Semi-discrete right-hand side g(u, rho).
    Vector rhs(const Vector& u, double rho) const;
    /// dg/du
    BandMatrix jacobian(const Vector& u, double rho) const;
    /// dg/drho
    Vector rhs_design_derivative(const Vector& u) const;

    struct StepStats {
        Vector u;
        int iterations = 0;
        bool newton = false;
    };
    /// One Crank-Nicolson step; throws StepError (with `info` location) on failure.
    StepStats cn_step(const Vector& u_prev, double dt, double rho, const StepInfo& info = {}) const;

    /// Squared norm under the configured convention.
    double squared_norm(const Vector& u) const;

    Vector init(double t) const override;
    Vector step(const Vector& u_prev, const StepInfo& info, const Design& design) const override;
    double access(const Vector& u, Index index, const Design& design) const override;
    void step_adjoint(const Vector& u_prev, const StepInfo& info, const Design& design, const Vector& bar_next,
                      Vector& bar_prev, Vector& bar_design) const override;
    void access_adjoint(const Vector& u, Index index, const Design& design, double bar_objective, Vector& bar_u,
                        Vector& bar_design) const override;

private:
    struct FieldFactor;
    struct FactorCache;

    bool functional_solve(const Vector& base, double h, double rho, Vector& u, int& iterations) const;
    /// Crank-Nicolson oscillator update (z, w); returns the Newton iteration count.
    int oscillator_solve(const Vector& u_prev, double h, double rho, double& z, double& w,
                         const StepInfo& info) const;
    /// LU factors of I - h A for the field operator A, built once per h.
    std::shared_ptr<const FieldFactor> field_factor(double h, const StepInfo& info) const;
    double rho_of(const Design& design) const;
    void check_size(const Vector& u) const;

    ModelConfig config_;
    double weight_;  // dt / T
    // field block of dg/du and its column for z: g_v = field_ * v + inflow_ * z
    BandMatrix field_;
    Vector inflow_;
    std::shared_ptr<FactorCache> cache_;
};

}  // namespace pintadj::model
