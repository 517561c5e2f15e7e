#include "pintadj/model/vdp_advdiff.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

namespace pintadj::model {

void ModelConfig::validate() const
{
    if (!(a > 0.0) || !(mu > 0.0)) {
        throw ConfigError("advection speed and diffusion coefficient must be positive");
    }
    if (n < 2) {
        throw ConfigError("the field needs at least 2 points");
    }
    if (!(dx > 0.0) || std::abs(n * dx - 1.0) > 1e-12) {
        throw ConfigError("n * dx must equal 1");
    }
    if (!(t_final > 0.0) || n_steps < 1) {
        throw ConfigError("time grid needs T > 0 and N >= 1");
    }
    if (!(step_tol > 0.0) || step_max_iter < 1) {
        throw ConfigError("step solver needs a positive tolerance and at least one iteration");
    }
}

double BandMatrix::at(std::size_t r, std::size_t c) const
{
    const auto off = static_cast<long>(c) - static_cast<long>(r);
    if (off < -kLower || off > kUpper) {
        return 0.0;
    }
    return d_[r * kWidth + static_cast<std::size_t>(off + kLower)];
}

void BandMatrix::add(std::size_t r, std::size_t c, double value)
{
    const auto off = static_cast<long>(c) - static_cast<long>(r);
    if (off < -kLower || off > kUpper || r >= n_ || c >= n_) {
        throw std::out_of_range("BandMatrix: entry outside the band");
    }
    d_[r * kWidth + static_cast<std::size_t>(off + kLower)] += value;
}

Vector BandMatrix::multiply(const Vector& x) const
{
    Vector y(n_, 0.0);
    for (std::size_t r = 0; r < n_; ++r) {
        for (int off = -kLower; off <= kUpper; ++off) {
            const long c = static_cast<long>(r) + off;
            if (c >= 0 && c < static_cast<long>(n_)) {
                y[r] += d_[r * kWidth + static_cast<std::size_t>(off + kLower)] * x[static_cast<std::size_t>(c)];
            }
        }
    }
    return y;
}

Vector BandMatrix::multiply_transposed(const Vector& x) const
{
    Vector y(n_, 0.0);
    for (std::size_t r = 0; r < n_; ++r) {
        for (int off = -kLower; off <= kUpper; ++off) {
            const long c = static_cast<long>(r) + off;
            if (c >= 0 && c < static_cast<long>(n_)) {
                y[static_cast<std::size_t>(c)] += d_[r * kWidth + static_cast<std::size_t>(off + kLower)] * x[r];
            }
        }
    }
    return y;
}

namespace {

constexpr std::size_t kZ = 0;
constexpr std::size_t kW = 1;

/// Position of field value v_j (1-based) in the state vector.
std::size_t col_v(int j)
{
    return static_cast<std::size_t>(j) + 1;
}

}  // namespace

struct VdpAdvDiff::FieldFactor {
    std::vector<double> ab;
    std::vector<lapack_int> pivots;
};

struct VdpAdvDiff::FactorCache {
    std::mutex mutex;
    std::map<double, std::shared_ptr<const FieldFactor>> factors;
};

VdpAdvDiff::VdpAdvDiff(ModelConfig config)
    : config_(config), weight_(0.0), field_(config.n >= 2 ? static_cast<std::size_t>(config.n) : 2),
      cache_(std::make_shared<FactorCache>())
{
    config_.validate();
    weight_ = config_.time_grid().dt / config_.t_final;
    // the field part of g does not depend on the state or rho
    const BandMatrix J = jacobian(init(0.0), 0.0);
    const auto n = static_cast<std::size_t>(config_.n);
    inflow_.assign(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        inflow_[r] = J.at(r + 2, kZ);
        for (std::size_t c = r > 3 ? r - 3 : 0; c <= r + 1 && c < n; ++c) {
            const double v = J.at(r + 2, c + 2);
            if (v != 0.0) {
                field_.add(r, c, v);
            }
        }
    }
}

void VdpAdvDiff::check_size(const Vector& u) const
{
    if (u.size() != config_.dim()) {
        throw std::invalid_argument("model state has size " + std::to_string(u.size()) + ", expected " +
                                    std::to_string(config_.dim()));
    }
}

double VdpAdvDiff::rho_of(const Design& design) const
{
    if (design.size() != 1) {
        throw ConfigError("model design must hold exactly one value (rho)");
    }
    return design[0];
}

Vector VdpAdvDiff::rhs(const Vector& u, double rho) const
{
    check_size(u);
    const int n = config_.n;
    const double a = config_.a;
    const double mu = config_.mu;
    const double dx = config_.dx;
    const double c = mu / dx;

    const double z = u[kZ];
    const double w = u[kW];
    Vector g(u.size());
    g[kZ] = w;
    g[kW] = -z + rho * (1.0 - z * z) * w;

    // extended field with inflow and outflow ghosts, ext[j] = v_j for j = 0..n+1
    Vector ext(static_cast<std::size_t>(n) + 2);
    for (int j = 1; j <= n; ++j) {
        ext[static_cast<std::size_t>(j)] = u[col_v(j)];
    }
    ext[0] = (z + c * ext[1]) / (1.0 + c);
    ext[static_cast<std::size_t>(n) + 1] = 2.0 * ext[static_cast<std::size_t>(n)] - ext[static_cast<std::size_t>(n) - 1];

    for (int j = 1; j <= n; ++j) {
        const auto k = static_cast<std::size_t>(j);
        double d1 = 0.0;
        if (j == 1) {
            d1 = (ext[1] - ext[0]) / dx;
        } else {
            d1 = (3.0 * ext[k] - 4.0 * ext[k - 1] + ext[k - 2]) / (2.0 * dx);
        }
        const double d2 = (ext[k + 1] - 2.0 * ext[k] + ext[k - 1]) / (dx * dx);
        g[col_v(j)] = -a * d1 + mu * d2;
    }
    return g;
}

BandMatrix VdpAdvDiff::jacobian(const Vector& u, double rho) const
{
    check_size(u);
    const int n = config_.n;
    const double a = config_.a;
    const double mu = config_.mu;
    const double dx = config_.dx;
    const double c = mu / dx;

    const double z = u[kZ];
    const double w = u[kW];
    BandMatrix J(u.size());
    J.add(kZ, kW, 1.0);
    J.add(kW, kZ, -1.0 - 2.0 * rho * z * w);
    J.add(kW, kW, rho * (1.0 - z * z));

    // d(ext[k]) in terms of state entries
    auto add_ext = [&](std::size_t row, int k, double coef) {
        if (k == 0) {
            J.add(row, kZ, coef / (1.0 + c));
            J.add(row, col_v(1), coef * c / (1.0 + c));
        } else if (k == n + 1) {
            J.add(row, col_v(n), 2.0 * coef);
            J.add(row, col_v(n - 1), -coef);
        } else {
            J.add(row, col_v(k), coef);
        }
    };

    const double dd = mu / (dx * dx);
    for (int j = 1; j <= n; ++j) {
        const std::size_t row = col_v(j);
        if (j == 1) {
            add_ext(row, 1, -a / dx);
            add_ext(row, 0, a / dx);
        } else {
            add_ext(row, j, -a * 3.0 / (2.0 * dx));
            add_ext(row, j - 1, a * 4.0 / (2.0 * dx));
            add_ext(row, j - 2, -a / (2.0 * dx));
        }
        add_ext(row, j + 1, dd);
        add_ext(row, j, -2.0 * dd);
        add_ext(row, j - 1, dd);
    }
    return J;
}

Vector VdpAdvDiff::rhs_design_derivative(const Vector& u) const
{
    check_size(u);
    Vector d(u.size(), 0.0);
    d[kW] = (1.0 - u[kZ] * u[kZ]) * u[kW];
    return d;
}

namespace {

constexpr lapack_int kKl = BandMatrix::kLower;
constexpr lapack_int kKu = BandMatrix::kUpper;
constexpr lapack_int kLdab = 2 * kKl + kKu + 1;

}  // namespace

std::shared_ptr<const VdpAdvDiff::FieldFactor> VdpAdvDiff::field_factor(double h, const StepInfo& info) const
{
    const std::lock_guard<std::mutex> lock(cache_->mutex);
    auto& slot = cache_->factors[h];
    if (slot) {
        return slot;
    }
    auto f = std::make_shared<FieldFactor>();
    const auto n = static_cast<lapack_int>(field_.size());
    f->ab.assign(static_cast<std::size_t>(kLdab * n), 0.0);
    f->pivots.resize(static_cast<std::size_t>(n));
    for (lapack_int col = 0; col < n; ++col) {
        const lapack_int r0 = std::max<lapack_int>(0, col - kKu);
        const lapack_int r1 = std::min<lapack_int>(n - 1, col + kKl);
        for (lapack_int row = r0; row <= r1; ++row) {
            const double value = (row == col ? 1.0 : 0.0) -
                                 h * field_.at(static_cast<std::size_t>(row), static_cast<std::size_t>(col));
            f->ab[static_cast<std::size_t>(kKl + kKu + row - col + col * kLdab)] = value;
        }
    }
    const lapack_int code = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, kKl, kKu, f->ab.data(), kLdab, f->pivots.data());
    if (code != 0) {
        cache_->factors.erase(h);
        throw StepError("singular Crank-Nicolson field matrix (dgbtrf info " + std::to_string(code) + ")",
                        info.level, info.index);
    }
    slot = f;
    return f;
}

namespace {

void solve_field(const std::vector<double>& ab, const std::vector<lapack_int>& pivots, char trans, double* x,
                 std::size_t n, const StepInfo& info)
{
    const auto ln = static_cast<lapack_int>(n);
    const lapack_int code =
        LAPACKE_dgbtrs(LAPACK_COL_MAJOR, trans, ln, kKl, kKu, 1, ab.data(), kLdab, pivots.data(), x, ln);
    if (code != 0) {
        throw StepError("banded solve failed (dgbtrs info " + std::to_string(code) + ")", info.level, info.index);
    }
}

/// Oscillator part of g.
void oscillator_rhs(double z, double w, double rho, double& gz, double& gw)
{
    gz = w;
    gw = -z + rho * (1.0 - z * z) * w;
}

/// Solves (I - h J)^T x = b for the oscillator Jacobian J at (z, w).
void oscillator_solve_transposed(double z, double w, double rho, double h, double bz, double bw, double& xz,
                                 double& xw)
{
    // I - h J = [[1, -h], [-h p, 1 - h q]]
    const double p = -1.0 - 2.0 * rho * z * w;
    const double q = rho * (1.0 - z * z);
    const double m00 = 1.0;
    const double m01 = -h;
    const double m10 = -h * p;
    const double m11 = 1.0 - h * q;
    const double det = m00 * m11 - m01 * m10;
    // transpose: [[m00, m10], [m01, m11]]
    xz = (m11 * bz - m10 * bw) / det;
    xw = (m00 * bw - m01 * bz) / det;
}

}  // namespace

int VdpAdvDiff::oscillator_solve(const Vector& u_prev, double h, double rho, double& z, double& w,
                                 const StepInfo& info) const
{
    double gz0 = 0.0;
    double gw0 = 0.0;
    oscillator_rhs(u_prev[kZ], u_prev[kW], rho, gz0, gw0);
    const double bz = u_prev[kZ] + h * gz0;
    const double bw = u_prev[kW] + h * gw0;
    z = u_prev[kZ];
    w = u_prev[kW];
    bool polished = false;
    for (int s = 1; s <= config_.step_max_iter; ++s) {
        double gz = 0.0;
        double gw = 0.0;
        oscillator_rhs(z, w, rho, gz, gw);
        const double rz = bz + h * gz - z;
        const double rw = bw + h * gw - w;
        const double p = -1.0 - 2.0 * rho * z * w;
        const double q = rho * (1.0 - z * z);
        const double m11 = 1.0 - h * q;
        const double det = m11 - h * h * p;
        const double dz = (m11 * rz + h * rw) / det;
        const double dw = (rw + h * p * rz) / det;
        z += dz;
        w += dw;
        const double update = std::sqrt(dz * dz + dw * dw);
        if (!std::isfinite(update)) {
            throw StepError("Newton iteration diverged after " + std::to_string(s) + " iterations", info.level,
                            info.index, s);
        }
        if (update < config_.step_tol) {
            if (polished) {
                return s;
            }
            // one more step takes the quadratically converging iterate to roundoff
            polished = true;
        }
    }
    throw StepError("Newton iteration did not converge in " + std::to_string(config_.step_max_iter) + " iterations",
                    info.level, info.index, config_.step_max_iter);
}

VdpAdvDiff::StepStats VdpAdvDiff::cn_step(const Vector& u_prev, double dt, double rho, const StepInfo& info) const
{
    check_size(u_prev);
    if (!(dt > 0.0)) {
        throw StepError("non-positive time step", info.level, info.index);
    }
    const double h = 0.5 * dt;
    const Vector g_prev = rhs(u_prev, rho);
    StepStats out;
    out.u.resize(u_prev.size());
    for (std::size_t k = 0; k < u_prev.size(); ++k) {
        out.u[k] = u_prev[k] + h * g_prev[k];
    }

    if (config_.step_solver == StepSolver::Functional) {
        const Vector base = out.u;
        out.u = u_prev;
        if (functional_solve(base, h, rho, out.u, out.iterations)) {
            return out;
        }
        const bool diverged = !std::isfinite(out.u[0]) || !std::isfinite(out.u[1]);
        throw StepError(diverged ? "functional iteration diverged after " + std::to_string(out.iterations) +
                                       " iterations"
                                 : "functional iteration did not converge in " + std::to_string(out.iterations) +
                                       " iterations",
                        info.level, info.index, out.iterations);
    }

    out.newton = true;
    double z = 0.0;
    double w = 0.0;
    out.iterations = oscillator_solve(u_prev, h, rho, z, w, info);
    out.u[kZ] = z;
    out.u[kW] = w;
    // (I - h A) v = v_prev + h g_v(u_prev) + h inflow z
    for (std::size_t r = 0; r < inflow_.size(); ++r) {
        out.u[r + 2] += h * inflow_[r] * z;
    }
    const auto f = field_factor(h, info);
    solve_field(f->ab, f->pivots, 'N', out.u.data() + 2, inflow_.size(), info);
    return out;
}

bool VdpAdvDiff::functional_solve(const Vector& base, double h, double rho, Vector& u, int& iterations) const
{
    for (int s = 1; s <= config_.step_max_iter; ++s) {
        iterations = s;
        const Vector g = rhs(u, rho);
        double update = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) {
            const double next = base[k] + h * g[k];
            const double d = next - u[k];
            update += d * d;
            u[k] = next;
        }
        update = std::sqrt(update);
        if (!std::isfinite(update)) {
            return false;
        }
        if (update < config_.step_tol) {
            return true;
        }
    }
    return false;
}

double VdpAdvDiff::squared_norm(const Vector& u) const
{
    double field = 0.0;
    for (std::size_t k = 2; k < u.size(); ++k) {
        field += u[k] * u[k];
    }
    const double scale = config_.norm == ObjectiveNorm::Weighted ? config_.dx : 1.0;
    return u[kZ] * u[kZ] + u[kW] * u[kW] + scale * field;
}

Vector VdpAdvDiff::init(double /*t*/) const
{
    Vector u(config_.dim(), config_.v0);
    u[kZ] = config_.z0;
    u[kW] = config_.w0;
    return u;
}

Vector VdpAdvDiff::step(const Vector& u_prev, const StepInfo& info, const Design& design) const
{
    return cn_step(u_prev, info.dt, rho_of(design), info).u;
}

double VdpAdvDiff::access(const Vector& u, Index /*index*/, const Design& /*design*/) const
{
    check_size(u);
    return weight_ * squared_norm(u);
}

void VdpAdvDiff::step_adjoint(const Vector& u_prev, const StepInfo& info, const Design& design,
                              const Vector& bar_next, Vector& bar_prev, Vector& bar_design) const
{
    const double rho = rho_of(design);
    check_size(u_prev);
    check_size(bar_next);
    if (!(info.dt > 0.0)) {
        throw StepError("non-positive time step", info.level, info.index);
    }
    const double h = 0.5 * info.dt;
    const std::size_t n = inflow_.size();

    // (I - h J(u_next))^T lambda = bar_next. J is block lower triangular, so the
    // field multiplier comes first and feeds the oscillator through the inflow column.
    Vector lambda = bar_next;
    const auto f = field_factor(h, info);
    solve_field(f->ab, f->pivots, 'T', lambda.data() + 2, n, info);
    double coupling = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        coupling += inflow_[r] * lambda[r + 2];
    }
    double z_next = 0.0;
    double w_next = 0.0;
    oscillator_solve(u_prev, h, rho, z_next, w_next, info);
    oscillator_solve_transposed(z_next, w_next, rho, h, bar_next[kZ] + h * coupling, bar_next[kW], lambda[kZ],
                                lambda[kW]);

    // bar_prev += (I + h J(u_prev))^T lambda, formed in full and added once per entry
    Vector inc(u_prev.size());
    const double z = u_prev[kZ];
    const double w = u_prev[kW];
    inc[kZ] = lambda[kZ] + h * ((-1.0 - 2.0 * rho * z * w) * lambda[kW] + coupling);
    inc[kW] = lambda[kW] + h * (lambda[kZ] + rho * (1.0 - z * z) * lambda[kW]);
    const Vector field_lambda(lambda.begin() + 2, lambda.end());
    const Vector at = field_.multiply_transposed(field_lambda);
    for (std::size_t r = 0; r < n; ++r) {
        inc[r + 2] = lambda[r + 2] + h * at[r];
    }
    for (std::size_t k = 0; k < bar_prev.size(); ++k) {
        bar_prev[k] += inc[k];
    }
    const double dp = (1.0 - z * z) * w + (1.0 - z_next * z_next) * w_next;
    bar_design[0] += h * lambda[kW] * dp;
}

void VdpAdvDiff::access_adjoint(const Vector& u, Index /*index*/, const Design& /*design*/, double bar_objective,
                                Vector& bar_u, Vector& /*bar_design*/) const
{
    check_size(u);
    const double s = bar_objective * 2.0 * weight_;
    const double field = config_.norm == ObjectiveNorm::Weighted ? config_.dx : 1.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        bar_u[k] += s * (k < 2 ? 1.0 : field) * u[k];
    }
}

}  // namespace pintadj::model
