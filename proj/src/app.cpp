#include "pintadj/app.hpp"

#include <cmath>
#include <cstring>

namespace pintadj {

double App::access(const Vector& /*u*/, Index /*index*/, const Design& /*design*/) const
{
    return 0.0;
}

void App::step_adjoint(const Vector& /*u_prev*/, const StepInfo& info, const Design& /*design*/,
                       const Vector& /*bar_next*/, Vector& /*bar_prev*/, Vector& /*bar_design*/) const
{
    throw StepError("application does not provide step_adjoint", info.level, info.index);
}

void App::access_adjoint(const Vector& /*u*/, Index /*index*/, const Design& /*design*/,
                         double /*bar_objective*/, Vector& /*bar_u*/, Vector& /*bar_design*/) const
{
}

void App::sum(double alpha, const Vector& u, double beta, Vector& v) const
{
    if (v.size() != u.size()) {
        throw std::invalid_argument("sum: size mismatch");
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = alpha * u[k] + beta * v[k];
    }
}

double App::norm(const Vector& u) const
{
    double s = 0.0;
    for (double x : u) {
        s += x * x;
    }
    return std::sqrt(s);
}

Buffer App::pack(const Vector& u) const
{
    Buffer out(u.size() * sizeof(double));
    if (!u.empty()) {
        std::memcpy(out.data(), u.data(), out.size());
    }
    return out;
}

Vector App::unpack(const Buffer& buffer) const
{
    if (buffer.size() % sizeof(double) != 0) {
        throw std::invalid_argument("unpack: buffer size is not a multiple of sizeof(double)");
    }
    Vector u(buffer.size() / sizeof(double));
    if (!u.empty()) {
        std::memcpy(u.data(), buffer.data(), buffer.size());
    }
    return u;
}

}  // namespace pintadj
