#include "pintadj/tape.hpp"

#include <cmath>
#include <string>

namespace pintadj {

std::atomic<std::uint64_t> AdjointSlot::next_id_{1};
std::atomic<std::int64_t> AdjointSlot::live_{0};

AdjointSlot::AdjointSlot(std::size_t dim) : id_(next_id_.fetch_add(1)), dim_(dim)
{
    live_.fetch_add(1);
}

AdjointSlot::~AdjointSlot()
{
    live_.fetch_sub(1);
}

Vector& AdjointSlot::materialize()
{
    if (value_.empty()) {
        value_.assign(dim_, 0.0);
    }
    return value_;
}

Vector AdjointSlot::value() const
{
    return value_.empty() ? Vector(dim_, 0.0) : value_;
}

void AdjointSlot::add(const Vector& x, double scale)
{
    if (x.size() != dim_) {
        throw TapeError("adjoint slot " + std::to_string(id_) + ": size mismatch");
    }
    auto& v = materialize();
    for (std::size_t k = 0; k < dim_; ++k) {
        v[k] += scale * x[k];
    }
}

void AdjointSlot::scale(double factor)
{
    if (value_.empty()) {
        return;
    }
    if (factor == 0.0) {
        value_.clear();
        return;
    }
    for (double& x : value_) {
        x *= factor;
    }
}

const char* to_string(ActionKind kind)
{
    switch (kind) {
    case ActionKind::Step: return "step";
    case ActionKind::Access: return "access";
    case ActionKind::Clone: return "clone";
    case ActionKind::Sum: return "sum";
    case ActionKind::Send: return "send";
    case ActionKind::Recv: return "recv";
    }
    return "?";
}

void ActionTape::record(TapeEntry entry)
{
    entries_.push_back(std::move(entry));
}

TapeEntry ActionTape::pop()
{
    if (entries_.empty()) {
        throw TapeError("pop from empty action tape");
    }
    TapeEntry e = std::move(entries_.back());
    entries_.pop_back();
    return e;
}

std::size_t ActionTape::count(ActionKind kind) const
{
    std::size_t n = 0;
    for (const auto& e : entries_) {
        n += e.kind == kind ? 1 : 0;
    }
    return n;
}

GradientAccumulator::GradientAccumulator(std::size_t design_dim, Index first, Index count, Index m)
    : dim_(design_dim), first_(first), count_(count), m_(m),
      buckets_(static_cast<std::size_t>(count) * design_dim, 0.0)
{
}

void GradientAccumulator::commit(int level, Index index, const Vector& increment)
{
    Index fine = index;
    for (int l = 0; l < level; ++l) {
        fine *= m_;
    }
    if (fine < first_ || fine >= first_ + count_) {
        throw TapeError("gradient contribution for fine index " + std::to_string(fine) +
                        " outside this worker's range");
    }
    const auto row = static_cast<std::size_t>(fine - first_) * dim_;
    for (std::size_t k = 0; k < dim_; ++k) {
        buckets_[row + k] += increment[k];
    }
}

Vector GradientAccumulator::total() const
{
    Vector out(dim_, 0.0);
    for (std::size_t k = 0; k < buckets_.size(); ++k) {
        out[k % dim_] += buckets_[k];
    }
    return out;
}

namespace adjoint_rules {

void clone(AdjointSlot& bar_u, AdjointSlot& bar_v)
{
    if (!bar_v.is_zero()) {
        bar_u.add(bar_v.value());
    }
    bar_v.zero();
}

void sum(double alpha, double beta, AdjointSlot& bar_u, AdjointSlot& bar_v)
{
    if (&bar_u == &bar_v) {
        throw TapeError("sum adjoint with aliased operands");
    }
    if (!bar_v.is_zero()) {
        bar_u.add(bar_v.value(), alpha);
    }
    bar_v.scale(beta);
}

}  // namespace adjoint_rules

namespace {

AdjointSlot& require(const SlotPtr& slot, const TapeEntry& e)
{
    if (!slot) {
        throw TapeError(std::string("tape entry '") + to_string(e.kind) + "' at level " + std::to_string(e.level) +
                        ", index " + std::to_string(e.time_index) + " references a missing adjoint slot");
    }
    return *slot;
}

}  // namespace

void reverse_sweep(ActionTape& tape, const SweepContext& ctx)
{
    const App& app = *ctx.app;
    while (!tape.empty()) {
        TapeEntry e = tape.pop();
        switch (e.kind) {
        case ActionKind::Step: {
            auto& out = require(e.output, e);
            auto& in = require(e.input, e);
            if (out.is_zero()) {
                break;
            }
            Vector bar_design = ctx.gradient ? ctx.gradient->scratch() : Vector(ctx.design->size(), 0.0);
            app.step_adjoint(e.snapshot, e.step, *ctx.design, out.value(), in.materialize(), bar_design);
            if (ctx.gradient) {
                ctx.gradient->commit(e.level, e.time_index, bar_design);
            }
            break;
        }
        case ActionKind::Access: {
            auto& in = require(e.input, e);
            if (ctx.bar_objective == 0.0) {
                break;
            }
            Vector bar_design = ctx.gradient ? ctx.gradient->scratch() : Vector(ctx.design->size(), 0.0);
            app.access_adjoint(e.snapshot, e.time_index, *ctx.design, ctx.bar_objective, in.materialize(),
                               bar_design);
            if (ctx.gradient) {
                ctx.gradient->commit(e.level, e.time_index, bar_design);
            }
            break;
        }
        case ActionKind::Clone:
            adjoint_rules::clone(require(e.input, e), require(e.output, e));
            break;
        case ActionKind::Sum:
            adjoint_rules::sum(e.alpha, e.beta, require(e.input, e), require(e.output, e));
            break;
        case ActionKind::Send: {
            // primal send of u^i turns into a receive of bar u^i
            if (!ctx.endpoint) {
                throw TapeError("send entry on tape but no endpoint for the reverse message");
            }
            auto& in = require(e.input, e);
            in.add(app.unpack(ctx.endpoint->recv(e.neighbor)));
            break;
        }
        case ActionKind::Recv: {
            if (!ctx.endpoint) {
                throw TapeError("recv entry on tape but no endpoint for the reverse message");
            }
            auto& out = require(e.output, e);
            ctx.endpoint->send(e.neighbor, app.pack(out.value()));
            out.zero();
            break;
        }
        }
    }
}

double adjoint_residual(const App& app, std::span<const Vector> next, std::span<const Vector> prev)
{
    if (next.size() != prev.size()) {
        throw std::invalid_argument("adjoint_residual: iterates have different lengths");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
        if (next[i].size() != prev[i].size()) {
            throw std::invalid_argument("adjoint_residual: point " + std::to_string(i) + " has mismatched size");
        }
        Vector d = app.clone(next[i]);
        app.sum(-1.0, prev[i], 1.0, d);
        const double n = app.norm(d);
        s += n * n;
    }
    return std::sqrt(s);
}

}  // namespace pintadj
