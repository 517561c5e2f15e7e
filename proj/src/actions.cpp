#include "pintadj/actions.hpp"

namespace pintadj {

TrackedVector ActionRecorder::adopt(Vector value) const
{
    TrackedVector out{std::move(value), nullptr};
    if (tape_) {
        out.bar = make_slot(out.value.size());
    }
    return out;
}

TrackedVector ActionRecorder::clone(const TrackedVector& u) const
{
    TrackedVector v = adopt(app_->clone(u.value));
    if (tape_) {
        TapeEntry e;
        e.kind = ActionKind::Clone;
        e.input = u.bar;
        e.output = v.bar;
        tape_->record(std::move(e));
    }
    return v;
}

void ActionRecorder::sum(double alpha, const TrackedVector& u, double beta, TrackedVector& v) const
{
    app_->sum(alpha, u.value, beta, v.value);
    if (tape_) {
        TapeEntry e;
        e.kind = ActionKind::Sum;
        e.alpha = alpha;
        e.beta = beta;
        e.input = u.bar;
        e.output = v.bar;
        tape_->record(std::move(e));
    }
}

TrackedVector ActionRecorder::step(const TrackedVector& u_prev, const StepInfo& info) const
{
    TrackedVector out = adopt(app_->step(u_prev.value, info, *design_));
    if (tape_) {
        TapeEntry e;
        e.kind = ActionKind::Step;
        e.level = info.level;
        e.time_index = info.index;
        e.step = info;
        e.snapshot = u_prev.value;
        e.input = u_prev.bar;
        e.output = out.bar;
        tape_->record(std::move(e));
    }
    return out;
}

double ActionRecorder::access(const TrackedVector& u, Index index) const
{
    const double f = app_->access(u.value, index, *design_);
    if (tape_) {
        TapeEntry e;
        e.kind = ActionKind::Access;
        e.level = 0;
        e.time_index = index;
        e.snapshot = u.value;
        e.input = u.bar;
        tape_->record(std::move(e));
    }
    return f;
}

void ActionRecorder::send(const TrackedVector& u, int to, int level, Index index) const
{
    endpoint_->send(to, app_->pack(u.value));
    if (tape_) {
        TapeEntry e;
        e.kind = ActionKind::Send;
        e.level = level;
        e.time_index = index;
        e.input = u.bar;
        e.neighbor = to;
        tape_->record(std::move(e));
    }
}

TrackedVector ActionRecorder::recv(int from, int level, Index index) const
{
    TrackedVector out = adopt(app_->unpack(endpoint_->recv(from)));
    if (tape_) {
        TapeEntry e;
        e.kind = ActionKind::Recv;
        e.level = level;
        e.time_index = index;
        e.output = out.bar;
        e.neighbor = from;
        tape_->record(std::move(e));
    }
    return out;
}

}  // namespace pintadj
