#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pintadj/app.hpp"
#include "pintadj/core.hpp"
#include "pintadj/parallel.hpp"

namespace pintadj {

/// Adjoint accumulation buffer paired with one primal state vector.
///
/// Slots are shared between the live vector and every tape entry that touches it,
/// so a slot disappears as soon as both the vector is dropped and the last entry
/// referencing it is popped. Storage is materialised lazily; an unmaterialised
/// slot reads as zero.
class AdjointSlot {
public:
    explicit AdjointSlot(std::size_t dim);
    ~AdjointSlot();
    AdjointSlot(const AdjointSlot&) = delete;
    AdjointSlot& operator=(const AdjointSlot&) = delete;

    std::uint64_t id() const { return id_; }
    std::size_t dim() const { return dim_; }
    bool is_zero() const { return value_.empty(); }

    /// Zero-filled storage on first use.
    Vector& materialize();
    /// Current value as a dense vector (zeros if never touched).
    Vector value() const;

    void add(const Vector& x, double scale = 1.0);
    void scale(double factor);
    void zero() { value_.clear(); }

    /// Number of slots alive in the process. Instrumentation for lifetime tests.
    static std::int64_t live_count() { return live_.load(); }

private:
    std::uint64_t id_;
    std::size_t dim_;
    Vector value_;

    static std::atomic<std::uint64_t> next_id_;
    static std::atomic<std::int64_t> live_;
};

using SlotPtr = std::shared_ptr<AdjointSlot>;

inline SlotPtr make_slot(std::size_t dim)
{
    return std::make_shared<AdjointSlot>(dim);
}

enum class ActionKind { Step, Access, Clone, Sum, Send, Recv };

const char* to_string(ActionKind kind);

/// One recorded hook call.
///
/// Slot roles per kind:
///   Step:   input = bar u^{i-1}, output = bar u^i (fresh slot of the new vector)
///   Access: input = bar u^i
///   Clone:  input = bar u, output = bar v (fresh slot of the copy)
///   Sum:    input = bar u, output = bar v (v updated in place, keeps its slot)
///   Send:   input = slot of the vector that was packed
///   Recv:   output = fresh slot of the unpacked vector
struct TapeEntry {
    ActionKind kind = ActionKind::Step;
    int level = 0;
    Index time_index = 0;
    StepInfo step;       // Step only
    Vector snapshot;     // primal input of Step and Access
    double alpha = 0.0;  // Sum only
    double beta = 0.0;
    SlotPtr input;
    SlotPtr output;
    int neighbor = -1;   // Send/Recv peer rank
};

/// LIFO record of the primal actions of one iteration on one worker.
class ActionTape {
public:
    void record(TapeEntry entry);
    TapeEntry pop();

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    std::size_t count(ActionKind kind) const;
    void clear() { entries_.clear(); }

    const TapeEntry& top() const { return entries_.back(); }

private:
    std::vector<TapeEntry> entries_;
};

/// Gradient bar-rho, bucketed by the fine time index each contribution belongs to.
///
/// Buckets are summed in index order when the sweep finishes, which keeps the
/// gradient independent of how time points were split between workers.
class GradientAccumulator {
public:
    GradientAccumulator() = default;
    /// `first` and `count` are the fine indices owned by this worker, `m` is the
    /// coarsening factor used to map a level-l index j to fine index j * m^l.
    GradientAccumulator(std::size_t design_dim, Index first, Index count, Index m);

    std::size_t design_dim() const { return dim_; }
    /// Scratch vector a hook may accumulate into; handed back to `commit`.
    Vector scratch() const { return Vector(dim_, 0.0); }
    void commit(int level, Index index, const Vector& increment);

    /// Row-major [point][component] terms for an ordered reduction.
    const std::vector<double>& terms() const { return buckets_; }
    /// Column sums in index order (single-worker total).
    Vector total() const;

private:
    std::size_t dim_ = 0;
    Index first_ = 0;
    Index count_ = 0;
    Index m_ = 2;
    std::vector<double> buckets_;
};

/// Reverse-mode rules of the differentiated actions. All accumulate.
namespace adjoint_rules {

/// v = clone(u):   bar_u += bar_v; bar_v = 0
void clone(AdjointSlot& bar_u, AdjointSlot& bar_v);

/// v = alpha u + beta v:   bar_u += alpha bar_v; bar_v = beta bar_v
void sum(double alpha, double beta, AdjointSlot& bar_u, AdjointSlot& bar_v);

}  // namespace adjoint_rules

/// Everything a reverse sweep needs besides the tape itself.
struct SweepContext {
    const App* app = nullptr;
    const Design* design = nullptr;
    /// Seed on the objective; 1 for gradients, 0 to strip the access contributions.
    double bar_objective = 1.0;
    /// Peer messaging for Send/Recv entries; may be null when the tape has none.
    const Endpoint* endpoint = nullptr;
    GradientAccumulator* gradient = nullptr;
};

/// Pops the tape to empty, applying the differentiated action of every entry.
/// The caller seeds output slots before and reads input slots after.
void reverse_sweep(ActionTape& tape, const SweepContext& ctx);

/// ||next - prev||_2 over all points, using the application's norm per point.
double adjoint_residual(const App& app, std::span<const Vector> next, std::span<const Vector> prev);

}  // namespace pintadj
