#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <span>
#include <vector>

#include "pintadj/core.hpp"
#include "pintadj/grid_hierarchy.hpp"

namespace pintadj {

/// Half-open index range [begin, end).
struct Range {
    Index begin = 0;
    Index end = 0;

    bool empty() const { return end <= begin; }
    Index size() const { return empty() ? 0 : end - begin; }
    bool contains(Index i) const { return i >= begin && i < end; }
};

/// Contiguous balanced split of `points` indices over `workers` ranks; sizes differ
/// by at most one and the larger ranges come first. Throws ConfigError when a rank
/// would own nothing.
std::vector<Range> partition(Index points, int workers);

/// Ownership of every point on every level. A rank owns coarse point j on level l
/// iff it owns fine point j * m^l, so coarse ranges may be empty.
class Partition {
public:
    Partition(const TimeHierarchy& hierarchy, int workers);

    int workers() const { return workers_; }
    const Range& range(int level, int rank) const { return ranges_[level][rank]; }
    int owner(int level, Index i) const;

private:
    int workers_;
    std::vector<std::vector<Range>> ranges_;
};

/// Sum per-worker term lists in ascending rank order. Each list holds rows of
/// `width` values; the result is their column sums. Because every rank owns a
/// contiguous index range, this is summation in global index order and the total
/// does not depend on how many workers produced it.
std::vector<double> reduce_deterministic(std::span<const std::vector<double>> per_worker, std::size_t width);

/// Thrown inside a worker whose peer failed; the original error is reported instead.
class WorkerAborted : public std::runtime_error {
public:
    WorkerAborted() : std::runtime_error("worker aborted because a peer failed") {}
};

enum class Direction { Forward, Reverse };

/// In-process message fabric for W ranks: FIFO point-to-point channels, barriers and
/// ordered reductions. Sends never block; receives block until a message arrives or
/// the fabric is aborted.
class Communicator {
public:
    explicit Communicator(int size);

    int size() const { return size_; }

    void send(int from, int to, Buffer payload);
    Buffer recv(int to, int from);

    /// Boundary hand-off between neighbouring ranks. Forward moves states towards
    /// higher ranks, Reverse moves adjoints back towards lower ranks.
    void exchange_boundary(Direction direction, int rank, Buffer payload);
    Buffer receive_boundary(Direction direction, int rank);

    void barrier(int rank);

    /// Every rank contributes term rows; every rank gets the same column sums.
    std::vector<double> all_reduce(int rank, std::vector<double> terms, std::size_t width);

    void abort() noexcept;
    bool aborted() const;

private:
    void barrier_locked(std::unique_lock<std::mutex>& lock);

    int size_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::vector<std::deque<Buffer>> channels_;  // index from * size + to
    int arrived_ = 0;
    std::uint64_t generation_ = 0;
    std::vector<std::vector<double>> gather_;
    bool aborted_ = false;
};

/// One rank's view of the fabric, used by the adjoint sweep to reverse messages.
class Endpoint {
public:
    Endpoint(Communicator& comm, int rank) : comm_(&comm), rank_(rank) {}

    int rank() const { return rank_; }
    int size() const { return comm_->size(); }
    Communicator& comm() const { return *comm_; }

    void send(int to, Buffer payload) const { comm_->send(rank_, to, std::move(payload)); }
    Buffer recv(int from) const { return comm_->recv(rank_, from); }
    std::vector<double> all_reduce(std::vector<double> terms, std::size_t width) const
    {
        return comm_->all_reduce(rank_, std::move(terms), width);
    }
    void barrier() const { comm_->barrier(rank_); }

private:
    Communicator* comm_;
    int rank_;
};

/// Runs `body` once per rank, each on its own thread (rank 0 on the caller for W = 1),
/// and rethrows the first failure after all ranks have stopped.
void run_workers(int workers, const std::function<void(Endpoint)>& body);

}  // namespace pintadj
