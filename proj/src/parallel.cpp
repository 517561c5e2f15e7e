#include "pintadj/parallel.hpp"

#include <algorithm>
#include <exception>
#include <string>
#include <thread>

namespace pintadj {

std::vector<Range> partition(Index points, int workers)
{
    if (workers < 1) {
        throw ConfigError("need at least one worker");
    }
    if (points < workers) {
        throw ConfigError("workers (" + std::to_string(workers) + ") exceed time points (" +
                          std::to_string(points) + ")");
    }
    std::vector<Range> ranges(static_cast<std::size_t>(workers));
    const Index base = points / workers;
    const Index extra = points % workers;
    Index begin = 0;
    for (int r = 0; r < workers; ++r) {
        const Index size = base + (r < extra ? 1 : 0);
        ranges[static_cast<std::size_t>(r)] = Range{begin, begin + size};
        begin += size;
    }
    return ranges;
}

Partition::Partition(const TimeHierarchy& hierarchy, int workers) : workers_(workers)
{
    const auto fine = partition(hierarchy.points(0), workers);
    ranges_.push_back(fine);
    for (int l = 1; l < hierarchy.num_levels(); ++l) {
        const Index stride = hierarchy.stride(l);
        std::vector<Range> level(fine.size());
        for (std::size_t r = 0; r < fine.size(); ++r) {
            // coarse j is owned iff j * stride lies in [begin, end)
            const Index lo = (fine[r].begin + stride - 1) / stride;
            const Index hi = (fine[r].end + stride - 1) / stride;
            level[r] = Range{lo, std::min(hi, hierarchy.points(l))};
        }
        ranges_.push_back(std::move(level));
    }
}

int Partition::owner(int level, Index i) const
{
    const auto& ranges = ranges_[level];
    auto it = std::upper_bound(ranges.begin(), ranges.end(), i,
                               [](Index value, const Range& r) { return value < r.end; });
    if (it == ranges.end() || !it->contains(i)) {
        throw std::out_of_range("no owner for point " + std::to_string(i) + " on level " + std::to_string(level));
    }
    return static_cast<int>(it - ranges.begin());
}

std::vector<double> reduce_deterministic(std::span<const std::vector<double>> per_worker, std::size_t width)
{
    std::vector<double> total(width, 0.0);
    for (const auto& terms : per_worker) {
        for (std::size_t k = 0; k < terms.size(); ++k) {
            total[k % width] += terms[k];
        }
    }
    return total;
}

Communicator::Communicator(int size)
    : size_(size), channels_(static_cast<std::size_t>(size) * static_cast<std::size_t>(size)),
      gather_(static_cast<std::size_t>(size))
{
}

void Communicator::send(int from, int to, Buffer payload)
{
    {
        std::lock_guard lock(mutex_);
        if (aborted_) {
            throw WorkerAborted();
        }
        channels_[static_cast<std::size_t>(from * size_ + to)].push_back(std::move(payload));
    }
    cv_.notify_all();
}

Buffer Communicator::recv(int to, int from)
{
    std::unique_lock lock(mutex_);
    auto& channel = channels_[static_cast<std::size_t>(from * size_ + to)];
    cv_.wait(lock, [&] { return aborted_ || !channel.empty(); });
    if (aborted_) {
        throw WorkerAborted();
    }
    Buffer out = std::move(channel.front());
    channel.pop_front();
    return out;
}

void Communicator::exchange_boundary(Direction direction, int rank, Buffer payload)
{
    const int to = direction == Direction::Forward ? rank + 1 : rank - 1;
    if (to < 0 || to >= size_) {
        throw std::out_of_range("exchange_boundary: rank " + std::to_string(rank) + " has no neighbour");
    }
    send(rank, to, std::move(payload));
}

Buffer Communicator::receive_boundary(Direction direction, int rank)
{
    const int from = direction == Direction::Forward ? rank - 1 : rank + 1;
    if (from < 0 || from >= size_) {
        throw std::out_of_range("receive_boundary: rank " + std::to_string(rank) + " has no neighbour");
    }
    return recv(rank, from);
}

void Communicator::barrier_locked(std::unique_lock<std::mutex>& lock)
{
    if (aborted_) {
        throw WorkerAborted();
    }
    const auto gen = generation_;
    if (++arrived_ == size_) {
        arrived_ = 0;
        ++generation_;
        cv_.notify_all();
        return;
    }
    cv_.wait(lock, [&] { return aborted_ || generation_ != gen; });
    if (aborted_) {
        throw WorkerAborted();
    }
}

void Communicator::barrier(int /*rank*/)
{
    std::unique_lock lock(mutex_);
    barrier_locked(lock);
}

std::vector<double> Communicator::all_reduce(int rank, std::vector<double> terms, std::size_t width)
{
    std::unique_lock lock(mutex_);
    gather_[static_cast<std::size_t>(rank)] = std::move(terms);
    barrier_locked(lock);
    auto total = reduce_deterministic(gather_, width);
    // keep gather_ intact until every rank has summed it
    barrier_locked(lock);
    return total;
}

void Communicator::abort() noexcept
{
    {
        std::lock_guard lock(mutex_);
        aborted_ = true;
    }
    cv_.notify_all();
}

bool Communicator::aborted() const
{
    std::lock_guard lock(mutex_);
    return aborted_;
}

void run_workers(int workers, const std::function<void(Endpoint)>& body)
{
    if (workers < 1) {
        throw ConfigError("need at least one worker");
    }
    Communicator comm(workers);
    if (workers == 1) {
        body(Endpoint(comm, 0));
        return;
    }

    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto run = [&](int rank) {
        try {
            body(Endpoint(comm, rank));
        } catch (const WorkerAborted&) {
            // a peer failed first; its error is the one reported
        } catch (...) {
            {
                std::lock_guard lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
            comm.abort();
        }
    };

    {
        std::vector<std::jthread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int r = 0; r < workers; ++r) {
            threads.emplace_back(run, r);
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace pintadj
