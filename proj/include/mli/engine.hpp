#pragma once

/*
 * Partitioned execution. A WorkerPool stands in for the nodes of a cluster:
 * each round runs one task per partition on up to workerCount threads, then
 * the caller (the master) combines results sequentially in partition order.
 * gatherAverage and broadcast implement the master-side exchange.
 */

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "mli/error.hpp"

namespace mli {

/// Detected hardware parallelism, at least 1.
inline std::size_t defaultWorkerCount() noexcept {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

class WorkerPool {
public:
    explicit WorkerPool(std::size_t workerCount = defaultWorkerCount()) : workerCount_(workerCount) {
        if (workerCount_ == 0) throw ConfigError("worker count must be at least 1");
        // The calling thread takes part in every round, so spawn one fewer.
        threads_.reserve(workerCount_ - 1);
        for (std::size_t t = 0; t + 1 < workerCount_; ++t) {
            threads_.emplace_back([this] { workerLoop(); });
        }
    }

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    ~WorkerPool() {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
        }
        wake_.notify_all();
        for (auto& t : threads_) t.join();
    }

    std::size_t workerCount() const noexcept { return workerCount_; }

    /// Runs task(i) for every i in [0, count) and blocks until all finish.
    /// After a failure no further tasks start; the exception from the lowest
    /// failing index is rethrown.
    void run(std::size_t count, const std::function<void(std::size_t)>& task) {
        if (count == 0) return;
        std::unique_lock roundLock(roundMutex_);
        Round round(&task, count);
        {
            std::lock_guard lock(mutex_);
            current_ = &round;
            ++generation_;
        }
        wake_.notify_all();
        drain(round);
        {
            std::unique_lock lock(mutex_);
            done_.wait(lock, [&] { return round.active == 0; });
            current_ = nullptr;
        }
        if (round.failedIndex != kNone) std::rethrow_exception(round.failure);
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    struct Round {
        Round(const std::function<void(std::size_t)>* t, std::size_t n) : task(t), count(n) {}

        const std::function<void(std::size_t)>* task;
        std::size_t count;
        std::atomic<std::size_t> next{0};
        std::atomic<bool> aborted{false};
        std::size_t active = 0;  // guarded by mutex_
        std::mutex failureMutex;
        std::size_t failedIndex = kNone;
        std::exception_ptr failure;
    };

    void drain(Round& round) {
        for (;;) {
            if (round.aborted.load(std::memory_order_relaxed)) return;
            const std::size_t i = round.next.fetch_add(1);
            if (i >= round.count) return;
            try {
                (*round.task)(i);
            } catch (...) {
                std::lock_guard lock(round.failureMutex);
                if (i < round.failedIndex) {
                    round.failedIndex = i;
                    round.failure = std::current_exception();
                }
                round.aborted.store(true);
            }
        }
    }

    void workerLoop() {
        std::size_t seen = 0;
        for (;;) {
            Round* round = nullptr;
            {
                std::unique_lock lock(mutex_);
                wake_.wait(lock, [&] { return stopping_ || (current_ != nullptr && generation_ != seen); });
                if (stopping_) return;
                seen = generation_;
                round = current_;
                ++round->active;
            }
            drain(*round);
            {
                std::lock_guard lock(mutex_);
                --round->active;
            }
            done_.notify_all();
        }
    }

    std::size_t workerCount_;
    std::vector<std::thread> threads_;
    std::mutex roundMutex_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    Round* current_ = nullptr;
    std::size_t generation_ = 0;
    bool stopping_ = false;
};

/// Runs fn(p) for every partition p and returns the results in partition
/// order. Without a pool the partitions run sequentially on the caller.
/// A failing task aborts the round with a PartitionError naming its index;
/// library errors raised by the task propagate unchanged.
template <typename Fn>
auto runPartitions(WorkerPool* pool, std::size_t partitionCount, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
    using R = std::invoke_result_t<Fn&, std::size_t>;
    std::vector<std::optional<R>> slots(partitionCount);
    auto task = [&](std::size_t p) {
        try {
            slots[p].emplace(fn(p));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw PartitionError(p, e.what());
        } catch (...) {
            throw PartitionError(p, "unknown exception");
        }
    };
    if (pool == nullptr || pool->workerCount() == 1 || partitionCount <= 1) {
        for (std::size_t p = 0; p < partitionCount; ++p) task(p);
    } else {
        pool->run(partitionCount, task);
    }
    std::vector<R> out;
    out.reserve(partitionCount);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

/// A per-partition result with its averaging weight.
struct WeightedVector {
    std::vector<double> value;
    double weight = 1.0;
};

/// Weighted mean sum(w_i v_i) / sum(w_i). Contributions are taken as offsets
/// from the first positive-weight vector and accumulate in ascending partition
/// order, so a single input, or P identical inputs, come back bit-exactly.
inline std::vector<double> gatherAverage(std::span<const WeightedVector> results) {
    if (results.empty()) throw DegenerateError("gatherAverage: no inputs");
    const std::size_t d = results.front().value.size();
    double total = 0.0;
    for (std::size_t p = 0; p < results.size(); ++p) {
        if (results[p].value.size() != d) {
            throw DimError("gatherAverage: partition " + std::to_string(p) + " has length " +
                           std::to_string(results[p].value.size()) + ", expected " + std::to_string(d));
        }
        if (!(results[p].weight >= 0.0)) {
            throw DegenerateError("gatherAverage: negative weight at partition " + std::to_string(p));
        }
        total += results[p].weight;
    }
    if (!(total > 0.0)) throw DegenerateError("gatherAverage: total weight is zero");
    std::size_t first = 0;
    while (results[first].weight == 0.0) ++first;
    const auto& base = results[first].value;
    std::vector<double> out(base);
    for (std::size_t p = first + 1; p < results.size(); ++p) {
        const auto& r = results[p];
        if (r.weight == 0.0) continue;
        const double c = r.weight / total;
        for (std::size_t j = 0; j < d; ++j) out[j] += c * (r.value[j] - base[j]);
    }
    return out;
}

/// Read-only value shared with every partition task of the next round.
template <typename T>
class Broadcast {
public:
    explicit Broadcast(T value) : value_(std::make_shared<const T>(std::move(value))) {}

    const T& value() const noexcept { return *value_; }
    const T& operator*() const noexcept { return *value_; }
    const T* operator->() const noexcept { return value_.get(); }

private:
    std::shared_ptr<const T> value_;
};

template <typename T>
Broadcast<std::decay_t<T>> broadcast(T&& value) {
    return Broadcast<std::decay_t<T>>(std::forward<T>(value));
}

}  // namespace mli
