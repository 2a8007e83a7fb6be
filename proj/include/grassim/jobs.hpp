#pragma once

// Asynchronous jobs on a bounded pool of runner threads, with polling,
// progress and cancellation.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "grassim/error.hpp"

namespace grassim {

enum class JobState { queued, running, done, failed, cancelled };

inline std::string_view to_string(JobState s) {
    switch (s) {
        case JobState::queued: return "queued";
        case JobState::running: return "running";
        case JobState::done: return "done";
        case JobState::failed: return "failed";
        case JobState::cancelled: return "cancelled";
    }
    return "unknown";
}

inline bool is_finished(JobState s) { return s == JobState::done || s == JobState::failed || s == JobState::cancelled; }

struct JobStatus {
    std::string id;
    std::string kind;
    JobState state = JobState::queued;
    std::size_t completed = 0;
    std::size_t total = 0;
    std::string result;  // artifact id; for cancelled jobs the partial result, if any
    std::string error;

    double progress() const { return total ? static_cast<double>(completed) / static_cast<double>(total) : 0.0; }
};

/// Handed to the job body: cancellation flag and progress reporting.
class JobContext {
public:
    const std::atomic<bool>& cancel_flag() const { return cancel_; }
    bool cancelled() const { return cancel_.load(); }
    void progress(std::size_t completed, std::size_t total) {
        std::lock_guard lock(*mutex_);
        status_->completed = completed;
        status_->total = total;
    }

private:
    friend class JobManager;
    std::atomic<bool> cancel_{false};
    std::mutex* mutex_ = nullptr;
    JobStatus* status_ = nullptr;
};

class JobManager {
public:
    /// The body returns the id of the stored result (possibly partial after
    /// cancellation, or empty when nothing was produced).
    using Body = std::function<std::string(JobContext&)>;

    explicit JobManager(int runners = 1) {
        for (int i = 0; i < std::max(1, runners); ++i) threads_.emplace_back([this] { run(); });
    }

    ~JobManager() {
        {
            std::lock_guard lock(mutex_);
            stopping_ = true;
            for (auto& [id, job] : jobs_) job->ctx.cancel_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    JobManager(const JobManager&) = delete;
    JobManager& operator=(const JobManager&) = delete;

    std::string submit(std::string kind, Body body) {
        auto job = std::make_shared<Job>();
        std::lock_guard lock(mutex_);
        job->status.id = "job-" + std::to_string(++next_id_);
        job->status.kind = std::move(kind);
        job->body = std::move(body);
        job->ctx.mutex_ = &mutex_;
        job->ctx.status_ = &job->status;
        jobs_[job->status.id] = job;
        queue_.push_back(job);
        cv_.notify_one();
        return job->status.id;
    }

    JobStatus status(const std::string& id) const {
        std::lock_guard lock(mutex_);
        return find(id)->status;
    }

    /// Queued jobs are cancelled at once; running jobs stop at the next
    /// checkpoint. Finished jobs cannot be cancelled.
    JobStatus cancel(const std::string& id) {
        std::lock_guard lock(mutex_);
        const auto& job = find(id);
        if (is_finished(job->status.state))
            fail(ErrorCode::conflict, "job " + id + " already " + std::string(to_string(job->status.state)));
        job->ctx.cancel_ = true;
        if (job->status.state == JobState::queued) job->status.state = JobState::cancelled;
        return job->status;
    }

    /// Blocks until the job finishes or the timeout passes; returns the status.
    JobStatus wait(const std::string& id, std::chrono::milliseconds timeout = std::chrono::hours(1)) const {
        std::unique_lock lock(mutex_);
        const auto job = find(id);
        done_cv_.wait_for(lock, timeout, [&] { return is_finished(job->status.state); });
        return job->status;
    }

private:
    struct Job {
        JobStatus status;
        Body body;
        JobContext ctx;
    };

    const std::shared_ptr<Job>& find(const std::string& id) const {
        const auto it = jobs_.find(id);
        if (it == jobs_.end()) fail(ErrorCode::not_found, "no job with id '" + id + "'");
        return it->second;
    }

    void run() {
        while (true) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock lock(mutex_);
                cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
                if (queue_.empty()) return;
                job = queue_.front();
                queue_.pop_front();
                if (job->status.state != JobState::queued) continue;  // cancelled while queued
                job->status.state = JobState::running;
            }
            std::string result, error;
            bool ok = true;
            try {
                result = job->body(job->ctx);
            } catch (const std::exception& e) {
                ok = false;
                error = e.what();
            }
            {
                std::lock_guard lock(mutex_);
                job->status.result = result;
                if (job->ctx.cancelled()) {
                    job->status.state = JobState::cancelled;
                } else if (ok) {
                    job->status.state = JobState::done;
                } else {
                    job->status.state = JobState::failed;
                    job->status.error = error;
                }
                job->body = nullptr;
            }
            done_cv_.notify_all();
        }
    }

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    mutable std::condition_variable done_cv_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::deque<std::shared_ptr<Job>> queue_;
    std::vector<std::thread> threads_;
    std::uint64_t next_id_ = 0;
    bool stopping_ = false;
};

}  // namespace grassim
