// Parallel runtime: wavefront schedules for the eight sweep directions, a
// row-cyclic worker assignment, persistent worker threads with per-front
// barriers, tagged FIFO channels for cross-worker trace transfer, and phase
// instrumentation with a simple communication cost model.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lsweeps/core.hpp"
#include "lsweeps/traces.hpp"

namespace lsweeps {

enum class SweepDir { Up = 0, Down, Right, Left, BL2TR, TR2BL, BR2TL, TL2BR };

inline constexpr std::array<SweepDir, 8> kAllSweepDirs = {
    SweepDir::Up,    SweepDir::Down,  SweepDir::Right, SweepDir::Left,
    SweepDir::BL2TR, SweepDir::TR2BL, SweepDir::BR2TL, SweepDir::TL2BR};

inline const char* sweep_name(SweepDir d) {
  switch (d) {
    case SweepDir::Up: return "up";
    case SweepDir::Down: return "down";
    case SweepDir::Right: return "right";
    case SweepDir::Left: return "left";
    case SweepDir::BL2TR: return "bl2tr";
    case SweepDir::TR2BL: return "tr2bl";
    case SweepDir::BR2TL: return "br2tl";
    case SweepDir::TL2BR: return "tl2br";
  }
  return "?";
}

// Row-cyclic mapping of subdomain rows to workers.
struct WorkerAssignment {
  int p = 1;  // worker count, 1 <= p <= q
  int q = 1;
  int worker_of_row(int si) const { return si % p; }
};

// Honors the LSWEEPS_WORKERS environment override, then clamps to [1, q].
inline WorkerAssignment make_worker_assignment(int q, int requested_p) {
  int p = requested_p;
  if (const char* env = std::getenv("LSWEEPS_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) p = static_cast<int>(v);
  }
  p = std::max(1, std::min(p, q));
  return WorkerAssignment{p, q};
}

struct SweepTask {
  int si = 0, sj = 0;
  bool operator==(const SweepTask&) const = default;
};

struct SweepSchedule {
  SweepDir dir = SweepDir::Up;
  int q = 0, r = 0;
  std::vector<std::vector<SweepTask>> fronts;
};

namespace detail {

// Front index of cell (si,sj): graph distance from the sweep's seed cells, so
// every dependency sits in a strictly earlier front.  Horizontal sweeps use
// one front per column; rows are independent, and column fronts keep the
// dependency structure explicit.
inline int front_index(SweepDir dir, int q, int r, int si, int sj) {
  switch (dir) {
    case SweepDir::Up: return si;
    case SweepDir::Down: return q - 1 - si;
    case SweepDir::Right: return sj;
    case SweepDir::Left: return r - 1 - sj;
    case SweepDir::BL2TR: return si + sj;
    case SweepDir::TR2BL: return (q - 1 - si) + (r - 1 - sj);
    case SweepDir::BR2TL: return si + (r - 1 - sj);
    case SweepDir::TL2BR: return (q - 1 - si) + sj;
  }
  return 0;
}

}  // namespace detail

// Cells whose outgoing boards task (si,sj) reads; each must complete first.
inline std::vector<SweepTask> sweep_dependencies(SweepDir dir, int q, int r, int si,
                                                 int sj) {
  std::vector<SweepTask> deps;
  auto add = [&](int i, int j) {
    if (i >= 0 && i < q && j >= 0 && j < r) deps.push_back({i, j});
  };
  switch (dir) {
    case SweepDir::Up: add(si - 1, sj); break;
    case SweepDir::Down: add(si + 1, sj); break;
    case SweepDir::Right: add(si, sj - 1); break;
    case SweepDir::Left: add(si, sj + 1); break;
    case SweepDir::BL2TR: add(si - 1, sj); add(si, sj - 1); break;
    case SweepDir::TR2BL: add(si + 1, sj); add(si, sj + 1); break;
    case SweepDir::BR2TL: add(si - 1, sj); add(si, sj + 1); break;
    case SweepDir::TL2BR: add(si + 1, sj); add(si, sj - 1); break;
  }
  return deps;
}

inline SweepSchedule build_schedule(int q, int r, SweepDir dir) {
  if (q <= 0 || r <= 0) throw std::invalid_argument("build_schedule: empty grid");
  int nfronts = 0;
  switch (dir) {
    case SweepDir::Up:
    case SweepDir::Down: nfronts = q; break;
    case SweepDir::Right:
    case SweepDir::Left: nfronts = r; break;
    default: nfronts = q + r - 1; break;
  }
  SweepSchedule s;
  s.dir = dir;
  s.q = q;
  s.r = r;
  s.fronts.resize(static_cast<size_t>(nfronts));
  for (int si = 0; si < q; ++si) {
    for (int sj = 0; sj < r; ++sj) {
      s.fronts[static_cast<size_t>(detail::front_index(dir, q, r, si, sj))].push_back(
          {si, sj});
    }
  }
  return s;
}

// Every cell appears exactly once and all dependencies land in strictly
// earlier fronts.  Returns false and fills `why` on violation.
inline bool validate_schedule(const SweepSchedule& s, std::string* why = nullptr) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  std::vector<int> front_of_cell(static_cast<size_t>(s.q) * s.r, -1);
  for (size_t f = 0; f < s.fronts.size(); ++f) {
    for (const SweepTask& t : s.fronts[f]) {
      if (t.si < 0 || t.si >= s.q || t.sj < 0 || t.sj >= s.r) {
        return fail("task outside grid");
      }
      int& slot = front_of_cell[static_cast<size_t>(t.si) * s.r + t.sj];
      if (slot != -1) return fail("cell scheduled twice");
      slot = static_cast<int>(f);
    }
  }
  for (int c = 0; c < s.q * s.r; ++c) {
    if (front_of_cell[static_cast<size_t>(c)] == -1) return fail("cell never scheduled");
  }
  for (size_t f = 0; f < s.fronts.size(); ++f) {
    for (const SweepTask& t : s.fronts[f]) {
      for (const SweepTask& d : sweep_dependencies(s.dir, s.q, s.r, t.si, t.sj)) {
        const int df = front_of_cell[static_cast<size_t>(d.si) * s.r + d.sj];
        if (df >= static_cast<int>(f)) {
          std::ostringstream os;
          os << sweep_name(s.dir) << ": dependency (" << d.si << "," << d.sj
             << ") of (" << t.si << "," << t.sj << ") not in an earlier front";
          return fail(os.str());
        }
      }
    }
  }
  return true;
}

// The one cross-row transfer a task emits: the receiving cell and the side at
// which the receiver consumes the pair.  Horizontal sweeps stay within a row
// and never message.
struct MessageRoute {
  SweepTask to;
  Side to_side = Side::B;
};

inline std::optional<MessageRoute> task_message(SweepDir dir, int q, int /*r*/, int si,
                                                int sj) {
  switch (dir) {
    case SweepDir::Up:
    case SweepDir::BL2TR:
    case SweepDir::BR2TL:
      if (si + 1 < q) return MessageRoute{{si + 1, sj}, Side::B};
      return std::nullopt;
    case SweepDir::Down:
    case SweepDir::TR2BL:
    case SweepDir::TL2BR:
      if (si - 1 >= 0) return MessageRoute{{si - 1, sj}, Side::T};
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

// Messages that cross workers under the given assignment (counted whether or
// not the payload is empty).
inline long predicted_messages(const SweepSchedule& s, const WorkerAssignment& a) {
  long n = 0;
  for (const auto& front : s.fronts) {
    for (const SweepTask& t : front) {
      if (auto route = task_message(s.dir, s.q, s.r, t.si, t.sj)) {
        if (a.worker_of_row(t.si) != a.worker_of_row(route->to.si)) ++n;
      }
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// Message channels

struct TraceMessage {
  SweepDir dir = SweepDir::Up;
  int si = 0, sj = 0;           // receiving cell
  Side side = Side::B;          // side at which the receiver consumes it
  std::optional<TracePair> payload;
};

// FIFO channel between one ordered worker pair.  Receives verify the tag of
// the head message; a mismatch or a timeout reports the expected (i,j,side).
class Channel {
 public:
  void push(TraceMessage msg) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      q_.push_back(std::move(msg));
    }
    cv_.notify_all();
  }

  TraceMessage pop_expect(SweepDir dir, int si, int sj, Side side) {
    std::unique_lock<std::mutex> lock(mu_);
    if (!cv_.wait_for(lock, std::chrono::seconds(120), [&] { return !q_.empty(); })) {
      throw std::runtime_error("channel timeout waiting for " + tag_text(dir, si, sj, side));
    }
    TraceMessage msg = std::move(q_.front());
    q_.pop_front();
    if (msg.dir != dir || msg.si != si || msg.sj != sj || msg.side != side) {
      throw std::logic_error("channel tag mismatch: expected " +
                             tag_text(dir, si, sj, side) + ", got " +
                             tag_text(msg.dir, msg.si, msg.sj, msg.side));
    }
    return msg;
  }

  bool empty() const {
    std::lock_guard<std::mutex> lock(mu_);
    return q_.empty();
  }

 private:
  static std::string tag_text(SweepDir dir, int si, int sj, Side side) {
    std::ostringstream os;
    os << sweep_name(dir) << " trace for cell (" << si << "," << sj << ") side "
       << side_name(side);
    return os.str();
  }

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<TraceMessage> q_;
};

// All p*p directed channels plus global message/volume counters.  Volume is
// counted in complex values actually shipped (delta * len per non-empty
// payload); empty payloads still count as messages.
class MessageHub {
 public:
  explicit MessageHub(int p) : p_(p), channels_(static_cast<size_t>(p) * p) {
    for (auto& c : channels_) c = std::make_unique<Channel>();
  }

  Channel& channel(int from, int to) {
    return *channels_[static_cast<size_t>(from) * p_ + to];
  }

  void send(int from, int to, TraceMessage msg) {
    messages_.fetch_add(1, std::memory_order_relaxed);
    if (msg.payload) {
      volume_.fetch_add(static_cast<long>(msg.payload->values_per_layer()),
                        std::memory_order_relaxed);
    }
    channel(from, to).push(std::move(msg));
  }

  int workers() const { return p_; }
  long messages() const { return messages_.load(std::memory_order_relaxed); }
  long volume_complex() const { return volume_.load(std::memory_order_relaxed); }

  bool all_drained() const {
    for (const auto& c : channels_) {
      if (!c->empty()) return false;
    }
    return true;
  }

 private:
  int p_;
  std::vector<std::unique_ptr<Channel>> channels_;
  std::atomic<long> messages_{0};
  std::atomic<long> volume_{0};
};

// ---------------------------------------------------------------------------
// Worker pool

inline double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

// Persistent thread pool executing one front at a time.  Worker w runs the
// tasks k with owner(k) == w in ascending k and reports its busy CPU seconds;
// a barrier separates consecutive fronts.  With p == 1 tasks run inline.
class WorkerPool {
 public:
  explicit WorkerPool(int p) : p_(p), busy_(static_cast<size_t>(p), 0.0) {
    for (int w = 1; w < p_; ++w) {
      threads_.emplace_back([this, w] { worker_loop(w); });
    }
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
      ++generation_;
    }
    cv_start_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int size() const { return p_; }

  // Runs one front; returns per-worker busy CPU seconds.  The first exception
  // thrown by any task is rethrown here after the barrier.
  std::vector<double> run_front(int ntasks, const std::function<int(int)>& owner,
                                const std::function<void(int)>& body) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      ntasks_ = ntasks;
      owner_ = &owner;
      body_ = &body;
      done_count_ = 0;
      error_ = nullptr;
      std::fill(busy_.begin(), busy_.end(), 0.0);
      ++generation_;
    }
    cv_start_.notify_all();
    run_tasks(0);
    {
      std::unique_lock<std::mutex> lock(mu_);
      ++done_count_;
      if (done_count_ == p_) {
        cv_done_.notify_all();
      } else {
        cv_done_.wait(lock, [&] { return done_count_ == p_; });
      }
      if (error_) std::rethrow_exception(error_);
      return busy_;
    }
  }

 private:
  void worker_loop(int w) {
    long seen = 0;
    for (;;) {
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_start_.wait(lock, [&] { return generation_ != seen; });
        seen = generation_;
        if (stop_) return;
      }
      run_tasks(w);
      {
        std::lock_guard<std::mutex> lock(mu_);
        ++done_count_;
      }
      cv_done_.notify_all();
    }
  }

  void run_tasks(int w) {
    const double t0 = thread_cpu_seconds();
    try {
      for (int k = 0; k < ntasks_; ++k) {
        if ((*owner_)(k) == w) (*body_)(k);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
    busy_[static_cast<size_t>(w)] = thread_cpu_seconds() - t0;
  }

  int p_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_start_, cv_done_;
  long generation_ = 0;
  int done_count_ = 0;
  bool stop_ = false;
  int ntasks_ = 0;
  const std::function<int(int)>* owner_ = nullptr;
  const std::function<void(int)>* body_ = nullptr;
  std::vector<double> busy_;
  std::exception_ptr error_;
};

// ---------------------------------------------------------------------------
// Instrumentation

enum class Phase { Setup = 0, Factorize, Solve };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Setup: return "setup";
    case Phase::Factorize: return "factorize";
    case Phase::Solve: return "solve";
  }
  return "?";
}

struct PhaseStats {
  double seconds = 0;        // wall time on this machine
  double seconds_model = 0;  // modeled makespan: critical path + message costs
  long messages = 0;
  long volume_complex = 0;
};

// Synthetic per-message and per-value costs used by the modeled makespan; the
// model only has to rank schedules, not match any real network.
inline constexpr double kModelSecondsPerMessage = 2e-6;
inline constexpr double kModelSecondsPerComplex = 5e-9;

struct InstrumentationReport {
  PhaseStats setup, factorize, solve;

  PhaseStats& phase(Phase p) {
    switch (p) {
      case Phase::Setup: return setup;
      case Phase::Factorize: return factorize;
      case Phase::Solve: return solve;
    }
    return solve;
  }
  const PhaseStats& phase(Phase p) const {
    return const_cast<InstrumentationReport*>(this)->phase(p);
  }
};

// Books plain (non-sweep) wall time into a phase; model time follows wall
// time for work that has no parallel structure.
inline void instrument(InstrumentationReport& rep, Phase p, double seconds) {
  rep.phase(p).seconds += seconds;
  rep.phase(p).seconds_model += seconds;
}

// Books one executed front: wall time, the modeled makespan (busiest worker
// plus communication model), and the front's message traffic.
inline void instrument_front(InstrumentationReport& rep, Phase p, double wall_seconds,
                             const std::vector<double>& busy, long messages,
                             long volume_complex) {
  PhaseStats& ps = rep.phase(p);
  ps.seconds += wall_seconds;
  double busiest = 0;
  for (double b : busy) busiest = std::max(busiest, b);
  ps.seconds_model += busiest + kModelSecondsPerMessage * static_cast<double>(messages) +
                      kModelSecondsPerComplex * static_cast<double>(volume_complex);
  ps.messages += messages;
  ps.volume_complex += volume_complex;
}

class WallTimer {
 public:
  WallTimer() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace lsweeps
