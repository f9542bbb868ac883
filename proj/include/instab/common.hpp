#ifndef INSTAB_COMMON_HPP
#define INSTAB_COMMON_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace instab {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using LabelVector = std::vector<int>;

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent bundle on disk / in memory.
class BundleError : public Error {
 public:
  BundleError(const std::string& what, std::string run_id = {}, std::string path = {})
      : Error(compose(what, run_id, path)), run_id_(std::move(run_id)), path_(std::move(path)) {}

  const std::string& run_id() const noexcept { return run_id_; }
  const std::string& path() const noexcept { return path_; }

 private:
  static std::string compose(const std::string& what, const std::string& run_id, const std::string& path) {
    std::string out = what;
    if (!run_id.empty()) out += " [run " + run_id + "]";
    if (!path.empty()) out += " [" + path + "]";
    return out;
  }
  std::string run_id_;
  std::string path_;
};

// A measure was requested that the input cannot support (e.g. JSD without probabilities).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Correlation statistic undefined because an input has zero variance / is all ties.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

// Input is numerically degenerate for the requested computation (zero matrix, p_eps = 1, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A run group (e.g. the failed runs) is too small for pairwise measures.
class InsufficientGroupError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

enum class Measure { sd, pwd, kappa, jsd, svcca, op, cka };

inline constexpr Measure kAllMeasures[] = {Measure::sd,    Measure::pwd, Measure::kappa, Measure::jsd,
                                           Measure::svcca, Measure::op,  Measure::cka};

std::string_view measure_name(Measure m) noexcept;
Measure parse_measure(std::string_view name);  // throws InvalidArgument
std::vector<Measure> parse_measure_list(std::string_view comma_separated);

inline bool is_representation_measure(Measure m) noexcept {
  return m == Measure::svcca || m == Measure::op || m == Measure::cka;
}
inline bool is_prediction_measure(Measure m) noexcept { return !is_representation_measure(m); }

enum class MetricKind { accuracy, f1, mcc };

std::string_view metric_name(MetricKind m) noexcept;
MetricKind parse_metric(std::string_view name);

// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must be
// written to per-index slots by the caller so output does not depend on
// scheduling. The exception from the lowest failing index is rethrown, which
// matches what a sequential loop would report.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::size_t failed_index = count;
  std::mutex failure_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        next.store(count);
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace instab

#endif  // INSTAB_COMMON_HPP
