#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace geomap {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Machine-readable error codes; the CLI maps these to report codes and exit status.
enum class ErrorCode {
    syntax_error,
    var_out_of_range,
    expr_domain,
    degenerate_metric,
    dimension_mismatch,
    signature_mismatch,
    null_tangent,
    too_few_points,
    isotropic_normal,
    rank_deficient,
    left_domain,
    caustic,
    reconstruction_singular,
    precondition_violation,
    param_out_of_range,
    unknown_corpus_entry,
    bad_job,
    io_error,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::syntax_error: return "SYNTAX_ERROR";
        case ErrorCode::var_out_of_range: return "VAR_OUT_OF_RANGE";
        case ErrorCode::expr_domain: return "EXPR_DOMAIN";
        case ErrorCode::degenerate_metric: return "DEGENERATE_METRIC";
        case ErrorCode::dimension_mismatch: return "DIMENSION_MISMATCH";
        case ErrorCode::signature_mismatch: return "SIGNATURE_MISMATCH";
        case ErrorCode::null_tangent: return "NULL_TANGENT";
        case ErrorCode::too_few_points: return "TOO_FEW_POINTS";
        case ErrorCode::isotropic_normal: return "ISOTROPIC_NORMAL";
        case ErrorCode::rank_deficient: return "RANK_DEFICIENT";
        case ErrorCode::caustic: return "CAUSTIC";
        case ErrorCode::reconstruction_singular: return "RECONSTRUCTION_SINGULAR";
        case ErrorCode::precondition_violation: return "PRECONDITION_VIOLATION";
        case ErrorCode::param_out_of_range: return "PARAM_OUT_OF_RANGE";
        case ErrorCode::unknown_corpus_entry: return "UNKNOWN_CORPUS_ENTRY";
        case ErrorCode::bad_job: return "BAD_JOB";
        case ErrorCode::io_error: return "IO_ERROR";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }
    const char* code_name() const { return error_code_name(code_); }

private:
    ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Packed storage for symmetric index pairs (i <= j, 0-based).
// ---------------------------------------------------------------------------

inline int sym_size(int n) { return n * (n + 1) / 2; }

inline int sym_index(int i, int j, int n) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i - 1) / 2 + (j - i);
}

inline double int_pow(double base, int exponent) {
    if (exponent == 0) return 1.0;
    bool neg = exponent < 0;
    long long e = neg ? -static_cast<long long>(exponent) : exponent;
    double acc = 1.0, b = base;
    while (e > 0) {
        if (e & 1) acc *= b;
        b *= b;
        e >>= 1;
    }
    return neg ? 1.0 / acc : acc;
}

// Pairwise (cascade) summation: deterministic and better conditioned than a
// running sum for the grid means used in reports.
inline double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0;
        for (double x : xs) s += x;
        return s;
    }
    size_t half = xs.size() / 2;
    return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

inline double pairwise_mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return pairwise_sum(xs) / static_cast<double>(xs.size());
}

// ---------------------------------------------------------------------------
// Grid parallelism. GEOMAP_THREADS caps the worker count; results must be
// written to per-index slots so any thread count yields identical output.
// ---------------------------------------------------------------------------

inline int max_threads() {
    static int cached = [] {
        if (const char* env = std::getenv("GEOMAP_THREADS")) {
            char* end = nullptr;
            long v = std::strtol(env, &end, 10);
            if (end != env && v >= 1) return static_cast<int>(std::min(v, 256L));
        }
        return 1;
    }();
    return cached;
}

template <typename Fn>
void parallel_for(size_t count, Fn&& fn) {
    int threads = std::min<size_t>(max_threads(), count);
    if (threads <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    next.store(count);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace geomap
