#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

namespace gkc {

// ---------------------------------------------------------------------------
// Errors. Hard failures are exceptions; recoverable/enumerated outcomes use
// Expected<T, E> below.
// ---------------------------------------------------------------------------

struct GkcError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : GkcError { using GkcError::GkcError; };
struct SchemaError : GkcError { using GkcError::GkcError; };
struct CardinalityError : GkcError { using GkcError::GkcError; };
struct AmbiguousAliasError : GkcError { using GkcError::GkcError; };
struct UnknownSymbolError : GkcError { using GkcError::GkcError; };
struct UnknownDrugError : GkcError { using GkcError::GkcError; };
struct ConfigError : GkcError { using GkcError::GkcError; };
struct CensoredError : GkcError { using GkcError::GkcError; };
struct NoObservationError : GkcError { using GkcError::GkcError; };
struct ModalityMismatchError : GkcError { using GkcError::GkcError; };
struct ProviderError : GkcError { using GkcError::GkcError; };
struct EmptyTextError : GkcError { using GkcError::GkcError; };
struct DimensionMismatchError : GkcError { using GkcError::GkcError; };
struct MissingArtifactError : GkcError { using GkcError::GkcError; };
struct InsufficientDataError : GkcError { using GkcError::GkcError; };
struct SingleClassError : GkcError { using GkcError::GkcError; };
struct NonFiniteError : GkcError { using GkcError::GkcError; };
struct NoPositiveError : GkcError { using GkcError::GkcError; };
struct TooFewPerClassError : GkcError { using GkcError::GkcError; };
struct TooFewPairsError : GkcError { using GkcError::GkcError; };
struct DegenerateModelError : GkcError { using GkcError::GkcError; };

/// Minimal expected-or-error holder for operations whose failure modes are
/// enumerated values rather than exceptional conditions.
template <typename T, typename E>
class Expected {
public:
    Expected(T value) : data_(std::move(value)) {}
    Expected(E error) : data_(std::move(error)) {}

    bool ok() const { return std::holds_alternative<T>(data_); }
    explicit operator bool() const { return ok(); }

    const T& value() const { return std::get<T>(data_); }
    T& value() { return std::get<T>(data_); }
    const E& error() const { return std::get<E>(data_); }

private:
    std::variant<T, E> data_;
};

// ---------------------------------------------------------------------------
// Strings
// ---------------------------------------------------------------------------

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

/// Fixed token split rule shared by the mock embedder and token counting:
/// case-fold, then split on any non-alphanumeric byte.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

inline std::size_t count_whitespace_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in_tok = false;
    for (char ch : text) {
        bool ws = std::isspace(static_cast<unsigned char>(ch));
        if (!ws && !in_tok) ++n;
        in_tok = !ws;
    }
    return n;
}

/// Renders a value at 4 significant digits with fixed formatting, so profile
/// text (and therefore digests) is stable across platforms.
inline std::string format_sig4(double v) {
    if (v == 0.0) return "0.000";
    std::ostringstream os;
    int mag = static_cast<int>(std::floor(std::log10(std::fabs(v))));
    int decimals = std::max(0, 3 - mag);
    os.setf(std::ios::fixed);
    os.precision(decimals);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// Parallel helper: runs fn(i) for i in [0, n) on up to n_threads workers.
// Work is pre-partitioned so scheduling cannot affect which thread runs
// which index; callers own any determinism requirements per index.
// ---------------------------------------------------------------------------

inline unsigned default_thread_count() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 2u : hc;
}

inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         unsigned n_threads = 0) {
    if (n == 0) return;
    if (n_threads == 0) n_threads = default_thread_count();
    n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    std::exception_ptr first_error;
    std::mutex err_mutex;
    workers.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        workers.emplace_back([&, t]() {
            try {
                for (std::size_t i = t; i < n; i += n_threads) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace gkc
