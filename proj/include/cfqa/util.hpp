#pragma once
// Small shared helpers: stable hashing, text normalization, a worker pool
// that preserves input order, and a mutex-guarded warning log.

#include <atomic>
#include <cctype>
#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

namespace cfqa {

// FNV-1a, 64 bit. Platform-independent, so digests and question ids are
// stable across runs and machines.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

inline std::string stable_hash(std::string_view data) { return to_hex(fnv1a64(data)); }

// Lowercase, non-alphanumeric runs collapsed to single spaces, trimmed.
inline std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending_space = true;
        }
    }
    return out;
}

inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::istringstream in{normalize_text(text)};
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

inline void log_warn(const std::string& msg) {
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::cerr << "[warn] " << msg << "\n";
}

// Applies fn to every item and returns results in input order regardless of
// worker count. Exceptions are re-thrown in input order, so a failing run
// behaves identically whether it used 1 worker or 8.
template <typename T, typename F>
auto parallel_map(const std::vector<T>& items, int workers, F&& fn)
    -> std::vector<std::invoke_result_t<F&, const T&>> {
    using R = std::invoke_result_t<F&, const T&>;
    const std::size_t n = items.size();
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);

    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) slots[i].emplace(fn(items[i]));
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    slots[i].emplace(fn(items[i]));
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        const int count = std::min<int>(workers, static_cast<int>(n));
        pool.reserve(static_cast<std::size_t>(count));
        for (int w = 0; w < count; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        for (std::size_t i = 0; i < n; ++i)
            if (errors[i]) std::rethrow_exception(errors[i]);
    }

    std::vector<R> out;
    out.reserve(n);
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
}

}  // namespace cfqa
