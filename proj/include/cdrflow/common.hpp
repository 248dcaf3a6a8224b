// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cdrflow {

enum class errc {
    bad_config,
    io_error,
    bad_imei,
    future_release,
    degenerate_sites,
    insufficient_reference,
    empty_windows,
    empty_cohort,
    empty_table,
    degenerate_rank,
    unknown_site,
    bad_bin_width,
    infeasible_scenario,
};

inline const char* errc_name(errc c) {
    switch (c) {
    case errc::bad_config: return "bad_config";
    case errc::io_error: return "io_error";
    case errc::bad_imei: return "bad_imei";
    case errc::future_release: return "future_release";
    case errc::degenerate_sites: return "degenerate_sites";
    case errc::insufficient_reference: return "insufficient_reference";
    case errc::empty_windows: return "empty_windows";
    case errc::empty_cohort: return "empty_cohort";
    case errc::empty_table: return "empty_table";
    case errc::degenerate_rank: return "degenerate_rank";
    case errc::unknown_site: return "unknown_site";
    case errc::bad_bin_width: return "bad_bin_width";
    case errc::infeasible_scenario: return "infeasible_scenario";
    }
    return "unknown";
}

// Base for all toolkit errors. config_error maps to exit code 1,
// data_error to 2, anything else to 3.
struct error : std::runtime_error {
    errc code;
    error(errc c, const std::string& msg)
        : std::runtime_error(std::string(errc_name(c)) + ": " + msg), code(c) {}
};

struct config_error : error {
    using error::error;
};

struct data_error : error {
    using error::error;
};

// ---- small string helpers (ASCII only; CDR identifiers are plain ASCII) ----

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline char to_lower_ascii(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

// Lower-cases and collapses whitespace runs to a single space.
inline std::string fold_name(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : trim(s)) {
        if (c == ' ' || c == '\t') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(to_lower_ascii(c));
    }
    return out;
}

inline bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!is_digit(c)) return false;
    return true;
}

template <typename Int>
inline bool parse_int(std::string_view s, Int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

// Shortest round-trip formatting; keeps file output byte-stable.
inline void append_double(std::string& out, double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    out.append(buf, p);
}

inline std::string format_double(double v) {
    std::string s;
    append_double(s, v);
    return s;
}

// FNV-1a; used for run-manifest file fingerprints.
struct fnv1a {
    std::uint64_t state = 1469598103934665603ull;
    void update(const void* data, size_t n) {
        auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            state ^= p[i];
            state *= 1099511628211ull;
        }
    }
    std::uint64_t digest() const { return state; }
    std::string hex() const {
        static const char* d = "0123456789abcdef";
        std::string s(16, '0');
        std::uint64_t v = state;
        for (int i = 15; i >= 0; --i) {
            s[static_cast<size_t>(i)] = d[v & 0xf];
            v >>= 4;
        }
        return s;
    }
};

// Interned string table. Ids are dense, assigned in first-seen order.
// Backing storage is a deque so the map's string_view keys stay valid.
class string_pool {
  public:
    string_pool() = default;
    string_pool(const string_pool&) = delete;            // index views into storage
    string_pool& operator=(const string_pool&) = delete;
    string_pool(string_pool&&) = default; // deque move keeps element addresses
    string_pool& operator=(string_pool&&) = default;

    std::uint32_t intern(std::string_view s) {
        auto it = index_.find(s);
        if (it != index_.end()) return it->second;
        auto id = static_cast<std::uint32_t>(strings_.size());
        strings_.emplace_back(s);
        index_.emplace(std::string_view(strings_.back()), id);
        return id;
    }
    const std::string& at(std::uint32_t id) const { return strings_[id]; }
    size_t size() const { return strings_.size(); }

  private:
    std::deque<std::string> strings_;
    std::unordered_map<std::string_view, std::uint32_t> index_;
};

} // namespace cdrflow
