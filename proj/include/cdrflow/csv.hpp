// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "cdrflow/common.hpp"

namespace cdrflow {

// Splits one delimited line into fields. Unquoted fields come back as views
// into the line; quoted fields are unescaped into scratch storage that stays
// valid until the next call.
class csv_splitter {
  public:
    explicit csv_splitter(char delimiter = ',') : delim_(delimiter) {}

    const std::vector<std::string_view>& split(std::string_view line) {
        fields_.clear();
        scratch_.clear();
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        size_t i = 0;
        const size_t n = line.size();
        while (true) {
            if (i < n && line[i] == '"') {
                scratch_.emplace_back();
                std::string& buf = scratch_.back();
                ++i;
                while (i < n) {
                    if (line[i] == '"') {
                        if (i + 1 < n && line[i + 1] == '"') {
                            buf.push_back('"');
                            i += 2;
                        } else {
                            ++i;
                            break;
                        }
                    } else {
                        buf.push_back(line[i++]);
                    }
                }
                fields_.push_back(buf);
                if (i < n && line[i] == delim_) {
                    ++i;
                    continue;
                }
                break;
            }
            size_t j = line.find(delim_, i);
            if (j == std::string_view::npos) {
                fields_.push_back(line.substr(i));
                break;
            }
            fields_.push_back(line.substr(i, j - i));
            i = j + 1;
        }
        return fields_;
    }

  private:
    char delim_;
    std::vector<std::string_view> fields_;
    std::vector<std::string> scratch_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "rb");
    if (!f) throw data_error(errc::io_error, "cannot open " + path.string());
    std::string out;
    char buf[1 << 16];
    size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, got);
    std::fclose(f);
    return out;
}

// Calls fn(line_index, line) for every line; final unterminated line included.
template <typename Fn>
inline void for_each_line(std::string_view text, Fn&& fn) {
    size_t line_no = 0;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            fn(line_no++, text.substr(pos));
            break;
        }
        fn(line_no++, text.substr(pos, nl - pos));
        pos = nl + 1;
    }
}

// Buffered writer with atomic replace: content goes to "<path>.tmp" and is
// renamed onto the target only by commit(). A dropped writer leaves no
// partial artifact behind.
class csv_writer {
  public:
    explicit csv_writer(std::filesystem::path path, char delimiter = ',')
        : path_(std::move(path)), tmp_(path_), delim_(delimiter) {
        tmp_ += ".tmp";
        file_ = std::fopen(tmp_.string().c_str(), "wb");
        if (!file_) throw data_error(errc::io_error, "cannot create " + tmp_.string());
        buf_.reserve(buffer_limit + 1024);
    }

    csv_writer(const csv_writer&) = delete;
    csv_writer& operator=(const csv_writer&) = delete;

    ~csv_writer() {
        if (file_) {
            std::fclose(file_);
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }

    void field(std::string_view v) {
        sep();
        if (needs_quoting(v)) {
            buf_.push_back('"');
            for (char c : v) {
                if (c == '"') buf_.push_back('"');
                buf_.push_back(c);
            }
            buf_.push_back('"');
        } else {
            buf_.append(v);
        }
    }

    template <typename Int>
    void field_int(Int v) {
        sep();
        char tmp[24];
        auto [p, ec] = std::to_chars(tmp, tmp + sizeof tmp, v);
        (void)ec;
        buf_.append(tmp, p);
    }

    void field_double(double v) {
        sep();
        append_double(buf_, v);
    }

    void end_row() {
        buf_.push_back('\n');
        row_open_ = false;
        if (buf_.size() >= buffer_limit) flush();
    }

    void raw(std::string_view v) { buf_.append(v); }

    // Renames tmp over the target; the writer is spent afterwards.
    void commit() {
        flush();
        const int close_rc = std::fclose(file_);
        file_ = nullptr;
        std::error_code ec;
        if (close_rc != 0) {
            std::filesystem::remove(tmp_, ec);
            throw data_error(errc::io_error, "write failed for " + tmp_.string());
        }
        std::filesystem::rename(tmp_, path_, ec);
        if (ec) {
            std::error_code ec2;
            std::filesystem::remove(tmp_, ec2);
            throw data_error(errc::io_error, "rename failed for " + path_.string());
        }
    }

    const std::filesystem::path& path() const { return path_; }

  private:
    static constexpr size_t buffer_limit = 1 << 20;

    bool needs_quoting(std::string_view v) const {
        for (char c : v)
            if (c == delim_ || c == '"' || c == '\n' || c == '\r') return true;
        return false;
    }

    void sep() {
        if (row_open_) buf_.push_back(delim_);
        row_open_ = true;
    }

    void flush() {
        if (!buf_.empty()) {
            if (std::fwrite(buf_.data(), 1, buf_.size(), file_) != buf_.size())
                throw data_error(errc::io_error, "write failed for " + tmp_.string());
            buf_.clear();
        }
    }

    std::filesystem::path path_;
    std::filesystem::path tmp_;
    char delim_;
    std::FILE* file_ = nullptr;
    std::string buf_;
    bool row_open_ = false;
};

// Writes an arbitrary blob atomically (JSON/GeoJSON documents).
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    std::FILE* f = std::fopen(tmp.string().c_str(), "wb");
    if (!f) throw data_error(errc::io_error, "cannot create " + tmp.string());
    const bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size();
    if (std::fclose(f) != 0 || !ok) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw data_error(errc::io_error, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw data_error(errc::io_error, "rename failed for " + path.string());
}

} // namespace cdrflow
