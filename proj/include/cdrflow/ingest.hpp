// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "cdrflow/common.hpp"
#include "cdrflow/csv.hpp"
#include "cdrflow/parallel.hpp"
#include "cdrflow/time.hpp"

namespace cdrflow {

enum class sex_t : std::uint8_t { absent = 0, male, female };
enum class customer_t : std::uint8_t { consumer = 1, business };
enum class payment_t : std::uint8_t { prepaid = 1, postpaid };

inline const char* sex_name(sex_t s) {
    return s == sex_t::male ? "M" : s == sex_t::female ? "F" : "";
}
inline const char* customer_name(customer_t c) {
    return c == customer_t::consumer ? "consumer" : "business";
}
inline const char* payment_name(payment_t p) {
    return p == payment_t::prepaid ? "prepaid" : "postpaid";
}

// One accepted wide-format record. String fields are views into the source
// line; callers intern them before the line buffer goes away.
struct wide_cdr_row {
    std::string_view sim_id;
    std::string_view cell_id;
    std::string_view tac; // already reduced to the 8-digit prefix
    utc_seconds timestamp = 0;
    double lon = 0.0, lat = 0.0;
    std::int16_t age = -1; // -1 = absent
    sex_t sex = sex_t::absent;
    customer_t customer_type = customer_t::consumer;
    payment_t payment_type = payment_t::prepaid;
};

// Column roles of the wide format, bound to physical columns by name.
struct schema_map {
    std::string sim_id = "sim_id";
    std::string timestamp = "timestamp";
    std::string cell_id = "cell_id";
    std::string site_lon = "site_lon";
    std::string site_lat = "site_lat";
    std::string age = "age";
    std::string sex = "sex";
    std::string customer_type = "customer_type";
    std::string payment_type = "payment_type";
    std::string tac = "tac";
};

struct resolved_schema {
    std::array<int, 10> col{}; // role order as in schema_map
    int max_col = 0;
};

inline resolved_schema resolve_schema(const std::vector<std::string_view>& header,
                                      const schema_map& schema) {
    auto find = [&](const std::string& name) {
        for (size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return static_cast<int>(i);
        throw config_error(errc::bad_config, "input header lacks column '" + name + "'");
    };
    resolved_schema r{};
    r.col = {find(schema.sim_id),   find(schema.timestamp),     find(schema.cell_id),
             find(schema.site_lon), find(schema.site_lat),      find(schema.age),
             find(schema.sex),      find(schema.customer_type), find(schema.payment_type),
             find(schema.tac)};
    r.max_col = *std::max_element(r.col.begin(), r.col.end());
    return r;
}

// Reject reasons are stable strings: they land in rejects.csv as-is.
namespace reject {
inline constexpr std::string_view bad_field_count = "bad_field_count";
inline constexpr std::string_view bad_timestamp = "bad_timestamp";
inline constexpr std::string_view bad_coordinate = "bad_coordinate";
inline constexpr std::string_view bad_tac = "bad_tac";
inline constexpr std::string_view bad_age = "bad_age";
inline constexpr std::string_view bad_sex = "bad_sex";
inline constexpr std::string_view bad_customer_type = "bad_customer_type";
inline constexpr std::string_view bad_payment_type = "bad_payment_type";
inline constexpr std::string_view out_of_period = "out_of_period";
inline constexpr std::string_view empty_line = "empty_line";
} // namespace reject

// Parses one data line against the resolved schema. On success fills `row`
// and returns an empty view; otherwise returns the reject reason. Malformed
// data never throws.
inline std::string_view parse_wide_row(const std::vector<std::string_view>& fields,
                                       const resolved_schema& schema,
                                       const std::optional<observation_period>& period,
                                       wide_cdr_row& row) {
    if (static_cast<int>(fields.size()) <= schema.max_col) return reject::bad_field_count;
    const auto f = [&](size_t role) { return trim(fields[static_cast<size_t>(schema.col[role])]); };

    const auto ts = parse_iso8601(f(1));
    if (!ts) return reject::bad_timestamp;
    row.timestamp = *ts;
    if (period && !period->contains(row.timestamp)) return reject::out_of_period;

    if (!parse_double(f(3), row.lon) || !parse_double(f(4), row.lat)) return reject::bad_coordinate;
    if (row.lon < -180.0 || row.lon > 180.0 || row.lat < -90.0 || row.lat > 90.0)
        return reject::bad_coordinate;

    const std::string_view tac = f(9);
    if (tac.size() < 8 || !all_digits(tac)) return reject::bad_tac;
    row.tac = tac.substr(0, 8); // TAC = first 8 digits of the IMEI

    const std::string_view age = f(5);
    if (age.empty()) {
        row.age = -1;
    } else {
        int v;
        if (!parse_int(age, v) || v < 0 || v > 120) return reject::bad_age;
        row.age = static_cast<std::int16_t>(v);
    }

    const std::string_view sex = f(6);
    if (sex.empty())
        row.sex = sex_t::absent;
    else if (sex == "M" || sex == "m")
        row.sex = sex_t::male;
    else if (sex == "F" || sex == "f")
        row.sex = sex_t::female;
    else
        return reject::bad_sex;

    const std::string_view ctype = f(7);
    if (ctype == "consumer")
        row.customer_type = customer_t::consumer;
    else if (ctype == "business")
        row.customer_type = customer_t::business;
    else
        return reject::bad_customer_type;

    const std::string_view ptype = f(8);
    if (ptype == "prepaid")
        row.payment_type = payment_t::prepaid;
    else if (ptype == "postpaid")
        row.payment_type = payment_t::postpaid;
    else
        return reject::bad_payment_type;

    row.sim_id = f(0);
    row.cell_id = f(2);
    if (row.sim_id.empty() || row.cell_id.empty()) return reject::bad_field_count;
    return {};
}

// ---------------------------------------------------------------------------
// Normalized tables
// ---------------------------------------------------------------------------

struct event_rec {
    std::uint32_t sim;
    std::uint32_t cell;
    utc_seconds ts;
    std::uint64_t line; // global input line, total tiebreak for sorting
};

struct subscriber_rec {
    std::int16_t age = -1;
    sex_t sex = sex_t::absent;
    customer_t customer_type = customer_t::consumer;
    payment_t payment_type = payment_t::prepaid;
    std::uint8_t conflict_mask = 0; // one bit per attribute with conflicting values
};

struct device_obs {
    std::uint32_t sim;
    std::uint32_t tac;
    utc_seconds first_seen;
    utc_seconds last_seen;
    std::uint64_t event_count;
};

struct reject_rec {
    std::uint64_t line;
    std::string_view reason;
    std::string raw;
};

struct cell_site_info {
    double lon = 0.0, lat = 0.0;
};

struct ingest_result {
    string_pool sims;  // id order = lexicographic sim order
    string_pool cells; // id order = lexicographic cell order
    string_pool tacs;  // id order = lexicographic tac order
    std::vector<event_rec> events;           // sorted by (sim, ts, line)
    std::vector<subscriber_rec> subscribers; // indexed by sim id
    std::vector<device_obs> devices;         // sorted by (sim, tac)
    std::vector<cell_site_info> cell_sites;  // indexed by cell id (earliest coords win)
    std::vector<reject_rec> rejects;         // sorted by line
    std::uint64_t lines_in = 0;
    std::uint64_t accepted = 0;
    std::uint64_t attribute_conflicts = 0; // (sim, attribute) pairs
};

namespace detail {

// Per-attribute winner under (timestamp, line) order plus a conflict flag.
// merge() is associative and commutative, so chunk boundaries and worker
// count cannot change the outcome.
struct attr_slot {
    utc_seconds ts = std::numeric_limits<utc_seconds>::max();
    std::uint64_t line = std::numeric_limits<std::uint64_t>::max();
    std::int32_t value = -1; // -1 = never seen
    bool conflict = false;

    void observe(utc_seconds t, std::uint64_t ln, std::int32_t v) {
        if (v < 0) return;
        if (value < 0) {
            ts = t;
            line = ln;
            value = v;
            return;
        }
        if (v != value) conflict = true;
        if (t < ts || (t == ts && ln < line)) {
            ts = t;
            line = ln;
            value = v;
        }
    }

    void merge(const attr_slot& o) {
        if (o.value < 0) return;
        if (value < 0) {
            *this = o;
            return;
        }
        conflict = conflict || o.conflict || value != o.value;
        if (o.ts < ts || (o.ts == ts && o.line < line)) {
            ts = o.ts;
            line = o.line;
            value = o.value;
        }
    }
};

struct sub_acc {
    attr_slot age, sex, customer, payment;
};

struct dev_acc {
    utc_seconds first_seen = std::numeric_limits<utc_seconds>::max();
    utc_seconds last_seen = std::numeric_limits<utc_seconds>::min();
    std::uint64_t count = 0;

    void observe(utc_seconds t) {
        first_seen = std::min(first_seen, t);
        last_seen = std::max(last_seen, t);
        ++count;
    }
    void merge(const dev_acc& o) {
        first_seen = std::min(first_seen, o.first_seen);
        last_seen = std::max(last_seen, o.last_seen);
        count += o.count;
    }
};

struct local_event {
    std::uint32_t sim;
    std::uint32_t cell;
    utc_seconds ts;
    std::uint32_t line; // chunk-local
};

struct chunk_result {
    std::vector<std::string> sim_names, cell_names, tac_names;
    std::vector<local_event> events;
    std::vector<sub_acc> subs;                       // by local sim id
    std::unordered_map<std::uint64_t, dev_acc> devs; // key = (local sim << 32) | local tac
    std::vector<std::pair<std::uint32_t, cell_site_info>> cell_coords;
    std::vector<reject_rec> rejects; // line = chunk-local
    std::uint64_t line_count = 0;
};

// Chunk-local interner. Keys are views into the chunk buffer, which outlives
// the map, so lookups never allocate.
class local_interner {
  public:
    std::uint32_t intern(std::string_view s, std::vector<std::string>& names) {
        auto [it, inserted] = map_.try_emplace(s, static_cast<std::uint32_t>(names.size()));
        if (inserted) names.emplace_back(s);
        return it->second;
    }

  private:
    std::unordered_map<std::string_view, std::uint32_t> map_;
};

inline void parse_chunk(std::string_view text, char delimiter, const resolved_schema& schema,
                        const std::optional<observation_period>& period, chunk_result& out) {
    csv_splitter splitter(delimiter);
    local_interner sims, cells, tacs;
    std::vector<bool> cell_seen;
    wide_cdr_row row;
    for_each_line(text, [&](std::uint64_t line_no, std::string_view line) {
        out.line_count++;
        if (trim(line).empty()) {
            out.rejects.push_back({line_no, reject::empty_line, std::string(line)});
            return;
        }
        const auto& fields = splitter.split(line);
        const std::string_view why = parse_wide_row(fields, schema, period, row);
        if (!why.empty()) {
            out.rejects.push_back({line_no, why, std::string(line)});
            return;
        }
        const std::uint32_t sim = sims.intern(row.sim_id, out.sim_names);
        const std::uint32_t cell = cells.intern(row.cell_id, out.cell_names);
        const std::uint32_t tac = tacs.intern(row.tac, out.tac_names);
        out.events.push_back({sim, cell, row.timestamp, static_cast<std::uint32_t>(line_no)});
        if (sim >= out.subs.size()) out.subs.resize(sim + 1);
        auto& s = out.subs[sim];
        s.age.observe(row.timestamp, line_no, row.age);
        s.sex.observe(row.timestamp, line_no,
                      row.sex == sex_t::absent ? -1 : static_cast<std::int32_t>(row.sex));
        s.customer.observe(row.timestamp, line_no, static_cast<std::int32_t>(row.customer_type));
        s.payment.observe(row.timestamp, line_no, static_cast<std::int32_t>(row.payment_type));
        out.devs[(static_cast<std::uint64_t>(sim) << 32) | tac].observe(row.timestamp);
        if (cell >= cell_seen.size()) cell_seen.resize(cell + 1, false);
        if (!cell_seen[cell]) {
            cell_seen[cell] = true;
            out.cell_coords.emplace_back(cell, cell_site_info{row.lon, row.lat});
        }
    });
}

} // namespace detail

struct ingest_options {
    char delimiter = ',';
    schema_map schema;
    std::optional<observation_period> period;
    size_t chunk_bytes = 8u << 20;
};

// Chunk-parallel parse + normalize. Chunking depends only on the input bytes
// and chunk_bytes, and chunk results merge in chunk order, so any worker
// count produces identical tables.
class ingestor {
  public:
    explicit ingestor(ingest_options opts) : opts_(std::move(opts)) {}

    ~ingestor() {
        try {
            shutdown_workers();
        } catch (...) {
        }
    }

    void consume_file(const std::filesystem::path& path) {
        std::FILE* f = std::fopen(path.string().c_str(), "rb");
        if (!f) throw config_error(errc::io_error, "cannot open input " + path.string());
        std::string carry;
        const size_t chunk = std::max<size_t>(opts_.chunk_bytes, 1u << 16);
        std::vector<char> io(chunk);
        bool header_done = false;
        while (true) {
            const size_t got = std::fread(io.data(), 1, io.size(), f);
            if (got == 0) break;
            std::string block = std::move(carry);
            carry.clear();
            block.append(io.data(), got);
            const size_t last_nl = block.rfind('\n');
            if (last_nl == std::string::npos) {
                carry = std::move(block);
                continue;
            }
            carry = block.substr(last_nl + 1);
            block.resize(last_nl + 1);
            if (!header_done) {
                const size_t first_nl = block.find('\n');
                csv_splitter hs(opts_.delimiter);
                schema_ = resolve_schema(hs.split(std::string_view(block.data(), first_nl)),
                                         opts_.schema);
                header_done = true;
                block.erase(0, first_nl + 1);
                if (block.empty()) continue;
            }
            submit_chunk(std::move(block));
        }
        std::fclose(f);
        if (!carry.empty()) {
            if (!header_done) {
                csv_splitter hs(opts_.delimiter);
                schema_ = resolve_schema(hs.split(carry), opts_.schema);
            } else {
                submit_chunk(std::move(carry));
            }
        }
        wait_all();
    }

    // In-memory variant; same chunking semantics as files.
    void consume_text(std::string_view text) {
        size_t first_nl = text.find('\n');
        if (first_nl == std::string_view::npos) first_nl = text.size();
        csv_splitter hs(opts_.delimiter);
        schema_ = resolve_schema(hs.split(text.substr(0, first_nl)), opts_.schema);
        size_t pos = std::min(first_nl + 1, text.size());
        const size_t chunk = std::max<size_t>(opts_.chunk_bytes, 64);
        while (pos < text.size()) {
            size_t end = std::min(pos + chunk, text.size());
            if (end < text.size()) {
                const size_t nl = text.find('\n', end - 1);
                end = (nl == std::string_view::npos) ? text.size() : nl + 1;
            }
            submit_chunk(std::string(text.substr(pos, end - pos)));
            pos = end;
        }
        wait_all();
    }

    ingest_result finish() {
        wait_all();
        finalize();
        return std::move(result_);
    }

  private:
    void submit_chunk(std::string data) {
        start_workers();
        {
            std::unique_lock<std::mutex> lock(mu_);
            cv_space_.wait(lock, [&] { return jobs_.size() < max_inflight_; });
            jobs_.emplace_back(next_idx_++, std::move(data));
        }
        cv_work_.notify_one();
        merge_ready();
    }

    void start_workers() {
        if (!workers_.empty()) return;
        const unsigned n = effective_threads(1024);
        for (unsigned i = 0; i < n; ++i)
            workers_.emplace_back([this] { worker_loop(); });
    }

    void worker_loop() {
        while (true) {
            std::pair<std::uint64_t, std::string> job;
            {
                std::unique_lock<std::mutex> lock(mu_);
                cv_work_.wait(lock, [&] { return stop_ || !jobs_.empty(); });
                if (jobs_.empty()) return;
                job = std::move(jobs_.front());
                jobs_.erase(jobs_.begin());
            }
            cv_space_.notify_one();
            auto res = std::make_unique<detail::chunk_result>();
            detail::parse_chunk(job.second, opts_.delimiter, schema_, opts_.period, *res);
            {
                std::lock_guard<std::mutex> lock(mu_);
                done_[job.first] = std::move(res);
            }
            cv_done_.notify_all();
        }
    }

    // Folds any chunks that completed in order; runs on the producer thread.
    void merge_ready() {
        std::unique_lock<std::mutex> lock(mu_);
        while (true) {
            auto it = done_.find(merged_idx_);
            if (it == done_.end()) return;
            auto res = std::move(it->second);
            done_.erase(it);
            lock.unlock();
            merge_chunk(*res);
            ++merged_idx_;
            lock.lock();
        }
    }

    void wait_all() {
        if (workers_.empty()) return;
        while (true) {
            {
                std::unique_lock<std::mutex> lock(mu_);
                cv_done_.wait(lock, [&] {
                    return done_.count(merged_idx_) > 0 ||
                           (jobs_.empty() && merged_idx_ + done_.size() == next_idx_);
                });
                if (jobs_.empty() && done_.empty() && merged_idx_ == next_idx_) break;
            }
            merge_ready();
        }
        shutdown_workers();
    }

    void shutdown_workers() {
        if (workers_.empty()) return;
        {
            std::lock_guard<std::mutex> lock(mu_);
            stop_ = true;
        }
        cv_work_.notify_all();
        for (auto& w : workers_) w.join();
        workers_.clear();
        stop_ = false;
    }

    void merge_chunk(detail::chunk_result& c) {
        const std::uint64_t base = result_.lines_in;
        result_.lines_in += c.line_count;

        std::vector<std::uint32_t> sim_map(c.sim_names.size());
        for (size_t i = 0; i < c.sim_names.size(); ++i)
            sim_map[i] = result_.sims.intern(c.sim_names[i]);
        std::vector<std::uint32_t> cell_map(c.cell_names.size());
        for (size_t i = 0; i < c.cell_names.size(); ++i)
            cell_map[i] = result_.cells.intern(c.cell_names[i]);
        std::vector<std::uint32_t> tac_map(c.tac_names.size());
        for (size_t i = 0; i < c.tac_names.size(); ++i)
            tac_map[i] = result_.tacs.intern(c.tac_names[i]);

        for (const auto& e : c.events)
            result_.events.push_back({sim_map[e.sim], cell_map[e.cell], e.ts, base + e.line});
        result_.accepted += c.events.size();

        if (subs_.size() < result_.sims.size()) subs_.resize(result_.sims.size());
        for (size_t i = 0; i < c.subs.size(); ++i) {
            auto& src = c.subs[i];
            // rebase chunk-local lines before (ts, line) comparisons
            for (auto* slot : {&src.age, &src.sex, &src.customer, &src.payment})
                if (slot->value >= 0) slot->line += base;
            auto& dst = subs_[sim_map[i]];
            dst.age.merge(src.age);
            dst.sex.merge(src.sex);
            dst.customer.merge(src.customer);
            dst.payment.merge(src.payment);
        }

        for (const auto& [key, acc] : c.devs) {
            const std::uint32_t sim = sim_map[key >> 32];
            const std::uint32_t tac = tac_map[key & 0xffffffffu];
            devs_[(static_cast<std::uint64_t>(sim) << 32) | tac].merge(acc);
        }

        if (cell_first_.size() < result_.cells.size())
            cell_first_.resize(result_.cells.size(),
                               {std::numeric_limits<std::uint64_t>::max(), {}});
        for (const auto& [local_cell, info] : c.cell_coords) {
            auto& slot = cell_first_[cell_map[local_cell]];
            if (slot.first == std::numeric_limits<std::uint64_t>::max()) slot = {base, info};
        }

        for (auto& r : c.rejects) {
            r.line += base;
            result_.rejects.push_back(std::move(r));
        }
    }

    // Relabels ids to lexicographic order and sorts all tables; id order then
    // matches output order and downstream per-sim runs are contiguous.
    void finalize() {
        auto rerank = [](string_pool& pool) {
            std::vector<std::uint32_t> order(pool.size());
            std::iota(order.begin(), order.end(), 0u);
            std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
                return pool.at(a) < pool.at(b);
            });
            std::vector<std::uint32_t> rank(pool.size());
            string_pool sorted;
            for (size_t i = 0; i < order.size(); ++i) {
                rank[order[i]] = static_cast<std::uint32_t>(i);
                sorted.intern(pool.at(order[i]));
            }
            pool = std::move(sorted);
            return rank;
        };
        const auto sim_rank = rerank(result_.sims);
        const auto cell_rank = rerank(result_.cells);
        const auto tac_rank = rerank(result_.tacs);

        for (auto& e : result_.events) {
            e.sim = sim_rank[e.sim];
            e.cell = cell_rank[e.cell];
        }
        // stable scatter by sim, then per-sim (ts, line) ordering; feeds that
        // arrive time-sorted make the per-run sorts no-ops
        {
            std::vector<std::uint64_t> offsets(result_.sims.size() + 1, 0);
            for (const auto& e : result_.events) offsets[e.sim + 1]++;
            for (size_t i = 1; i < offsets.size(); ++i) offsets[i] += offsets[i - 1];
            std::vector<event_rec> sorted(result_.events.size());
            {
                std::vector<std::uint64_t> cursor(offsets.begin(), offsets.end() - 1);
                for (const auto& e : result_.events) sorted[cursor[e.sim]++] = e;
            }
            result_.events = std::move(sorted);
            auto ts_line_less = [](const event_rec& a, const event_rec& b) {
                return a.ts != b.ts ? a.ts < b.ts : a.line < b.line;
            };
            for (size_t sim = 0; sim < result_.sims.size(); ++sim) {
                auto begin = result_.events.begin() + static_cast<std::ptrdiff_t>(offsets[sim]);
                auto end = result_.events.begin() + static_cast<std::ptrdiff_t>(offsets[sim + 1]);
                if (!std::is_sorted(begin, end, ts_line_less)) std::sort(begin, end, ts_line_less);
            }
        }

        result_.subscribers.assign(result_.sims.size(), {});
        for (size_t old_id = 0; old_id < subs_.size(); ++old_id) {
            const auto& acc = subs_[old_id];
            auto& rec = result_.subscribers[sim_rank[old_id]];
            if (acc.age.value >= 0) rec.age = static_cast<std::int16_t>(acc.age.value);
            if (acc.sex.value >= 0) rec.sex = static_cast<sex_t>(acc.sex.value);
            if (acc.customer.value >= 0) rec.customer_type = static_cast<customer_t>(acc.customer.value);
            if (acc.payment.value >= 0) rec.payment_type = static_cast<payment_t>(acc.payment.value);
            rec.conflict_mask = static_cast<std::uint8_t>(
                (acc.age.conflict ? 1 : 0) | (acc.sex.conflict ? 2 : 0) |
                (acc.customer.conflict ? 4 : 0) | (acc.payment.conflict ? 8 : 0));
            result_.attribute_conflicts += static_cast<unsigned>(acc.age.conflict) +
                                           static_cast<unsigned>(acc.sex.conflict) +
                                           static_cast<unsigned>(acc.customer.conflict) +
                                           static_cast<unsigned>(acc.payment.conflict);
        }

        result_.devices.reserve(devs_.size());
        for (const auto& [key, acc] : devs_)
            result_.devices.push_back({sim_rank[key >> 32], tac_rank[key & 0xffffffffu],
                                       acc.first_seen, acc.last_seen, acc.count});
        std::sort(result_.devices.begin(), result_.devices.end(),
                  [](const device_obs& a, const device_obs& b) {
                      return a.sim != b.sim ? a.sim < b.sim : a.tac < b.tac;
                  });

        result_.cell_sites.assign(result_.cells.size(), {});
        for (size_t old_id = 0; old_id < cell_first_.size(); ++old_id)
            if (cell_first_[old_id].first != std::numeric_limits<std::uint64_t>::max())
                result_.cell_sites[cell_rank[old_id]] = cell_first_[old_id].second;

        std::sort(result_.rejects.begin(), result_.rejects.end(),
                  [](const reject_rec& a, const reject_rec& b) { return a.line < b.line; });

        subs_.clear();
        devs_.clear();
        cell_first_.clear();
    }

    ingest_options opts_;
    resolved_schema schema_{};
    ingest_result result_;
    std::vector<detail::sub_acc> subs_;
    std::unordered_map<std::uint64_t, detail::dev_acc> devs_;
    std::vector<std::pair<std::uint64_t, cell_site_info>> cell_first_;

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_work_, cv_space_, cv_done_;
    std::vector<std::pair<std::uint64_t, std::string>> jobs_;
    std::map<std::uint64_t, std::unique_ptr<detail::chunk_result>> done_;
    std::uint64_t next_idx_ = 0;
    std::uint64_t merged_idx_ = 0;
    size_t max_inflight_ = 16;
    bool stop_ = false;
};

// Convenience wrappers.
inline ingest_result ingest_files(const std::vector<std::filesystem::path>& inputs,
                                  const ingest_options& opts) {
    ingestor ing(opts);
    for (const auto& p : inputs) ing.consume_file(p);
    return ing.finish();
}

inline ingest_result ingest_text(std::string_view text, const ingest_options& opts) {
    ingestor ing(opts);
    ing.consume_text(text);
    return ing.finish();
}

// Expands a path to the list of input files: a file stands alone, a
// directory contributes its regular files in name order.
inline std::vector<std::filesystem::path> expand_inputs(const std::filesystem::path& p) {
    namespace fs = std::filesystem;
    if (!fs::exists(p)) throw config_error(errc::bad_config, "input not found: " + p.string());
    if (fs::is_regular_file(p)) return {p};
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(p))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw config_error(errc::bad_config, "input directory empty: " + p.string());
    return files;
}

} // namespace cdrflow
