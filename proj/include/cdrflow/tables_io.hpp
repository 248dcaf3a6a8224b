// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cdrflow/csv.hpp"
#include "cdrflow/ingest.hpp"
#include "cdrflow/stats.hpp"

namespace cdrflow {

// Writers for the normalized tables. All timestamps ISO-8601 UTC; rows are
// already sorted by ingest, so output is deterministic byte-for-byte.

inline void write_events_csv(const ingest_result& r, const std::filesystem::path& path) {
    csv_writer w(path);
    w.raw("sim_id,timestamp,cell_id\n");
    std::string ts;
    for (const auto& e : r.events) {
        ts.clear();
        append_iso8601(ts, e.ts);
        w.field(r.sims.at(e.sim));
        w.field(ts);
        w.field(r.cells.at(e.cell));
        w.end_row();
    }
    w.commit();
}

inline void write_subscribers_csv(const ingest_result& r, const std::filesystem::path& path) {
    csv_writer w(path);
    w.raw("sim_id,age,sex,customer_type,payment_type,conflicts\n");
    for (size_t id = 0; id < r.subscribers.size(); ++id) {
        const auto& s = r.subscribers[id];
        w.field(r.sims.at(static_cast<std::uint32_t>(id)));
        if (s.age >= 0)
            w.field_int(s.age);
        else
            w.field("");
        w.field(sex_name(s.sex));
        w.field(customer_name(s.customer_type));
        w.field(payment_name(s.payment_type));
        w.field_int(s.conflict_mask);
        w.end_row();
    }
    w.commit();
}

inline void write_devices_csv(const ingest_result& r, const std::filesystem::path& path) {
    csv_writer w(path);
    w.raw("sim_id,tac,first_seen,last_seen,event_count\n");
    std::string ts;
    for (const auto& d : r.devices) {
        w.field(r.sims.at(d.sim));
        w.field(r.tacs.at(d.tac));
        ts.clear();
        append_iso8601(ts, d.first_seen);
        w.field(ts);
        ts.clear();
        append_iso8601(ts, d.last_seen);
        w.field(ts);
        w.field_int(d.event_count);
        w.end_row();
    }
    w.commit();
}

inline void write_rejects_csv(const ingest_result& r, const std::filesystem::path& path) {
    csv_writer w(path);
    w.raw("line_no,reason,raw\n");
    for (const auto& rej : r.rejects) {
        w.field_int(rej.line + 1); // 1-based data line numbers
        w.field(rej.reason);
        w.field(rej.raw);
        w.end_row();
    }
    w.commit();
}

inline void write_cells_csv(const ingest_result& r, const std::filesystem::path& path) {
    csv_writer w(path);
    w.raw("cell_id,lon,lat\n");
    for (size_t id = 0; id < r.cell_sites.size(); ++id) {
        w.field(r.cells.at(static_cast<std::uint32_t>(id)));
        w.field_double(r.cell_sites[id].lon);
        w.field_double(r.cell_sites[id].lat);
        w.end_row();
    }
    w.commit();
}

// Readers for stage-to-stage handoff when stages run as separate commands.
// They rebuild the interned tables with the same id ordering guarantees as
// a fresh ingest (ids in file order, which writers emit sorted).

struct loaded_events {
    string_pool sims;
    string_pool cells;
    std::vector<event_rec> events;
};

inline loaded_events load_events_csv(const std::filesystem::path& path) {
    loaded_events out;
    const std::string text = read_file(path);
    csv_splitter split;
    bool header = true;
    std::uint64_t line_no = 0;
    for_each_line(text, [&](std::uint64_t, std::string_view line) {
        if (header) {
            header = false;
            return;
        }
        if (trim(line).empty()) return;
        const auto& f = split.split(line);
        if (f.size() != 3)
            throw data_error(errc::io_error, "bad events row: " + std::string(line));
        const auto ts = parse_iso8601(f[1]);
        if (!ts) throw data_error(errc::io_error, "bad events timestamp: " + std::string(f[1]));
        out.events.push_back(
            {out.sims.intern(f[0]), out.cells.intern(f[2]), *ts, line_no++});
    });
    return out;
}

struct loaded_subscriber {
    std::string sim_id;
    subscriber_rec rec;
};

inline std::vector<loaded_subscriber> load_subscribers_csv(const std::filesystem::path& path) {
    std::vector<loaded_subscriber> out;
    const std::string text = read_file(path);
    csv_splitter split;
    bool header = true;
    for_each_line(text, [&](std::uint64_t, std::string_view line) {
        if (header) {
            header = false;
            return;
        }
        if (trim(line).empty()) return;
        const auto& f = split.split(line);
        if (f.size() < 5)
            throw data_error(errc::io_error, "bad subscribers row: " + std::string(line));
        loaded_subscriber s;
        s.sim_id = std::string(f[0]);
        if (!f[1].empty()) {
            int v;
            if (!parse_int(f[1], v)) throw data_error(errc::io_error, "bad age: " + std::string(f[1]));
            s.rec.age = static_cast<std::int16_t>(v);
        }
        s.rec.sex = f[2] == "M" ? sex_t::male : f[2] == "F" ? sex_t::female : sex_t::absent;
        s.rec.customer_type = f[3] == "business" ? customer_t::business : customer_t::consumer;
        s.rec.payment_type = f[4] == "postpaid" ? payment_t::postpaid : payment_t::prepaid;
        out.push_back(std::move(s));
    });
    return out;
}

struct loaded_device {
    std::string sim_id;
    std::string tac;
    utc_seconds first_seen;
    utc_seconds last_seen;
    std::uint64_t event_count;
};

inline std::vector<loaded_device> load_devices_csv(const std::filesystem::path& path) {
    std::vector<loaded_device> out;
    const std::string text = read_file(path);
    csv_splitter split;
    bool header = true;
    for_each_line(text, [&](std::uint64_t, std::string_view line) {
        if (header) {
            header = false;
            return;
        }
        if (trim(line).empty()) return;
        const auto& f = split.split(line);
        if (f.size() != 5)
            throw data_error(errc::io_error, "bad devices row: " + std::string(line));
        loaded_device d;
        d.sim_id = std::string(f[0]);
        d.tac = std::string(f[1]);
        const auto fs = parse_iso8601(f[2]), ls = parse_iso8601(f[3]);
        if (!fs || !ls || !parse_int(f[4], d.event_count))
            throw data_error(errc::io_error, "bad devices row: " + std::string(line));
        d.first_seen = *fs;
        d.last_seen = *ls;
        out.push_back(std::move(d));
    });
    return out;
}

} // namespace cdrflow
