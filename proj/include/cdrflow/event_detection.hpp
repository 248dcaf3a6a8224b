// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cdrflow/ingest.hpp"
#include "cdrflow/levels.hpp"
#include "cdrflow/time.hpp"

namespace cdrflow {

// Fixed-width per-site, per-day bin counts, anchored at local midnight.
// Bins are closed-open: an event at exactly a bin boundary opens the bin.
class series_store {
  public:
    series_store(std::uint32_t n_sites, unsigned bin_width_minutes, day_number first_day,
                 std::uint32_t n_days)
        : n_sites_(n_sites),
          bin_width_(bin_width_minutes),
          first_day_(first_day),
          n_days_(n_days) {
        if (bin_width_minutes == 0 || 1440 % bin_width_minutes != 0)
            throw config_error(errc::bad_bin_width, "bin width must divide 1440 minutes");
        bins_per_day_ = 1440 / bin_width_minutes;
        counts_.assign(static_cast<size_t>(n_sites_) * n_days_ * bins_per_day_, 0);
    }

    std::uint32_t n_sites() const { return n_sites_; }
    std::uint32_t n_days() const { return n_days_; }
    unsigned bins_per_day() const { return bins_per_day_; }
    unsigned bin_width_minutes() const { return bin_width_; }
    day_number first_day() const { return first_day_; }
    day_number day_at(std::uint32_t day_idx) const {
        return first_day_ + static_cast<day_number>(day_idx);
    }

    void add(std::uint32_t site, std::uint32_t day_idx, unsigned bin, std::uint32_t n = 1) {
        counts_[index(site, day_idx, bin)] += n;
    }

    std::span<const std::uint32_t> day_series(std::uint32_t site, std::uint32_t day_idx) const {
        return {counts_.data() + index(site, day_idx, 0), bins_per_day_};
    }

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : counts_) t += c;
        return t;
    }

  private:
    size_t index(std::uint32_t site, std::uint32_t day_idx, unsigned bin) const {
        return (static_cast<size_t>(day_idx) * n_sites_ + site) * bins_per_day_ + bin;
    }

    std::uint32_t n_sites_;
    unsigned bin_width_;
    unsigned bins_per_day_ = 0;
    day_number first_day_;
    std::uint32_t n_days_;
    std::vector<std::uint32_t> counts_;
};

// Bins every event that falls inside [first_day, first_day + n_days) local.
inline series_store bin_events(const std::vector<event_rec>& events,
                               const std::vector<std::uint32_t>& site_of_cell,
                               std::uint32_t n_sites, unsigned bin_width_minutes,
                               const local_clock& clock, day_number first_day,
                               std::uint32_t n_days) {
    series_store store(n_sites, bin_width_minutes, first_day, n_days);
    const unsigned width_s = bin_width_minutes * 60;
    for (const auto& e : events) {
        const day_number d = clock.local_day(e.ts);
        if (d < first_day || d >= first_day + static_cast<day_number>(n_days)) continue;
        const unsigned bin = clock.local_second_of_day(e.ts) / width_s;
        store.add(site_of_cell[e.cell], static_cast<std::uint32_t>(d - first_day), bin);
    }
    return store;
}

// Per-bin mean and population standard deviation over the contributing days:
// days of the requested type, target day excluded. The paper's estimator has
// no Bessel correction, so neither does this one.
struct reference_profile {
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<day_number> contributing_days;
};

inline reference_profile build_reference_profile(const series_store& store, std::uint32_t site,
                                                 day_type reference_type, day_number exclude_day,
                                                 const calendar& cal) {
    reference_profile prof;
    for (std::uint32_t di = 0; di < store.n_days(); ++di) {
        const day_number day = store.day_at(di);
        if (day == exclude_day) continue;
        if (cal.type_of(day) != reference_type) continue;
        prof.contributing_days.push_back(day);
    }
    if (prof.contributing_days.size() < 2)
        throw data_error(errc::insufficient_reference,
                         "need >= 2 reference days, have " +
                             std::to_string(prof.contributing_days.size()));
    const unsigned bins = store.bins_per_day();
    prof.mu.assign(bins, 0.0);
    prof.sigma.assign(bins, 0.0);
    const double k = static_cast<double>(prof.contributing_days.size());
    for (const day_number day : prof.contributing_days) {
        const auto series =
            store.day_series(site, static_cast<std::uint32_t>(day - store.first_day()));
        for (unsigned b = 0; b < bins; ++b) prof.mu[b] += series[b];
    }
    for (unsigned b = 0; b < bins; ++b) prof.mu[b] /= k;
    for (const day_number day : prof.contributing_days) {
        const auto series =
            store.day_series(site, static_cast<std::uint32_t>(day - store.first_day()));
        for (unsigned b = 0; b < bins; ++b) {
            const double d = series[b] - prof.mu[b];
            prof.sigma[b] += d * d;
        }
    }
    for (unsigned b = 0; b < bins; ++b) prof.sigma[b] = std::sqrt(prof.sigma[b] / k);
    return prof;
}

// z = (x - mu) / sigma. A zero sigma with x == mu reads as "average" (z = 0);
// a zero sigma with x != mu is a signed infinity carrying a sigma_zero flag.
struct zscore_series {
    std::vector<double> z;
    std::vector<bool> sigma_zero;
};

inline zscore_series zscore(std::span<const std::uint32_t> target,
                            const reference_profile& prof) {
    if (target.size() != prof.mu.size())
        throw data_error(errc::insufficient_reference, "profile does not align with target bins");
    zscore_series out;
    out.z.resize(target.size());
    out.sigma_zero.assign(target.size(), false);
    for (size_t b = 0; b < target.size(); ++b) {
        const double x = target[b];
        if (prof.sigma[b] > 0.0) {
            out.z[b] = (x - prof.mu[b]) / prof.sigma[b];
        } else if (x == prof.mu[b]) {
            out.z[b] = 0.0;
            out.sigma_zero[b] = true;
        } else {
            out.z[b] = x > prof.mu[b] ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
            out.sigma_zero[b] = true;
        }
    }
    return out;
}

// Mean z over a closed-open bin range; instant queries use the single bin
// containing the instant.
inline double interval_mean_z(const zscore_series& zs, size_t first_bin, size_t end_bin) {
    double acc = 0.0;
    size_t n = 0;
    for (size_t b = first_bin; b < end_bin && b < zs.z.size(); ++b) {
        acc += zs.z[b];
        ++n;
    }
    return n ? acc / static_cast<double>(n) : 0.0;
}

struct peak_window {
    unsigned first_bin;
    unsigned last_bin; // inclusive
    double max_z;
};

// Maximal runs of bins with z >= min_z; sub-threshold gaps up to
// max_gap_bins long are bridged when another qualifying bin follows.
inline std::vector<peak_window> detect_peaks(const zscore_series& zs, double min_z = 2.0,
                                             unsigned max_gap_bins = 1) {
    std::vector<peak_window> peaks;
    bool open = false;
    peak_window cur{0, 0, 0.0};
    for (unsigned b = 0; b < zs.z.size(); ++b) {
        if (!(zs.z[b] >= min_z)) continue;
        if (open && b - cur.last_bin - 1 <= max_gap_bins) {
            cur.last_bin = b;
            cur.max_z = std::max(cur.max_z, zs.z[b]);
        } else {
            if (open) peaks.push_back(cur);
            cur = {b, b, zs.z[b]};
            open = true;
        }
    }
    if (open) peaks.push_back(cur);
    return peaks;
}

} // namespace cdrflow
