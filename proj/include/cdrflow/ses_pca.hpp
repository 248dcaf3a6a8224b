// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cdrflow/cohorts.hpp"
#include "cdrflow/csv.hpp"
#include "cdrflow/mobility.hpp"

namespace cdrflow {

// ---------------------------------------------------------------------------
// Bin table
// ---------------------------------------------------------------------------

struct bin_config {
    int age_min = 20, age_max = 80, age_step = 5;          // 12 bands
    double price_min = 0.0, price_max = 700.0, price_step = 100.0; // 7 bands
    double gyr_min = 0.5, gyr_max = 20.0, gyr_step = 0.5;  // 39 interior + clamp = 40
    double ent_min = 0.05, ent_max = 1.00;
    unsigned ent_bins = 20;
    bool normalize_per_metric_block = true; // false: normalize each column instead

    unsigned age_bands() const { return static_cast<unsigned>((age_max - age_min) / age_step); }
    unsigned price_bands() const {
        return static_cast<unsigned>((price_max - price_min) / price_step);
    }
    unsigned gyr_bins() const {
        return static_cast<unsigned>((gyr_max - gyr_min) / gyr_step) + 1; // top clamp bin
    }
    unsigned columns() const { return gyr_bins() + ent_bins; }
};

struct group_key {
    std::uint8_t age_band = 0;
    std::uint8_t price_band = 0;
    payment_t payment = payment_t::prepaid;
    day_type scope = day_type::workday;

    friend bool operator<(const group_key& a, const group_key& b) {
        // weekend rows append after the full workday table
        if (a.scope != b.scope) return a.scope < b.scope;
        if (a.age_band != b.age_band) return a.age_band < b.age_band;
        if (a.price_band != b.price_band) return a.price_band < b.price_band;
        return a.payment < b.payment;
    }
    friend bool operator==(const group_key&, const group_key&) = default;
};

struct bin_row {
    group_key key;
    std::vector<double> columns; // gyration block then entropy block
    double weight = 0.0;         // subscriber count
};

struct bin_table {
    bin_config config;
    std::vector<bin_row> rows; // sorted by key; zero-subscriber groups omitted
    std::uint64_t skipped_missing_age = 0;
    std::uint64_t skipped_missing_price = 0;
    std::uint64_t clamped_age = 0;
    std::uint64_t clamped_price = 0;
    std::uint64_t clamped_gyration = 0;
    std::uint64_t clamped_entropy = 0;
};

// Builds the grouped 60-column histogram table feeding the PCA. Each sim
// contributes one gyration count and one entropy count per day type it has
// mobility for; sims lacking age or phone price are skipped and counted.
template <typename AgeFn, typename PaymentFn, typename PriceFn>
bin_table assemble_bin_table(const std::vector<mobility_record>& mobility, AgeFn&& age_of,
                             PaymentFn&& payment_of, PriceFn&& price_of,
                             const bin_config& cfg = {}) {
    bin_table table;
    table.config = cfg;
    const unsigned n_gyr = cfg.gyr_bins();
    const unsigned n_col = cfg.columns();
    std::map<group_key, std::pair<std::vector<std::uint64_t>, std::uint64_t>> groups;

    for (const auto& rec : mobility) {
        if (rec.scope == day_scope::whole_period) continue;
        const std::optional<int> age = age_of(rec.sim);
        if (!age) {
            table.skipped_missing_age++;
            continue;
        }
        const std::optional<double> price = price_of(rec.sim);
        if (!price) {
            table.skipped_missing_price++;
            continue;
        }
        group_key key;
        key.scope = rec.scope == day_scope::workday ? day_type::workday : day_type::weekend;
        key.payment = payment_of(rec.sim);

        int aband = (*age - cfg.age_min) / cfg.age_step;
        if (*age < cfg.age_min) {
            aband = 0;
            table.clamped_age++;
        } else if (aband >= static_cast<int>(cfg.age_bands())) {
            aband = static_cast<int>(cfg.age_bands()) - 1;
            table.clamped_age++;
        }
        key.age_band = static_cast<std::uint8_t>(aband);

        int pband = static_cast<int>((*price - cfg.price_min) / cfg.price_step);
        if (*price < cfg.price_min) {
            pband = 0;
            table.clamped_price++;
        } else if (pband >= static_cast<int>(cfg.price_bands())) {
            pband = static_cast<int>(cfg.price_bands()) - 1;
            table.clamped_price++;
        }
        key.price_band = static_cast<std::uint8_t>(pband);

        int gbin = static_cast<int>(std::floor((rec.gyration_km - cfg.gyr_min) / cfg.gyr_step));
        if (rec.gyration_km < cfg.gyr_min) {
            gbin = 0; // below-range mass folds into the first bin
            table.clamped_gyration++;
        } else if (gbin >= static_cast<int>(n_gyr) - 1) {
            if (rec.gyration_km > cfg.gyr_max) table.clamped_gyration++;
            gbin = static_cast<int>(n_gyr) - 1; // top bin doubles as > max clamp
        }

        const double ent_step = (cfg.ent_max - cfg.ent_min) / cfg.ent_bins;
        int ebin = static_cast<int>(std::floor((rec.entropy - cfg.ent_min) / ent_step));
        if (rec.entropy < cfg.ent_min) {
            ebin = 0;
            table.clamped_entropy++;
        } else if (ebin >= static_cast<int>(cfg.ent_bins)) {
            ebin = static_cast<int>(cfg.ent_bins) - 1; // entropy tops out at 1.0, inclusive
        }

        auto& [hist, count] = groups[key];
        if (hist.empty()) hist.assign(n_col, 0);
        hist[static_cast<size_t>(gbin)]++;
        hist[n_gyr + static_cast<size_t>(ebin)]++;
        count++;
    }

    if (groups.empty()) throw data_error(errc::empty_table, "no sims eligible for the bin table");

    for (auto& [key, data] : groups) {
        auto& [hist, count] = data;
        bin_row row;
        row.key = key;
        row.weight = static_cast<double>(count);
        row.columns.assign(hist.begin(), hist.end());
        if (cfg.normalize_per_metric_block) {
            double gsum = 0.0, esum = 0.0;
            for (unsigned c = 0; c < n_gyr; ++c) gsum += row.columns[c];
            for (unsigned c = n_gyr; c < n_col; ++c) esum += row.columns[c];
            if (gsum > 0)
                for (unsigned c = 0; c < n_gyr; ++c) row.columns[c] /= gsum;
            if (esum > 0)
                for (unsigned c = n_gyr; c < n_col; ++c) row.columns[c] /= esum;
        }
        table.rows.push_back(std::move(row));
    }
    if (!cfg.normalize_per_metric_block) {
        // column-wise normalization across rows (the alternative reading)
        for (unsigned c = 0; c < n_col; ++c) {
            double sum = 0.0;
            for (const auto& r : table.rows) sum += r.columns[c];
            if (sum > 0)
                for (auto& r : table.rows) r.columns[c] /= sum;
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Weighted PCA via cyclic Jacobi eigendecomposition
// ---------------------------------------------------------------------------

struct pca_result {
    std::vector<std::vector<double>> components;  // n_components x dim, orthonormal
    std::vector<double> explained;                // all dim fractions, descending
    std::vector<std::array<double, 2>> projection; // per input row
    std::vector<double> mean;                     // weighted column means
};

namespace detail {

// Cyclic Jacobi with a fixed threshold; deterministic sweep order gives
// bit-stable eigenpairs for identical input.
inline void jacobi_eigen(std::vector<double>& a, size_t n, std::vector<double>& vecs,
                         double tol = 1e-12) {
    vecs.assign(n * n, 0.0);
    for (size_t i = 0; i < n; ++i) vecs[i * n + i] = 1.0;
    double scale = 0.0;
    for (size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
    if (scale == 0.0) scale = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (size_t p = 0; p < n; ++p)
            for (size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a[p * n + q]));
        if (off <= tol * scale) break;
        for (size_t p = 0; p < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) <= tol * scale * 1e-3) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (size_t k = 0; k < n; ++k) {
                    const double vkp = vecs[k * n + p], vkq = vecs[k * n + q];
                    vecs[k * n + p] = c * vkp - s * vkq;
                    vecs[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
}

} // namespace detail

// Subscriber-weighted PCA. Covariance uses weight fractions, so duplicating
// a row while halving its weight changes nothing. Components carry a fixed
// sign convention: the largest-magnitude coordinate is positive.
inline pca_result weighted_pca(const std::vector<bin_row>& rows, unsigned n_components = 2) {
    size_t n_pos = 0;
    for (const auto& r : rows)
        if (r.weight > 0) ++n_pos;
    if (n_pos < 2) throw data_error(errc::degenerate_rank, "need >= 2 rows with positive weight");
    const size_t dim = rows.front().columns.size();
    for (const auto& r : rows)
        if (r.columns.size() != dim)
            throw data_error(errc::degenerate_rank, "ragged bin table");

    double wsum = 0.0;
    for (const auto& r : rows) wsum += r.weight;
    pca_result res;
    res.mean.assign(dim, 0.0);
    for (const auto& r : rows)
        for (size_t c = 0; c < dim; ++c) res.mean[c] += r.weight * r.columns[c];
    for (auto& m : res.mean) m /= wsum;

    std::vector<double> cov(dim * dim, 0.0);
    std::vector<double> centered(dim);
    for (const auto& r : rows) {
        if (r.weight <= 0) continue;
        for (size_t c = 0; c < dim; ++c) centered[c] = r.columns[c] - res.mean[c];
        const double w = r.weight / wsum;
        for (size_t i = 0; i < dim; ++i) {
            const double wi = w * centered[i];
            for (size_t j = i; j < dim; ++j) cov[i * dim + j] += wi * centered[j];
        }
    }
    for (size_t i = 0; i < dim; ++i)
        for (size_t j = 0; j < i; ++j) cov[i * dim + j] = cov[j * dim + i];

    double trace = 0.0;
    for (size_t i = 0; i < dim; ++i) trace += cov[i * dim + i];
    if (!(trace > 0.0))
        throw data_error(errc::degenerate_rank, "bin table has zero variance");

    std::vector<double> vecs;
    detail::jacobi_eigen(cov, dim, vecs);

    std::vector<std::pair<double, size_t>> eig(dim);
    for (size_t i = 0; i < dim; ++i) eig[i] = {std::max(cov[i * dim + i], 0.0), i};
    std::stable_sort(eig.begin(), eig.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;
    });

    res.explained.resize(dim);
    for (size_t i = 0; i < dim; ++i) res.explained[i] = eig[i].first / trace;

    res.components.resize(n_components);
    for (unsigned k = 0; k < n_components; ++k) {
        auto& comp = res.components[k];
        comp.resize(dim);
        const size_t col = eig[k].second;
        for (size_t i = 0; i < dim; ++i) comp[i] = vecs[i * dim + col];
        size_t arg = 0;
        for (size_t i = 1; i < dim; ++i)
            if (std::abs(comp[i]) > std::abs(comp[arg])) arg = i;
        if (comp[arg] < 0)
            for (auto& v : comp) v = -v;
    }

    res.projection.resize(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        for (unsigned k = 0; k < std::min<unsigned>(n_components, 2); ++k) {
            double acc = 0.0;
            for (size_t c = 0; c < dim; ++c)
                acc += (rows[r].columns[c] - res.mean[c]) * res.components[k][c];
            res.projection[r][k] = acc;
        }
    }
    return res;
}

struct pareto_row {
    unsigned rank;
    double fraction;
    double cumulative;
};

inline std::vector<pareto_row> pareto(const pca_result& res) {
    std::vector<pareto_row> out;
    out.reserve(res.explained.size());
    double cum = 0.0;
    for (size_t i = 0; i < res.explained.size(); ++i) {
        cum += res.explained[i];
        out.push_back({static_cast<unsigned>(i + 1), res.explained[i], cum});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline std::string group_key_label(const group_key& k, const bin_config& cfg) {
    const int age_lo = cfg.age_min + k.age_band * cfg.age_step;
    const double price_lo = cfg.price_min + k.price_band * cfg.price_step;
    std::string s = "age" + std::to_string(age_lo) + "-" +
                    std::to_string(age_lo + cfg.age_step - 1) + "_eur" +
                    std::to_string(static_cast<int>(price_lo)) + "-" +
                    std::to_string(static_cast<int>(price_lo + cfg.price_step)) + "_" +
                    payment_name(k.payment) + "_" + day_type_name(k.scope);
    return s;
}

inline void write_bin_table_csv(const bin_table& t, const std::filesystem::path& path) {
    csv_writer w(path);
    std::string header = "group,age_band,price_band,payment_type,day_type,weight";
    const unsigned n_gyr = t.config.gyr_bins();
    for (unsigned c = 0; c < t.config.columns(); ++c) {
        header += ',';
        header += c < n_gyr ? "rg" + std::to_string(c) : "ent" + std::to_string(c - n_gyr);
    }
    header += '\n';
    w.raw(header);
    for (const auto& r : t.rows) {
        w.field(group_key_label(r.key, t.config));
        w.field_int(r.key.age_band);
        w.field_int(r.key.price_band);
        w.field(payment_name(r.key.payment));
        w.field(day_type_name(r.key.scope));
        w.field_double(r.weight);
        for (const double v : r.columns) w.field_double(v);
        w.end_row();
    }
    w.commit();
}

inline void write_projection_csv(const bin_table& t, const pca_result& res,
                                 const std::filesystem::path& path) {
    csv_writer w(path);
    w.raw("group,age_band,price_band,payment_type,day_type,pc1,pc2,weight\n");
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        w.field(group_key_label(r.key, t.config));
        w.field_int(r.key.age_band);
        w.field_int(r.key.price_band);
        w.field(payment_name(r.key.payment));
        w.field(day_type_name(r.key.scope));
        w.field_double(res.projection[i][0]);
        w.field_double(res.projection[i][1]);
        w.field_double(r.weight);
        w.end_row();
    }
    w.commit();
}

inline void write_pareto_csv(const std::vector<pareto_row>& rows,
                             const std::filesystem::path& path) {
    csv_writer w(path);
    w.raw("component,variance_fraction,cumulative\n");
    for (const auto& r : rows) {
        w.field_int(r.rank);
        w.field_double(r.fraction);
        w.field_double(r.cumulative);
        w.end_row();
    }
    w.commit();
}

} // namespace cdrflow
