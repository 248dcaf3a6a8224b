// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cdrflow/common.hpp"
#include "cdrflow/csv.hpp"
#include "cdrflow/parallel.hpp"

namespace cdrflow {

// First 8 digits of an IMEI. Shorter or non-digit input is a data error.
inline std::string_view extract_tac(std::string_view imei) {
    if (imei.size() < 8 || !all_digits(imei))
        throw data_error(errc::bad_imei, "'" + std::string(imei) + "'");
    return imei.substr(0, 8);
}

// ---------------------------------------------------------------------------
// String matching primitives
// ---------------------------------------------------------------------------

// Classic two-row Levenshtein with common prefix/suffix stripping.
inline size_t levenshtein(std::string_view a, std::string_view b) {
    while (!a.empty() && !b.empty() && a.front() == b.front()) {
        a.remove_prefix(1);
        b.remove_prefix(1);
    }
    while (!a.empty() && !b.empty() && a.back() == b.back()) {
        a.remove_suffix(1);
        b.remove_suffix(1);
    }
    if (a.size() > b.size()) std::swap(a, b);
    if (a.empty()) return b.size();
    std::vector<size_t> row(a.size() + 1);
    for (size_t i = 0; i <= a.size(); ++i) row[i] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
        size_t diag = row[0];
        row[0] = j;
        for (size_t i = 1; i <= a.size(); ++i) {
            const size_t save = row[i];
            row[i] = std::min({row[i] + 1, row[i - 1] + 1, diag + (a[i - 1] != b[j - 1])});
            diag = save;
        }
    }
    return row[a.size()];
}

// Similarity on a 0-100 scale: 100 * (1 - dist / max length), rounded.
// 100 is reserved for exact equality; near-misses cap at 99 so a score of
// 100 always means the normalized strings were identical.
inline int levenshtein_ratio(std::string_view a, std::string_view b) {
    if (a == b) return 100;
    const size_t m = std::max(a.size(), b.size());
    if (m == 0) return 100;
    const size_t d = levenshtein(a, b);
    const int r = static_cast<int>(std::llround(100.0 * (1.0 - static_cast<double>(d) / static_cast<double>(m))));
    return std::min(r, 99);
}

// ---------------------------------------------------------------------------
// Vendor normalization
// ---------------------------------------------------------------------------

// Case-folds, collapses whitespace and applies the rename map. Defaults
// cover the RIM -> BlackBerry rename and the Nokia/Microsoft alias group
// (canonical form "nokia"). Idempotent as long as canonical names are not
// themselves alias keys.
class vendor_normalizer {
  public:
    vendor_normalizer() : aliases_{{"rim", "blackberry"}, {"microsoft", "nokia"}} {}
    explicit vendor_normalizer(std::map<std::string, std::string> aliases)
        : aliases_(std::move(aliases)) {}

    std::string operator()(std::string_view name) const {
        std::string folded = fold_name(name);
        auto it = aliases_.find(folded);
        return it == aliases_.end() ? folded : it->second;
    }

    const std::map<std::string, std::string>& aliases() const { return aliases_; }

  private:
    std::map<std::string, std::string> aliases_;
};

// ---------------------------------------------------------------------------
// Catalog rows
// ---------------------------------------------------------------------------

struct year_month {
    int year = 0;
    int month = 1; // 1-12

    friend bool operator==(const year_month&, const year_month&) = default;
    friend auto operator<=>(const year_month&, const year_month&) = default;
};

inline std::optional<year_month> parse_year_month(std::string_view s) {
    // accepts "YYYY-MM" or separate year/month handled by callers
    if (s.size() != 7 || s[4] != '-') return std::nullopt;
    year_month ym;
    if (!parse_int(s.substr(0, 4), ym.year) || !parse_int(s.substr(5, 2), ym.month))
        return std::nullopt;
    if (ym.month < 1 || ym.month > 12) return std::nullopt;
    return ym;
}

// Whole months from release to reference (June 2016 by default).
inline int relative_age_months(year_month release, year_month reference = {2016, 6}) {
    const int diff = (reference.year - release.year) * 12 + (reference.month - release.month);
    if (diff < 0)
        throw data_error(errc::future_release,
                         "release " + std::to_string(release.year) + "-" +
                             std::to_string(release.month) + " after reference");
    return diff;
}

struct tac_catalog_row {
    std::string tac;
    std::string vendor;
    std::string family;
    std::string model;
    std::optional<bool> non_phone_hint;
};

struct spec_catalog_row {
    std::string brand;
    std::string model;
    std::optional<double> price_eur;
    std::optional<year_month> release;
    std::string os;
};

enum class identifier_kind : std::uint8_t {
    vendor_family = 0,
    vendor_model = 1,
    vendor_family_model = 2,
};

inline const char* identifier_kind_name(identifier_kind k) {
    switch (k) {
    case identifier_kind::vendor_family: return "vendor_family";
    case identifier_kind::vendor_model: return "vendor_model";
    case identifier_kind::vendor_family_model: return "vendor_family_model";
    }
    return "";
}

struct composite_id {
    std::string key;
    identifier_kind kind;
};

// The three composite identifiers of a catalog row. The three-field variant
// drops repeated tokens, which is where family/model duplication collapses
// (e.g. the Lumia rows); duplicate keys within the triple are removed.
inline std::vector<composite_id> build_identifiers(const tac_catalog_row& row,
                                                   const vendor_normalizer& vendors) {
    const std::string vendor = vendors(row.vendor);
    const std::string family = fold_name(row.family);
    const std::string model = fold_name(row.model);
    std::vector<composite_id> out;
    if (vendor.empty() && family.empty() && model.empty()) return out;

    auto add = [&](std::string key, identifier_kind kind) {
        for (const auto& existing : out)
            if (existing.key == key) return;
        out.push_back({std::move(key), kind});
    };

    if (!family.empty()) add(vendor + " " + family, identifier_kind::vendor_family);
    if (!model.empty()) add(vendor + " " + model, identifier_kind::vendor_model);
    if (!family.empty() && !model.empty()) {
        std::set<std::string_view> seen;
        std::string key;
        const std::string joined = vendor + " " + family + " " + model;
        size_t pos = 0;
        while (pos < joined.size()) {
            size_t sp = joined.find(' ', pos);
            if (sp == std::string::npos) sp = joined.size();
            const std::string_view tok(joined.data() + pos, sp - pos);
            if (!tok.empty() && seen.insert(tok).second) {
                if (!key.empty()) key.push_back(' ');
                key.append(tok);
            }
            pos = sp + 1;
        }
        add(std::move(key), identifier_kind::vendor_family_model);
    }
    if (out.empty() && !vendor.empty()) add(vendor, identifier_kind::vendor_family);
    return out;
}

struct tac_enrichment {
    std::string tac;
    bool matched = false;
    int match_score = 0;
    identifier_kind matched_identifier = identifier_kind::vendor_family;
    std::string spec_brand;
    std::string spec_model;
    std::optional<double> price_eur;
    std::optional<year_month> release;
    std::string os;
    bool non_phone = false;
};

struct fuse_options {
    int cutoff = 90;
    vendor_normalizer vendors{};
    std::set<std::string> tac_blocklist; // extra non-phone TACs
    // age-weighted price hook, off by default: price *= (1-rate)^years
    double depreciation_rate_per_year = 0.0;
    year_month reference_month{2016, 6};
};

namespace detail {

// Upper bound on the ratio from the length difference alone; the real
// distance can only be larger, so scores below cutoff are skipped cheaply.
inline bool can_reach(int cutoff, size_t la, size_t lb) {
    const size_t m = std::max(la, lb);
    if (m == 0) return true;
    const size_t dmin = la > lb ? la - lb : lb - la;
    if (dmin == 0) return true;
    const int bound = static_cast<int>(
        std::llround(100.0 * (1.0 - static_cast<double>(dmin) / static_cast<double>(m))));
    return std::min(bound, 99) >= cutoff;
}

} // namespace detail

// Fuses the TAC catalog with the spec catalog. For every TAC the best
// composite/spec pairing at or above the cutoff wins; ties break by higher
// score, longer composite, lexicographic spec key, then identifier kind, so
// the result is independent of row order in either input.
inline std::vector<tac_enrichment> fuse_catalogs(const std::vector<tac_catalog_row>& tac_catalog,
                                                 const std::vector<spec_catalog_row>& spec_catalog,
                                                 const fuse_options& opts = {}) {
    struct spec_entry {
        std::string key;
        size_t index;
    };
    std::vector<spec_entry> specs;
    specs.reserve(spec_catalog.size());
    {
        std::set<std::string> seen_keys;
        std::set<std::string> seen_tacs;
        for (size_t i = 0; i < spec_catalog.size(); ++i) {
            std::string key = opts.vendors(spec_catalog[i].brand);
            const std::string model = fold_name(spec_catalog[i].model);
            if (!model.empty()) key += " " + model;
            if (!seen_keys.insert(key).second)
                throw data_error(errc::bad_config,
                                 "duplicate spec catalog key after normalization: " + key);
            specs.push_back({std::move(key), i});
        }
        for (const auto& row : tac_catalog)
            if (!seen_tacs.insert(row.tac).second)
                throw data_error(errc::bad_config, "duplicate tac in catalog: " + row.tac);
    }
    // sorted spec order makes the lexicographic tiebreak a first-hit rule
    std::sort(specs.begin(), specs.end(),
              [](const spec_entry& a, const spec_entry& b) { return a.key < b.key; });

    std::vector<size_t> order(tac_catalog.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return tac_catalog[a].tac < tac_catalog[b].tac; });

    auto fuse_one = [&](size_t oi) {
        const auto& row = tac_catalog[order[oi]];
        tac_enrichment e;
        e.tac = row.tac;
        e.non_phone = (row.non_phone_hint && *row.non_phone_hint) ||
                      opts.tac_blocklist.count(row.tac) > 0;
        const auto composites = build_identifiers(row, opts.vendors);
        int best_score = -1;
        size_t best_len = 0;
        const spec_entry* best_spec = nullptr;
        identifier_kind best_kind = identifier_kind::vendor_family;
        for (const auto& comp : composites) {
            for (const auto& spec : specs) {
                if (!detail::can_reach(opts.cutoff, comp.key.size(), spec.key.size())) continue;
                const int score = levenshtein_ratio(comp.key, spec.key);
                if (score < opts.cutoff) continue;
                const bool better =
                    score > best_score ||
                    (score == best_score &&
                     (comp.key.size() > best_len ||
                      (comp.key.size() == best_len &&
                       (best_spec == nullptr || spec.key < best_spec->key ||
                        (spec.key == best_spec->key && comp.kind < best_kind)))));
                if (better) {
                    best_score = score;
                    best_len = comp.key.size();
                    best_spec = &spec;
                    best_kind = comp.kind;
                }
            }
        }
        if (best_spec) {
            const auto& s = spec_catalog[best_spec->index];
            e.matched = true;
            e.match_score = best_score;
            e.matched_identifier = best_kind;
            e.spec_brand = s.brand;
            e.spec_model = s.model;
            e.price_eur = s.price_eur;
            e.release = s.release;
            e.os = s.os;
            if (opts.depreciation_rate_per_year > 0.0 && e.price_eur && e.release &&
                *e.release <= opts.reference_month) {
                const double years =
                    relative_age_months(*e.release, opts.reference_month) / 12.0;
                e.price_eur = *e.price_eur *
                              std::pow(1.0 - opts.depreciation_rate_per_year, years);
            }
        }
        return e;
    };

    return parallel_map<tac_enrichment>(order.size(), fuse_one);
}

// ---------------------------------------------------------------------------
// Catalog file I/O
// ---------------------------------------------------------------------------

inline std::vector<tac_catalog_row> load_tac_catalog(const std::filesystem::path& path) {
    std::vector<tac_catalog_row> out;
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
        if (f.size() < 4) throw data_error(errc::io_error, "bad tac catalog row: " + std::string(line));
        tac_catalog_row row;
        row.tac = std::string(trim(f[0]));
        if (!all_digits(row.tac) || row.tac.size() != 8)
            throw data_error(errc::io_error, "bad tac in catalog: " + row.tac);
        row.vendor = std::string(f[1]);
        row.family = std::string(f[2]);
        row.model = std::string(f[3]);
        if (f.size() > 4) {
            const auto hint = trim(f[4]);
            if (hint == "1" || hint == "true")
                row.non_phone_hint = true;
            else if (hint == "0" || hint == "false")
                row.non_phone_hint = false;
        }
        out.push_back(std::move(row));
    });
    return out;
}

inline std::vector<spec_catalog_row> load_spec_catalog(const std::filesystem::path& path) {
    std::vector<spec_catalog_row> out;
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
        if (f.size() < 5) throw data_error(errc::io_error, "bad spec catalog row: " + std::string(line));
        spec_catalog_row row;
        row.brand = std::string(f[0]);
        row.model = std::string(f[1]);
        if (!trim(f[2]).empty()) {
            double price;
            if (!parse_double(trim(f[2]), price) || price <= 0)
                throw data_error(errc::io_error, "bad price: " + std::string(f[2]));
            row.price_eur = price;
        }
        const auto ys = trim(f[3]), ms = trim(f[4]);
        if (!ys.empty() && !ms.empty()) {
            year_month ym;
            if (!parse_int(ys, ym.year) || !parse_int(ms, ym.month) || ym.month < 1 || ym.month > 12)
                throw data_error(errc::io_error, "bad release date: " + std::string(line));
            row.release = ym;
        }
        if (f.size() > 5) row.os = std::string(f[5]);
        out.push_back(std::move(row));
    });
    return out;
}

inline std::set<std::string> load_tac_blocklist(const std::filesystem::path& path) {
    std::set<std::string> out;
    const std::string text = read_file(path);
    for_each_line(text, [&](std::uint64_t, std::string_view line) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') return;
        out.insert(std::string(t));
    });
    return out;
}

inline void write_enrichment_csv(const std::vector<tac_enrichment>& rows,
                                 const std::filesystem::path& path) {
    csv_writer w(path);
    w.raw("tac,matched,match_score,matched_identifier,brand,model,price_eur,release_year,"
          "release_month,os,non_phone\n");
    for (const auto& e : rows) {
        w.field(e.tac);
        w.field_int(e.matched ? 1 : 0);
        w.field_int(e.match_score);
        w.field(e.matched ? identifier_kind_name(e.matched_identifier) : "");
        w.field(e.spec_brand);
        w.field(e.spec_model);
        if (e.price_eur)
            w.field_double(*e.price_eur);
        else
            w.field("");
        if (e.release) {
            w.field_int(e.release->year);
            w.field_int(e.release->month);
        } else {
            w.field("");
            w.field("");
        }
        w.field(e.os);
        w.field_int(e.non_phone ? 1 : 0);
        w.end_row();
    }
    w.commit();
}

inline std::vector<tac_enrichment> load_enrichment_csv(const std::filesystem::path& path) {
    std::vector<tac_enrichment> out;
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
        if (f.size() < 11) throw data_error(errc::io_error, "bad enrichment row: " + std::string(line));
        tac_enrichment e;
        e.tac = std::string(f[0]);
        e.matched = f[1] == "1";
        parse_int(f[2], e.match_score);
        for (auto kind : {identifier_kind::vendor_family, identifier_kind::vendor_model,
                          identifier_kind::vendor_family_model})
            if (f[3] == identifier_kind_name(kind)) e.matched_identifier = kind;
        e.spec_brand = std::string(f[4]);
        e.spec_model = std::string(f[5]);
        if (!f[6].empty()) {
            double price;
            if (parse_double(f[6], price)) e.price_eur = price;
        }
        if (!f[7].empty() && !f[8].empty()) {
            year_month ym;
            if (parse_int(f[7], ym.year) && parse_int(f[8], ym.month)) e.release = ym;
        }
        e.os = std::string(f[9]);
        e.non_phone = f[10] == "1";
        out.push_back(std::move(e));
    });
    return out;
}

} // namespace cdrflow
