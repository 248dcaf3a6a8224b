// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "cdrflow/rng.hpp"
#include "cdrflow/ses_pca.hpp"
#include "oracles.hpp"

using namespace cdrflow;

namespace {

mobility_record rec(std::uint32_t sim, day_scope scope, double rg, double ent) {
    mobility_record m;
    m.sim = sim;
    m.scope = scope;
    m.gyration_km = rg;
    m.entropy = ent;
    m.n_events = 10;
    m.n_locations = 3;
    return m;
}

std::vector<bin_row> random_rows(rng& r, size_t n_rows, size_t dim) {
    std::vector<bin_row> rows(n_rows);
    for (auto& row : rows) {
        row.columns.resize(dim);
        for (auto& c : row.columns) c = r.uniform();
        row.weight = 1.0 + r.below(50);
    }
    return rows;
}

} // namespace

TEST_CASE("bin table places gyration and entropy in the right bins") {
    std::vector<mobility_record> mob = {
        rec(0, day_scope::workday, 0.9, 0.5),
        rec(1, day_scope::workday, 1.2, 0.5),
    };
    auto age = [](std::uint32_t) { return std::optional<int>(34); };
    auto pay = [](std::uint32_t) { return payment_t::postpaid; };
    auto price = [](std::uint32_t) { return std::optional<double>(250.0); };
    const auto table = assemble_bin_table(mob, age, pay, price);
    REQUIRE(table.rows.size() == 1);
    const auto& row = table.rows[0];
    CHECK(row.weight == 2.0);
    CHECK(table.config.columns() == 60);
    // 0.9 km -> bin 0 [0.5, 1.0); 1.2 km -> bin 1 [1.0, 1.5); normalized to 0.5 each
    CHECK(row.columns[0] == 0.5);
    CHECK(row.columns[1] == 0.5);
    double gyr_sum = 0.0, ent_sum = 0.0;
    for (unsigned c = 0; c < 40; ++c) gyr_sum += row.columns[c];
    for (unsigned c = 40; c < 60; ++c) ent_sum += row.columns[c];
    CHECK(gyr_sum == Catch::Approx(1.0).margin(1e-12));
    CHECK(ent_sum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("bin table clamps out-of-range values and counts them") {
    std::vector<mobility_record> mob = {
        rec(0, day_scope::workday, 25.0, 1.0),  // gyration above 20 km
        rec(1, day_scope::workday, 0.1, 0.01),  // both below range
    };
    auto age = [](std::uint32_t) { return std::optional<int>(34); };
    auto pay = [](std::uint32_t) { return payment_t::prepaid; };
    auto price = [](std::uint32_t) { return std::optional<double>(50.0); };
    const auto table = assemble_bin_table(mob, age, pay, price);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].columns[39] == 0.5); // clamp bin
    CHECK(table.rows[0].columns[0] == 0.5);
    CHECK(table.clamped_gyration == 2);
    CHECK(table.clamped_entropy == 1);
    // entropy 1.0 lands in the last bin, not past it
    CHECK(table.rows[0].columns[40 + 19] == 0.5);
}

TEST_CASE("bin table groups by age, price, payment and day type") {
    std::vector<mobility_record> mob = {
        rec(0, day_scope::workday, 2.0, 0.4), rec(0, day_scope::weekend, 1.0, 0.2),
        rec(1, day_scope::workday, 2.0, 0.4), // different price band
        rec(2, day_scope::workday, 2.0, 0.4), // missing age -> skipped
        rec(3, day_scope::workday, 2.0, 0.4), // missing price -> skipped
    };
    auto age = [](std::uint32_t sim) {
        return sim == 2 ? std::optional<int>{} : std::optional<int>(40);
    };
    auto pay = [](std::uint32_t) { return payment_t::postpaid; };
    auto price = [](std::uint32_t sim) {
        if (sim == 3) return std::optional<double>{};
        return std::optional<double>(sim == 1 ? 650.0 : 150.0);
    };
    const auto table = assemble_bin_table(mob, age, pay, price);
    CHECK(table.rows.size() == 3);
    CHECK(table.skipped_missing_age == 1);
    CHECK(table.skipped_missing_price == 1);
    // weekend rows append after all workday rows
    CHECK(table.rows.front().key.scope == day_type::workday);
    CHECK(table.rows.back().key.scope == day_type::weekend);
}

TEST_CASE("weighted pca matches the max-pivot oracle") {
    rng r(4242);
    const auto rows = random_rows(r, 24, 12);
    const auto res = weighted_pca(rows, 2);

    const auto cov = oracles::weighted_covariance(rows);
    const auto oracle = oracles::jacobi_max_pivot(cov);
    double trace = 0.0;
    for (size_t i = 0; i < cov.size(); ++i) trace += cov[i][i];

    for (int k = 0; k < 2; ++k) {
        CHECK(res.explained[static_cast<size_t>(k)] ==
              Catch::Approx(oracle.values[static_cast<size_t>(k)] / trace).margin(1e-9));
        CHECK(oracles::alignment(res.components[static_cast<size_t>(k)],
                                 oracle.vectors[static_cast<size_t>(k)]) ==
              Catch::Approx(1.0).margin(1e-9));
    }

    double sum = 0.0;
    for (double f : res.explained) sum += f;
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));

    SECTION("components are orthonormal") {
        double n0 = 0, n1 = 0, dot = 0;
        for (size_t i = 0; i < res.components[0].size(); ++i) {
            n0 += res.components[0][i] * res.components[0][i];
            n1 += res.components[1][i] * res.components[1][i];
            dot += res.components[0][i] * res.components[1][i];
        }
        CHECK(n0 == Catch::Approx(1.0).margin(1e-9));
        CHECK(n1 == Catch::Approx(1.0).margin(1e-9));
        CHECK(dot == Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("pca invariances") {
    rng r(77);
    auto rows = random_rows(r, 16, 8);
    const auto base = weighted_pca(rows, 2);

    SECTION("row permutation") {
        auto shuffled = rows;
        std::reverse(shuffled.begin(), shuffled.end());
        const auto res = weighted_pca(shuffled, 2);
        for (int k = 0; k < 2; ++k) {
            CHECK(res.explained[static_cast<size_t>(k)] ==
                  Catch::Approx(base.explained[static_cast<size_t>(k)]).margin(1e-12));
            CHECK(oracles::alignment(res.components[static_cast<size_t>(k)],
                                     base.components[static_cast<size_t>(k)]) ==
                  Catch::Approx(1.0).margin(1e-12));
        }
        // projections follow the rows
        for (size_t i = 0; i < rows.size(); ++i) {
            CHECK(res.projection[i][0] ==
                  Catch::Approx(base.projection[rows.size() - 1 - i][0]).margin(1e-9));
        }
    }
    SECTION("duplicating a row while halving its weight") {
        auto dup = rows;
        dup[0].weight /= 2.0;
        dup.push_back(dup[0]);
        const auto res = weighted_pca(dup, 2);
        for (int k = 0; k < 2; ++k)
            CHECK(res.explained[static_cast<size_t>(k)] ==
                  Catch::Approx(base.explained[static_cast<size_t>(k)]).margin(1e-12));
    }
}

TEST_CASE("collinear rows give PC1 fraction 1") {
    // rows on a line through 60-space
    std::vector<bin_row> rows;
    std::vector<double> dir(60), origin(60);
    rng r(5);
    for (auto& d : dir) d = r.uniform(-1.0, 1.0);
    for (auto& o : origin) o = r.uniform();
    for (int i = 0; i < 10; ++i) {
        bin_row row;
        row.weight = 1.0 + i;
        row.columns.resize(60);
        for (size_t c = 0; c < 60; ++c) row.columns[c] = origin[c] + i * 0.1 * dir[c];
        rows.push_back(std::move(row));
    }
    const auto res = weighted_pca(rows, 2);
    CHECK(res.explained[0] == Catch::Approx(1.0).margin(1e-9));
    CHECK(res.explained[1] == Catch::Approx(0.0).margin(1e-9));

    const auto par = pareto(res);
    CHECK(par.front().cumulative == Catch::Approx(1.0).margin(1e-9));
    CHECK(par.back().cumulative == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("degenerate tables are rejected") {
    std::vector<bin_row> one(1);
    one[0].columns.assign(60, 0.5);
    one[0].weight = 3.0;
    CHECK_THROWS_AS(weighted_pca(one, 2), data_error);

    std::vector<bin_row> same(3);
    for (auto& r : same) {
        r.columns.assign(60, 0.25);
        r.weight = 2.0;
    }
    CHECK_THROWS_AS(weighted_pca(same, 2), data_error); // zero variance
}

TEST_CASE("pareto accumulates descending fractions") {
    pca_result res;
    res.explained = {0.5, 0.3, 0.2};
    const auto rows = pareto(res);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].cumulative == Catch::Approx(0.5));
    CHECK(rows[1].cumulative == Catch::Approx(0.8));
    CHECK(rows[2].cumulative == Catch::Approx(1.0));
    CHECK(rows[2].rank == 3);
}
