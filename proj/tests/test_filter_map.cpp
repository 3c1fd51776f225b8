#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "argbd/filter_map.hpp"
#include "support/oracles.hpp"

using namespace argbd;

TEST_CASE("update_filter_map keeps an all-valid map all-valid") {
    FilterMap map(6, 6, 1);
    CHECK(update_filter_map(map, 3, 1).all_valid());
    CHECK(update_filter_map(map, 3, 2).all_valid());
}

TEST_CASE("a single invalid pixel disappears after one 3x3 update") {
    FilterMap map(7, 7, 1);
    map.set(3, 3, 0);
    CHECK(update_filter_map(map, 3, 1).all_valid());
}

TEST_CASE("a centered 3x3 invalid block shrinks to its center, then clears") {
    FilterMap map(9, 9, 1);
    for (index_t y = 3; y <= 5; ++y) {
        for (index_t x = 3; x <= 5; ++x) map.set(y, x, 0);
    }
    FilterMap once = update_filter_map(map, 3, 1);
    index_t invalid = 0;
    for (index_t y = 0; y < 9; ++y) {
        for (index_t x = 0; x < 9; ++x) invalid += once.at(y, x) ? 0 : 1;
    }
    CHECK(invalid == 1);
    CHECK(once.at(4, 4) == 0);
    CHECK(update_filter_map(once, 3, 1).all_valid());
}

TEST_CASE("update_filter_map agrees with the literal rule simulation") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const index_t h = 4 + static_cast<index_t>(rng() % 8);
        const index_t w = 4 + static_cast<index_t>(rng() % 8);
        const index_t k = (rng() % 2) ? 3 : 5;
        const index_t s = 1 + static_cast<index_t>(rng() % 2);
        FilterMap map = oracle::random_map(h, w, rng, 0.4);
        CHECK(update_filter_map(map, k, s) == oracle::update_map(map, k, s));
    }
}

TEST_CASE("update_filter_map is monotone in the valid set") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        FilterMap small = oracle::random_map(10, 10, rng, 0.3);
        FilterMap big = small;
        // grow the valid set
        for (int add = 0; add < 10; ++add) {
            big.set(static_cast<index_t>(rng() % 10), static_cast<index_t>(rng() % 10), 1);
        }
        FilterMap ua = update_filter_map(small, 3, 2);
        FilterMap ub = update_filter_map(big, 3, 2);
        for (index_t y = 0; y < ua.height(); ++y) {
            for (index_t x = 0; x < ua.width(); ++x) {
                if (ua.at(y, x)) CHECK(ub.at(y, x) == 1);
            }
        }
    }
}

// Missing regions of side < 2^(n+1) close after n stride-2 updates (k >= 3).
TEST_CASE("stride-2 updates close square holes within the doubling bound") {
    for (int n = 1; n <= 5; ++n) {
        const index_t size = 1 << (n + 3); // comfortably larger than the hole
        const index_t side = (1 << (n + 1)) - 1;
        for (index_t k : {index_t(3), index_t(5)}) {
            FilterMap map(size, size, 1);
            const index_t start = (size - side) / 2;
            for (index_t y = start; y < start + side; ++y) {
                for (index_t x = start; x < start + side; ++x) map.set(y, x, 0);
            }
            FilterMap cur = map;
            for (int level = 0; level < n; ++level) cur = update_filter_map(cur, k, 2);
            INFO("n=" << n << " k=" << k << " side=" << side);
            CHECK(cur.all_valid());
        }
    }
}

TEST_CASE("filter_map_or merges validity") {
    FilterMap a(2, 2, 0), b(2, 2, 0);
    a.set(0, 0, 1);
    b.set(1, 1, 1);
    FilterMap m = filter_map_or(a, b);
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(1, 1) == 1);
    CHECK(m.at(0, 1) == 0);
    CHECK(m.count_valid() == 2);
}

TEST_CASE("filter map values are strictly binary") {
    FilterMap m(2, 2, 0);
    CHECK_THROWS_AS(m.set(0, 0, 2), ShapeError);
    CHECK_THROWS_AS(FilterMap(2, 2, 3), ShapeError);
}
