#include "cegncde/errors.hpp"
#include "cegncde/masks.hpp"
#include "oracle/reference.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>

using namespace cegncde;

namespace {

Tensor3 series_of(const std::vector<std::vector<double>>& rows) {
    Tensor3 t(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()), 1);
    for (std::size_t n = 0; n < rows.size(); ++n)
        for (std::size_t s = 0; s < rows[n].size(); ++s) t(static_cast<int>(s), static_cast<int>(n), 0) = rows[n][s];
    return t;
}

}  // namespace

TEST_CASE("geographic mask") {
    CHECK(geographic_mask({}, 1.0, 3).values == Mat::Identity(3, 3));

    DistanceTable full;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) full.push_back({i, j, 1.0 + i + j});
    CHECK(geographic_mask(full, 100.0, 3).values.isOnes());

    const MaskMatrix m = geographic_mask({{0, 1, 2.0}, {1, 2, 5.0}}, 3.0, 3);
    Mat expect = Mat::Identity(3, 3);
    expect(0, 1) = 1.0;
    CHECK(m.values == expect);
    CHECK(m.kind == MaskKind::geographic);

    SUBCASE("a symmetric table gives a symmetric mask") {
        const MaskMatrix s = geographic_mask({{0, 1, 2.0}, {1, 0, 2.0}, {1, 2, 5.0}, {2, 1, 5.0}}, 3.0, 3);
        CHECK(s.values == s.values.transpose());
    }
    SUBCASE("raising the threshold never removes an edge") {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> u(0, 10);
        DistanceTable t;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) t.push_back({i, j, u(rng)});
        Mat prev = geographic_mask(t, 0.5, 6).values;
        for (double th = 1.0; th < 12.0; th += 1.0) {
            const Mat cur = geographic_mask(t, th, 6).values;
            CHECK((cur.array() >= prev.array()).all());
            prev = cur;
        }
    }
    CHECK_THROWS_AS(geographic_mask({}, 0.0, 3), ConfigError);
    CHECK_THROWS_AS(geographic_mask({{0, 3, 1.0}}, 1.0, 3), DataError);
    CHECK_THROWS_AS(geographic_mask({{0, 1, -1.0}}, 1.0, 3), DataError);
}

TEST_CASE("dtw distance") {
    CHECK(dtw_distance({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(dtw_distance({1, 2, 3}, {1, 2, 2, 3}) == 0.0);
    CHECK(dtw_distance({0}, {5}) == 5.0);
    CHECK_THROWS_AS(dtw_distance({}, {1.0}), DataError);

    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> len(1, 8);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
        for (double& x : a) x = u(rng);
        for (double& x : b) x = u(rng);
        const double d = dtw_distance(a, b);
        CHECK(d >= 0.0);
        CHECK(d == dtw_distance(b, a));
        CHECK(dtw_distance(a, a) == 0.0);
        CHECK(d == doctest::Approx(oracle::dtw_bruteforce(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("downsample_mean") {
    CHECK(downsample_mean({1, 2, 3}, 5) == std::vector<double>{1, 2, 3});
    CHECK(downsample_mean({1, 3, 5, 7}, 2) == std::vector<double>{2, 6});
    CHECK(downsample_mean(std::vector<double>(1000, 2.0), 288).size() <= 288);
}

TEST_CASE("semantic mask") {
    SUBCASE("two nodes with K=1 link each other") {
        CHECK(semantic_mask(series_of({{1, 2, 3}, {3, 2, 1}}), 1).values.isOnes());
    }
    SUBCASE("shifted copy beats anti-correlated series") {
        const Tensor3 s = series_of({{0, 1, 2, 3, 2, 1}, {3, 2, 1, 0, 1, 2}, {1, 0, 1, 2, 3, 2}});
        const double d01 = dtw_distance({0, 1, 2, 3, 2, 1}, {3, 2, 1, 0, 1, 2});
        const double d02 = dtw_distance({0, 1, 2, 3, 2, 1}, {1, 0, 1, 2, 3, 2});
        REQUIRE(d02 < d01);
        const MaskMatrix m = semantic_mask(s, 1);
        CHECK(m.values(0, 2) == 1.0);
        CHECK(m.values(0, 1) == 0.0);
        CHECK(m.kind == MaskKind::semantic);
    }
    SUBCASE("ties go to the lower index") {
        const MaskMatrix m = semantic_mask(series_of({{1, 2}, {1, 2}, {1, 2}, {1, 2}}), 2);
        Mat expect(4, 4);
        expect << 1, 1, 1, 0,  //
            1, 1, 1, 0,        //
            1, 1, 1, 0,        //
            1, 1, 0, 1;
        CHECK(m.values == expect);
    }
    SUBCASE("rows hold K or K+1 ones, diagonal always set, result independent of threads") {
        std::mt19937_64 rng(7);
        Tensor3 s(40, 7, 2);
        std::uniform_real_distribution<double> u(0, 10);
        for (double& x : s.data()) x = u(rng);
        const MaskMatrix m = semantic_mask(s, 3, 288, 1);
        for (int i = 0; i < 7; ++i) {
            CHECK(m.values(i, i) == 1.0);
            const double ones = m.values.row(i).sum();
            CHECK(ones >= 3);
            CHECK(ones <= 4);
        }
        CHECK(semantic_mask(s, 3, 288, 4).values == m.values);
        CHECK(semantic_mask(s, 3, 10, 1).values.rows() == 7);
    }
    CHECK_THROWS_AS(semantic_mask(series_of({{1, 2}, {2, 1}}), 2), ConfigError);
    CHECK_THROWS_AS(semantic_mask(series_of({{1, 2}, {2, 1}}), 0), ConfigError);
}

TEST_CASE("distance table and mask files") {
    const std::string dir = testing::scratch_dir("masks");
    const std::string dpath = dir + "/d.csv";
    {
        std::ofstream f(dpath);
        f << "from,to,cost\n0,1,2.5\n1,2,4\n";
    }
    const DistanceTable t = read_distance_table(dpath);
    REQUIRE(t.size() == 2);
    CHECK(t[0].from == 0);
    CHECK(t[1].to == 2);
    CHECK(t[1].distance == 4.0);

    {
        std::ofstream f(dir + "/bad_header.csv");
        f << "a,b,c\n0,1,2\n";
    }
    CHECK_THROWS_AS(read_distance_table(dir + "/bad_header.csv"), DataError);
    {
        std::ofstream f(dir + "/bad_cell.csv");
        f << "from,to,cost\n0,x,2\n";
    }
    CHECK_THROWS_AS(read_distance_table(dir + "/bad_cell.csv"), DataError);

    const MaskMatrix m = geographic_mask(t, 3.0, 3);
    write_mask_csv(m, dir + "/m.csv");
    const MaskMatrix back = read_mask_csv(dir + "/m.csv", MaskKind::geographic);
    CHECK(back.values == m.values);
}
