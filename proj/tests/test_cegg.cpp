#include "cegncde/cegg.hpp"
#include "cegncde/errors.hpp"
#include "oracle/reference.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace cegncde;

namespace {

ModelDims dims_of(int nodes, int channels, int dh, int layers = 3, int qk = 4, int de = 2) {
    ModelDims d;
    d.nodes = nodes;
    d.channels = channels;
    d.hidden_h = dh;
    d.layers = layers;
    d.qk_dim = qk;
    d.embed_dim = de;
    return d;
}

oracle::M oracle_f(const oracle::M& H, const CeggParams& p) {
    oracle::M B = H;
    for (std::size_t l = 0; l < p.fc_weight.size(); ++l) {
        B = oracle::add_bias(oracle::matmul(B, oracle::from(p.fc_weight[l])), oracle::from(p.fc_bias[l]));
        if (l + 1 < p.fc_weight.size()) B = oracle::relu(B);
    }
    return oracle::tanh_(oracle::add_bias(oracle::matmul(B, oracle::from(p.psi_weight)), oracle::from(p.psi_bias)));
}

}  // namespace

TEST_CASE("init_hidden") {
    std::mt19937_64 rng(1);
    const ModelDims d = dims_of(3, 1, 4);
    const CeggParams p = CeggParams::init(d, rng);
    CHECK(init_hidden(Mat::Zero(3, 1), p).isZero());

    CeggParams neg = p;
    neg.W_H = -neg.W_H.cwiseAbs();
    CHECK(init_hidden(Mat::Constant(3, 1, 2.0), neg).isZero());

    std::mt19937_64 xr(1);
    const Mat x = testing::random_mat(3, 1, xr);
    const Mat expect = oracle::to_eigen(oracle::relu(oracle::matmul(oracle::from(x), oracle::from(p.W_H))));
    CHECK(testing::max_abs_diff(init_hidden(x, p), expect) < 1e-14);
    CHECK((init_hidden(x, p).array() >= 0.0).all());
    CHECK_THROWS_AS(init_hidden(Mat::Zero(3, 2), p), ShapeError);
}

TEST_CASE("vector_field_f") {
    SUBCASE("zero parameters give zero output") {
        const ModelDims d = dims_of(2, 2, 3);
        const CeggParams z = CeggParams::zeros(d);
        std::mt19937_64 rng(3);
        const Mat out = vector_field_f(testing::random_mat(2, 3, rng), z);
        CHECK(out.rows() == 2);
        CHECK(out.cols() == 6);
        CHECK(out.isZero());
    }
    SUBCASE("matches the straight-line layer stack") {
        const ModelDims d = dims_of(2, 1, 3, 3);
        std::mt19937_64 rng(2);
        const CeggParams p = CeggParams::init(d, rng);
        const Mat H = testing::random_mat(2, 3, rng);
        const Mat expect = oracle::to_eigen(oracle_f(oracle::from(H), p));
        CHECK(testing::max_abs_diff(vector_field_f(H, p), expect) < 1e-14);
    }
    SUBCASE("rows are processed independently for every depth") {
        for (int layers : {1, 2, 4}) {
            const ModelDims d = dims_of(4, 2, 5, layers);
            std::mt19937_64 rng(10 + layers);
            const CeggParams p = CeggParams::init(d, rng);
            const Mat H = testing::random_mat(4, 5, rng);
            Mat H2 = H;
            H2.row(2) += testing::random_mat(1, 5, rng);
            const Mat a = vector_field_f(H, p), b = vector_field_f(H2, p);
            for (int r = 0; r < 4; ++r) {
                if (r == 2) CHECK_FALSE(a.row(r) == b.row(r));
                else CHECK(a.row(r) == b.row(r));
            }
        }
    }
}

TEST_CASE("attention_adjacency") {
    const ModelDims d = dims_of(3, 1, 4, 3, 4);
    std::mt19937_64 rng(6);
    CeggParams p = CeggParams::init(d, rng);
    CHECK(attention_adjacency(Mat::Zero(3, 4), p).isZero());

    const Mat H = testing::random_mat(3, 4, rng);
    const oracle::M q = oracle::matmul(oracle::from(H), oracle::from(p.W_Q));
    const oracle::M k = oracle::matmul(oracle::from(H), oracle::from(p.W_K));
    const Mat expect = oracle::to_eigen(oracle::scale(oracle::matmul(q, oracle::transpose(k)), 0.5));
    CHECK(testing::max_abs_diff(attention_adjacency(H, p), expect) < 1e-14);

    SUBCASE("single node is q k^T / sqrt(d)") {
        const ModelDims d1 = dims_of(1, 1, 2, 1, 2);
        CeggParams s = CeggParams::zeros(d1);
        s.W_Q << 1, 2, 3, 4;
        s.W_K << 0.5, -1, 2, 1;
        Mat h(1, 2);
        h << 1, -1;
        // q = [-2, -2], k = [-1.5, -2]
        CHECK(attention_adjacency(h, s)(0, 0) == doctest::Approx((3.0 + 4.0) / std::sqrt(2.0)));
    }
    SUBCASE("equal query and key weights give a symmetric matrix") {
        CeggParams s = p;
        s.W_K = s.W_Q;
        const Mat a = attention_adjacency(H, s);
        CHECK(testing::max_abs_diff(a, a.transpose()) < 1e-10);
    }
    SUBCASE("bilinear in W_Q") {
        CeggParams s = p;
        s.W_Q *= 2.0;
        CHECK(testing::max_abs_diff(attention_adjacency(H, s), 2.0 * attention_adjacency(H, p)) < 1e-10);
    }
}

TEST_CASE("static_adjacency") {
    SUBCASE("orthonormal embeddings give the closed-form indicator softmax") {
        const ModelDims d = dims_of(3, 1, 2, 1, 2, 3);
        CeggParams p = CeggParams::zeros(d);
        p.E = Mat::Identity(3, 3);
        const Mat a = static_adjacency(p);
        const double e = std::exp(1.0);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(a(i, j) == doctest::Approx(i == j ? e / (e + 2) : 1 / (e + 2)));
    }
    SUBCASE("zero embeddings give uniform rows") {
        const CeggParams p = CeggParams::zeros(dims_of(4, 1, 2));
        CHECK(testing::max_abs_diff(static_adjacency(p), Mat::Constant(4, 4, 0.25)) < 1e-15);
    }
    SUBCASE("random fixture matches the relu-softmax oracle and is row-stochastic") {
        const ModelDims d = dims_of(4, 1, 2, 1, 2, 2);
        std::mt19937_64 rng(3);
        const CeggParams p = CeggParams::init(d, rng);
        const oracle::M E = oracle::from(p.E);
        const Mat expect = oracle::to_eigen(oracle::row_softmax(oracle::relu(oracle::matmul(E, oracle::transpose(E)))));
        const Mat a = static_adjacency(p);
        CHECK(testing::max_abs_diff(a, expect) < 1e-15);
        for (int i = 0; i < 4; ++i) CHECK(std::abs(a.row(i).sum() - 1.0) <= 1e-6);
        CHECK((a.array() >= 0.0).all());
    }
}

TEST_CASE("fuse") {
    std::mt19937_64 rng(9);
    const Mat ae = testing::random_mat(3, 3, rng, -3, 3), as = testing::random_mat(3, 3, rng, 0, 1);
    CHECK(fuse(ae, as, 0.0) == ae);
    CHECK(fuse(ae, as, 1.0) == as);
    const Mat mid = fuse(Mat::Identity(3, 3), Mat::Constant(3, 3, 1.0 / 3), 0.5);
    CHECK(testing::max_abs_diff(mid, 0.5 * (Mat::Identity(3, 3) + Mat::Constant(3, 3, 1.0 / 3))) < 1e-15);
    for (double beta : {0.1, 0.37, 0.5, 0.9}) {
        CHECK(testing::max_abs_diff(fuse(ae, as, beta) + fuse(ae, as, 1 - beta), ae + as) <= 1e-10);
    }
    CHECK_THROWS_AS(fuse(ae, as, -0.1), ConfigError);
    CHECK_THROWS_AS(fuse(ae, as, 1.1), ConfigError);
}

TEST_CASE("adjacency_at fuses the three graphs") {
    const ModelDims d = dims_of(3, 1, 4);
    std::mt19937_64 rng(21);
    const CeggParams p = CeggParams::init(d, rng);
    const Mat H = testing::random_mat(3, 4, rng);
    const AdjacencyState s = adjacency_at(H, p, 0.3, 2.5);
    CHECK(s.time == 2.5);
    CHECK(s.A_E == attention_adjacency(H, p));
    CHECK(s.A_S == static_adjacency(p));
    CHECK(testing::max_abs_diff(s.A_fused, 0.7 * s.A_E + 0.3 * s.A_S) < 1e-15);
}

TEST_CASE("parameter shapes and init bounds") {
    const ModelDims d = dims_of(5, 2, 6, 3, 4, 3);
    std::mt19937_64 rng(1);
    const CeggParams p = CeggParams::init(d, rng);
    CHECK_NOTHROW(p.check(d));
    CHECK(p.psi_weight.rows() == 6);
    CHECK(p.psi_weight.cols() == 12);
    CHECK(p.fc_weight.size() == 3);
    CHECK(p.W_H.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(2.0));
    CHECK(p.fc_weight[0].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(6.0));
    CeggParams bad = p;
    bad.E = Mat::Zero(4, 3);
    CHECK_THROWS_AS(bad.check(d), ShapeError);
}
