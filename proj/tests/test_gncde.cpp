#include "cegncde/control_path.hpp"
#include "cegncde/errors.hpp"
#include "cegncde/gncde.hpp"
#include "cegncde/micro.hpp"
#include "cegncde/model.hpp"
#include "oracle/reference.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace cegncde;

namespace {

ModelDims dims_of(int nodes, int channels, int dz, int horizon = 2) {
    ModelDims d;
    d.nodes = nodes;
    d.channels = channels;
    d.hidden_h = dz;
    d.hidden_z = dz;
    d.horizon = horizon;
    d.window = 3;
    d.layers = 2;
    d.qk_dim = 2;
    d.embed_dim = 2;
    return d;
}

MaskMatrix mask_of(const Mat& m, MaskKind k = MaskKind::geographic) { return {m, k}; }

}  // namespace

TEST_CASE("init_state") {
    std::mt19937_64 rng(4);
    const ModelDims d = dims_of(3, 2, 4);
    const GncdeParams p = GncdeParams::init(d, Ablation{}, rng);
    CHECK(init_state(Mat::Zero(3, 2), p).isZero());
    const Mat x = testing::random_mat(3, 2, rng);
    const Mat expect = oracle::to_eigen(oracle::relu(oracle::matmul(oracle::from(x), oracle::from(p.W_Z))));
    CHECK(testing::max_abs_diff(init_state(x, p), expect) < 1e-15);
    GncdeParams neg = p;
    neg.W_Z = -neg.W_Z.cwiseAbs();
    CHECK(init_state(Mat::Constant(3, 2, 1.0), neg).isZero());
}

TEST_CASE("mask_normalize") {
    std::mt19937_64 rng(1);
    const Mat a = testing::random_mat(3, 3, rng, -2, 2);
    CHECK(mask_normalize(a, mask_of(Mat::Identity(3, 3))) == Mat::Identity(3, 3));
    CHECK(testing::max_abs_diff(mask_normalize(Mat::Zero(3, 3), mask_of(Mat::Ones(3, 3))), Mat::Constant(3, 3, 1.0 / 3)) <
          1e-15);

    SUBCASE("masked column is exactly zero and pairs follow the two-entry softmax") {
        Mat m = Mat::Ones(3, 3);
        m.col(2).setZero();
        m(2, 2) = 1.0;  // keep the diagonal
        Mat logits(3, 3);
        logits << 1.0, -1.0, 5.0,  //
            0.5, 2.0, 7.0,         //
            3.0, 0.0, 1.0;
        const Mat out = mask_normalize(logits, mask_of(m));
        CHECK(out(0, 2) == 0.0);
        CHECK(out(1, 2) == 0.0);
        // row 0: relu gives (1, 0) on the support
        CHECK(out(0, 0) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)));
        CHECK(out(0, 1) == doctest::Approx(1.0 / (std::exp(1.0) + 1.0)));
        CHECK(out(1, 1) == doctest::Approx(std::exp(2.0) / (std::exp(2.0) + std::exp(0.5))));
        const double z = std::exp(3.0) + 1.0 + std::exp(1.0);
        CHECK(out(2, 0) == doctest::Approx(std::exp(3.0) / z));
    }
    SUBCASE("invariant on random inputs") {
        for (int trial = 0; trial < 20; ++trial) {
            const Mat logits = testing::random_mat(6, 6, rng, -4, 4);
            Mat m = (testing::random_mat(6, 6, rng).array() > 0.0).cast<double>();
            m.diagonal().setOnes();
            const Mat out = mask_normalize(logits, mask_of(m));
            for (int i = 0; i < 6; ++i) {
                CHECK(std::abs(out.row(i).sum() - 1.0) <= 1e-6);
                for (int j = 0; j < 6; ++j)
                    if (m(i, j) == 0.0) CHECK(out(i, j) == 0.0);
            }
        }
    }
}

TEST_CASE("gru_graph_step") {
    std::mt19937_64 rng(5);
    const Mat Z = testing::random_mat(2, 3, rng);
    const Mat An = mask_normalize(testing::random_mat(2, 2, rng), mask_of(Mat::Ones(2, 2)));
    SUBCASE("zero parameters halve the state") {
        CHECK(testing::max_abs_diff(gru_graph_step(Z, An, GruBranchParams::zeros(3)), 0.5 * Z) < 1e-15);
    }
    SUBCASE("zero state with zero biases stays zero") {
        GruBranchParams p = GruBranchParams::init(3, rng);
        p.b_z.setZero();
        p.b_r.setZero();
        p.b_h.setZero();
        CHECK(gru_graph_step(Mat::Zero(2, 3), An, p).isZero());
    }
    SUBCASE("line-by-line oracle") {
        const GruBranchParams p = GruBranchParams::init(3, rng);
        const Mat expect = oracle::to_eigen(oracle::gru_step(oracle::from(Z), oracle::from(An), oracle::branch(p)));
        CHECK(testing::max_abs_diff(gru_graph_step(Z, An, p), expect) < 1e-15);
    }
    SUBCASE("bounded by one when the state is") {
        for (int trial = 0; trial < 20; ++trial) {
            const GruBranchParams p = GruBranchParams::init(4, rng);
            const Mat z = testing::random_mat(5, 4, rng);
            Mat m = (testing::random_mat(5, 5, rng).array() > 0.0).cast<double>();
            m.diagonal().setOnes();
            const Mat a = mask_normalize(testing::random_mat(5, 5, rng, -3, 3), mask_of(m));
            CHECK(gru_graph_step(z, a, p).cwiseAbs().maxCoeff() <= 1.0);
        }
    }
}

TEST_CASE("vector_field_g") {
    std::mt19937_64 rng(6);
    const ModelDims d = dims_of(3, 2, 3);
    const GncdeParams p = GncdeParams::init(d, Ablation{}, rng);
    const Mat Z = testing::random_mat(3, 3, rng);
    const Mat A = testing::random_mat(3, 3, rng, -2, 2);
    Mat geo = Mat::Identity(3, 3);
    geo(0, 1) = geo(1, 0) = 1;
    Mat sem = Mat::Identity(3, 3);
    sem(2, 0) = sem(0, 2) = 1;

    SUBCASE("full pipeline matches composed oracles") {
        oracle::M cat = oracle::gru_step(oracle::from(Z), oracle::masked_softmax(oracle::relu(oracle::from(A)), oracle::from(geo)),
                                         oracle::branch(p.geo));
        const oracle::M hs = oracle::gru_step(oracle::from(Z), oracle::masked_softmax(oracle::relu(oracle::from(A)), oracle::from(sem)),
                                              oracle::branch(p.sem));
        for (std::size_t n = 0; n < cat.size(); ++n) cat[n].insert(cat[n].end(), hs[n].begin(), hs[n].end());
        const Mat expect = oracle::to_eigen(oracle::add_bias(oracle::matmul(cat, oracle::from(p.psi_weight)), oracle::from(p.psi_bias)));
        const Mat out = vector_field_g(Z, A, mask_of(geo), mask_of(sem, MaskKind::semantic), p, Ablation{});
        CHECK(out.cols() == 6);
        CHECK(testing::max_abs_diff(out, expect) < 1e-14);
    }
    SUBCASE("zero branch outputs leave only the psi bias") {
        GncdeParams z = GncdeParams::zeros(d, Ablation{});
        z.psi_bias = testing::random_mat(1, 6, rng);
        const Mat out = vector_field_g(Mat::Zero(3, 3), A, mask_of(geo), mask_of(sem), z, Ablation{});
        for (int n = 0; n < 3; ++n) CHECK(out.row(n) == z.psi_bias);
    }
    SUBCASE("branch ablations ignore the dropped mask") {
        const Ablation no_gvf = Ablation::parse("no-gvf");
        const GncdeParams pg = GncdeParams::init(d, no_gvf, rng);
        CHECK(pg.psi_weight.rows() == 3);
        const Mat a1 = vector_field_g(Z, A, mask_of(geo), mask_of(sem), pg, no_gvf);
        const Mat a2 = vector_field_g(Z, A, mask_of(Mat::Ones(3, 3)), mask_of(sem), pg, no_gvf);
        CHECK(a1 == a2);
        const Ablation no_svf = Ablation::parse("no-svf");
        const GncdeParams ps = GncdeParams::init(d, no_svf, rng);
        CHECK(vector_field_g(Z, A, mask_of(geo), mask_of(sem), ps, no_svf) ==
              vector_field_g(Z, A, mask_of(geo), mask_of(Mat::Ones(3, 3)), ps, no_svf));
    }
    SUBCASE("no-mask treats both masks as all-ones") {
        const Ablation nm = Ablation::parse("no-mask");
        CHECK(vector_field_g(Z, A, mask_of(geo), mask_of(sem), p, nm) ==
              vector_field_g(Z, A, mask_of(Mat::Ones(3, 3)), mask_of(Mat::Ones(3, 3)), p, Ablation{}));
    }
    SUBCASE("disabling both branches is rejected") {
        Ablation both;
        both.no_gvf = both.no_svf = true;
        CHECK_THROWS_AS(GncdeParams::init(d, both, rng), ConfigError);
    }
}

TEST_CASE("forecast_head") {
    std::mt19937_64 rng(8);
    const ModelDims d = dims_of(3, 2, 4, 2);
    SUBCASE("zero weights broadcast the bias") {
        GncdeParams p = GncdeParams::zeros(d, Ablation{});
        p.head_bias = testing::random_mat(1, 4, rng);
        const Tensor3 out = forecast_head(testing::random_mat(3, 4, rng), p, 2);
        for (int h = 0; h < 2; ++h)
            for (int n = 0; n < 3; ++n)
                for (int c = 0; c < 2; ++c) CHECK(out(h, n, c) == p.head_bias(0, h * 2 + c));
    }
    SUBCASE("identity weight reshapes the state") {
        GncdeParams p = GncdeParams::zeros(d, Ablation{});
        p.head_weight = Mat::Identity(4, 4);
        const Mat z = testing::random_mat(3, 4, rng);
        const Tensor3 out = forecast_head(z, p, 2);
        for (int h = 0; h < 2; ++h)
            for (int n = 0; n < 3; ++n)
                for (int c = 0; c < 2; ++c) CHECK(out(h, n, c) == z(n, h * 2 + c));
    }
    SUBCASE("naive matmul oracle") {
        const GncdeParams p = GncdeParams::init(d, Ablation{}, rng);
        const Mat z = testing::random_mat(3, 4, rng);
        const oracle::M ref = oracle::add_bias(oracle::matmul(oracle::from(z), oracle::from(p.head_weight)), oracle::from(p.head_bias));
        const Tensor3 out = forecast_head(z, p, 2);
        for (int h = 0; h < 2; ++h)
            for (int n = 0; n < 3; ++n)
                for (int c = 0; c < 2; ++c) CHECK(std::abs(out(h, n, c) - ref[n][h * 2 + c]) < 1e-15);
    }
}

TEST_CASE("assembled rhs") {
    MicroSpec spec;
    spec.nodes = 2;
    spec.channels = 2;
    spec.window = 3;
    spec.horizon = 2;
    spec.hidden = 2;
    spec.qk_dim = 2;
    spec.embed_dim = 2;
    spec.seed = 7;
    const MicroProblem prob = make_micro_problem(spec);
    const Model& m = prob.model;

    SUBCASE("constant control path freezes the state") {
        const Tensor3 flat(3, 2, 2, 4.0);
        ad::Tape tape;
        const BoundModel b = BoundModel::bind(tape, m.params, false);
        const ControlPath path = fit_path(ObservationSeries::regular(flat));
        RhsContext ctx;
        ctx.path = &path;
        ctx.cegg = &b.cegg;
        ctx.gncde = &b.gncde;
        ctx.static_adjacency = cegg::static_adjacency(b.cegg);
        ctx.geo_mask = &m.geo_mask.values;
        ctx.sem_mask = &m.sem_mask.values;
        ctx.beta = m.beta;
        const Rhs rhs = assemble_rhs(ctx);
        std::mt19937_64 rng(1);
        const VarState s{tape.constant(testing::random_mat(2, 2, rng)), tape.constant(testing::random_mat(2, 2, rng))};
        const VarState d = rhs(0.5, s);
        CHECK(d.Z.value().isZero());
        CHECK(d.H.value().isZero());
    }
    SUBCASE("one rk4 step matches the step-by-step oracle") {
        // Two knots give exactly one step; an identity head exposes Z(t_1) as the first horizon.
        Model probe = m;
        probe.dims.window = 2;
        probe.params.gncde.head_weight = Mat::Zero(2, 4);
        probe.params.gncde.head_weight.block(0, 0, 2, 2) = Mat::Identity(2, 2);
        probe.params.gncde.head_bias.setZero();
        probe.scaler.mean.setZero();
        probe.scaler.std.setOnes();
        const Tensor3 wn = m.scaler.normalize(prob.batch[0].input).slice(0, 2);
        const auto traj = joint_trajectory(probe, wn);
        REQUIRE(traj.size() == 2);
        const Tensor3 ref = oracle::forecast(probe, wn);
        for (int n = 0; n < 2; ++n)
            for (int c = 0; c < 2; ++c) CHECK(std::abs(ref(0, n, c) - traj[1].Z(n, c)) < 1e-12);
    }
    SUBCASE("H from the joint solve equals the standalone hidden solve") {
        for (const auto& s : prob.batch) {
            const auto joint = joint_trajectory(m, s.input);
            const auto alone = hidden_trajectory(m, s.input);
            REQUIRE(joint.size() == alone.size());
            for (std::size_t k = 0; k < joint.size(); ++k) CHECK(testing::max_abs_diff(joint[k].H, alone[k]) <= 1e-12);
        }
    }
}

TEST_CASE("full forward pass matches the reference model") {
    for (const char* ab : {"none", "no-mask", "no-gvf", "no-svf", "no-static"}) {
        MicroSpec spec;
        spec.ablation = Ablation::parse(ab);
        spec.seed = 6;
        spec.channels = 2;
        const MicroProblem prob = make_micro_problem(spec);
        for (const auto& s : prob.batch) {
            const Tensor3 got = predict(prob.model, s.input);
            const Tensor3 want = oracle::forecast(prob.model, s.input);
            for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got.data()[i] - want.data()[i]) <= 1e-8);
        }
    }
}

TEST_CASE("forward rejects a window of the wrong shape") {
    const MicroProblem prob = make_micro_problem(MicroSpec{});
    try {
        predict(prob.model, Tensor3(6, 3, 1));
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("4") != std::string::npos);
    }
    CHECK_THROWS_AS(predict(prob.model, Tensor3(5, 4, 1)), ShapeError);
}

TEST_CASE("forecasts are deterministic and bias-only under a zero head") {
    MicroProblem prob = make_micro_problem(MicroSpec{});
    const Tensor3 a = predict(prob.model, prob.batch[0].input);
    CHECK(a == predict(prob.model, prob.batch[0].input));
    prob.model.params.gncde.head_weight.setZero();
    const Tensor3 out = predict(prob.model, prob.batch[1].input);
    const auto& sc = prob.model.scaler;
    for (int h = 0; h < 2; ++h)
        for (int n = 0; n < 4; ++n)
            CHECK(out(h, n, 0) == doctest::Approx(prob.model.params.gncde.head_bias(0, h) * sc.std(0) + sc.mean(0)));
}

TEST_CASE("semantic adjacency export at the first knot uses the initial hidden state") {
    const MicroProblem prob = make_micro_problem(MicroSpec{});
    const Model& m = prob.model;
    const Tensor3& w = prob.batch[0].input;
    const Tensor3 wn = m.scaler.normalize(w);
    const Mat H0 = init_hidden(wn.step(0), m.params.cegg);
    const Mat fused = fuse(attention_adjacency(H0, m.params.cegg), static_adjacency(m.params.cegg), m.beta);
    const Mat expect = mask_normalize(fused, m.sem_mask);
    CHECK(testing::max_abs_diff(semantic_adjacency_at(m, w, 0.0), expect) < 1e-14);
    const Mat later = semantic_adjacency_at(m, w, 3.5);
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(later.row(i).sum() - 1.0) <= 1e-6);
        for (int j = 0; j < 4; ++j)
            if (m.sem_mask.values(i, j) == 0.0) CHECK(later(i, j) == 0.0);
    }
    CHECK_THROWS(semantic_adjacency_at(m, w, 5.5));
}
