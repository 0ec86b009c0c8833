#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"

#include "test_util.hpp"
#include "tnkf/dense_kalman.hpp"
#include "tnkf/errors.hpp"
#include "tnkf/kalman.hpp"
#include "tnkf/tensor_ops.hpp"

using namespace tnkf;
using namespace tnkf::testing;

namespace {

const RoundingPolicy kExact = RoundingPolicy::exact();

// Random TT-matrix scaled so that its dense form has entries of order 1/sqrt(N).
TTMatrix random_transition(Rng& rng, const Dims& modes, const Dims& ranks) {
    auto a = random_ttm(rng, 1, modes, modes, ranks);
    const double norm = frobenius_norm(a);
    const double target = std::sqrt(static_cast<double>(element_count(modes)));
    return TTMatrix::from_tensor_train(scale(a.as_tensor_train(), target / norm), modes, modes);
}

// I + E with ||E||_F = 0.5.
TTMatrix near_identity(Rng& rng, const Dims& modes) {
    const auto e = random_ttm(rng, 1, modes, modes, Dims(modes.size() - 1, 1));
    const auto id = scaled_identity_ttm(std::vector<double>{1.0}, modes);
    return tt_add(id, TTMatrix::from_tensor_train(scale(e.as_tensor_train(), 0.5 / frobenius_norm(e)), modes, modes));
}

// Symmetric positive semi-definite TT-matrix: B B^T + I scaled, via the congruence product.
TTMatrix random_covariance(Rng& rng, Index l, const Dims& modes) {
    std::vector<double> ones(l, 1.0);
    const auto b = random_transition(rng, modes, Dims(modes.size() - 1, 2));
    return tt_add(congruence_product(scaled_identity_ttm(ones, modes), b), scaled_identity_ttm(ones, modes));
}

Eigen::MatrixXd dense_of(const TTMatrix& m, Index i = 0) { return to_dense_matrix(m, i); }

}  // namespace

TEST_CASE("initial_state: zero mean and scaled identity covariance") {
    const std::vector<double> var{1000.0, 2.0};
    const auto s = initial_state(var, Dims(3, 4), kExact);
    CHECK(s.t == 0);
    CHECK(s.mean.batch() == 2);
    CHECK(s.mean.max_rank() == 1);
    CHECK(s.cov.max_rank() == 1);
    CHECK(to_dense_matrix(s.mean).isZero());
    CHECK(dense_of(s.cov, 1) == 2.0 * Eigen::MatrixXd::Identity(64, 64));
}

TEST_CASE("predict_mean") {
    Rng rng(31);
    const Dims modes{3, 3};
    const auto m = random_tt(rng, 1, modes, {1});
    const auto a = random_transition(rng, modes, {1});
    const auto pm = predict_mean(m, a, kExact);
    CHECK(rel_diff(to_dense_matrix(pm), dense_of(a) * to_dense_matrix(m)) < 1e-12);

    const auto id = scaled_identity_ttm(std::vector<double>{1.0}, modes);
    CHECK(rel_diff(to_dense_matrix(predict_mean(m, id, kExact)), to_dense_matrix(m)) < 1e-14);

    const auto m2 = random_tt(rng, 2, Dims(3, 2), {2, 2});
    const auto a3 = random_transition(rng, Dims(3, 2), {3, 3});
    const auto raw = transition_product(m2, a3);
    CHECK(raw.ranks() == Dims{6, 6});
    Eigen::MatrixXd ref = dense_of(a3) * to_dense_matrix(m2);
    CHECK(rel_diff(to_dense_matrix(raw), ref) < 1e-12);
    CHECK(rel_diff(to_dense_matrix(predict_mean(m2, a3, kExact)), ref) < 1e-12);
    CHECK_THROWS_AS(predict_mean(m2, random_transition(rng, Dims(3, 3), {1, 1}), kExact), DimensionError);
}

TEST_CASE("predict_cov") {
    Rng rng(32);
    const Dims modes{3, 3};
    const auto p = random_ttm(rng, 1, modes, modes, {1});
    const auto a = random_transition(rng, modes, {1});
    const auto q = scaled_identity_ttm(std::vector<double>{0.7}, modes);
    const auto pc = predict_cov(p, a, q, kExact);
    const Eigen::MatrixXd ref = dense_of(a) * dense_of(p) * dense_of(a).transpose() + 0.7 * Eigen::MatrixXd::Identity(9, 9);
    CHECK(rel_diff(dense_of(pc), ref) < 1e-12);

    CHECK(rel_diff(dense_of(predict_cov(p, std::nullopt, std::nullopt, kExact)), dense_of(p)) == 0.0);

    const auto p2 = random_ttm(rng, 2, Dims(3, 2), Dims(3, 2), {2, 2});
    const auto a2 = random_transition(rng, Dims(3, 2), {2, 2});
    const auto raw = congruence_product(p2, a2);
    CHECK(raw.ranks() == Dims{8, 8});
    for (Index i = 0; i < 2; ++i) {
        const Eigen::MatrixXd r = dense_of(a2) * dense_of(p2, i) * dense_of(a2).transpose();
        CHECK(rel_diff(dense_of(raw, i), r) < 1e-12);
    }
}

TEST_CASE("innovation and innovation_variance") {
    Rng rng(33);
    const Dims modes{3, 3};
    const auto c = random_tt(rng, 1, modes, {2});
    const Eigen::VectorXd cd = to_dense_matrix(c).col(0);
    const std::vector<double> y{0.3, -1.2};

    const auto zero = zeros_tt(2, modes);
    const auto v0 = innovation(y, zero, c);
    CHECK(v0 == y);

    const auto m = random_tt(rng, 2, modes, {2});
    const auto v = innovation(y, m, c);
    const Eigen::MatrixXd md = to_dense_matrix(m);
    for (int i = 0; i < 2; ++i) CHECK(v[static_cast<Index>(i)] == doctest::Approx(y[static_cast<Index>(i)] - cd.dot(md.col(i))).epsilon(1e-12));

    const auto p = random_covariance(rng, 2, modes);
    const std::vector<double> r{0.01, 0.5};
    const auto s = innovation_variance(p, c, r);
    for (Index i = 0; i < 2; ++i) {
        const double ref = cd.dot(dense_of(p, i) * cd) + r[i];
        CHECK(s[i] == doctest::Approx(ref).epsilon(1e-12));
        CHECK(s[i] >= r[i]);
    }

    // Isotropic case with a unit-norm c.
    const auto u = rank1_tt_from_vector(Eigen::Vector3d(0.6, 0.8, 0.0), 2);
    const auto iso = innovation_variance(scaled_identity_ttm(std::vector<double>{5.0}, modes), u, std::vector<double>{0.25});
    CHECK(iso[0] == doctest::Approx(5.25).epsilon(1e-14));

    // A covariance with a negative direction makes s negative.
    const auto neg = scaled_identity_ttm(std::vector<double>{1.0}, modes);
    const auto bad = TTMatrix::from_tensor_train(scale(neg.as_tensor_train(), -1.0), modes, modes);
    CHECK_THROWS_AS(innovation_variance(bad, u, std::vector<double>{0.25}), CovarianceError);
    CHECK_THROWS_AS(innovation(std::vector<double>{1.0}, m, c), DimensionError);
}

TEST_CASE("innovation variance at the first step of the SISO experiment") {
    // Sample 0 of seed 1: u(0) = -0.49143895425895007, history zero.
    Eigen::VectorXd u(5);
    u << 1.0, -0.49143895425895007, 0.0, 0.0, 0.0;
    const auto c = rank1_tt_from_vector(u, 4);
    const auto p = scaled_identity_ttm(std::vector<double>{1000.0}, Dims(4, 5));
    const auto s = innovation_variance(p, c, std::vector<double>{1e-2});
    // 1000 ||u^{(x)4}||^2 + 0.01, from the independent numpy filter.
    CHECK(s[0] == doctest::Approx(2375.7780113291014).epsilon(1e-13));
    CHECK(s[0] == doctest::Approx(1000.0 * std::pow(u.squaredNorm(), 4) + 0.01).epsilon(1e-14));
}

TEST_CASE("scalar chain: gain and covariance update") {
    const Dims modes{1};
    const auto p = scaled_identity_ttm(std::vector<double>{1000.0}, modes);
    const auto c = rank1_tt_from_vector(Eigen::VectorXd::Ones(1), 1);
    const auto s = innovation_variance(p, c, std::vector<double>{0.01});
    CHECK(s[0] == doctest::Approx(1000.01).epsilon(1e-15));
    const auto k = kalman_gain(p, c, s, kExact);
    const double kv = to_dense_matrix(k)(0, 0);
    CHECK(kv == doctest::Approx(1000.0 / 1000.01).epsilon(1e-15));
    const auto pn = update_cov(p, k, s, kExact);
    CHECK(dense_of(pn)(0, 0) == doctest::Approx(1000.0 - kv * kv * 1000.01).epsilon(1e-9));
    CHECK(dense_of(pn)(0, 0) == doctest::Approx(0.0099999).epsilon(1e-5));

    const auto mn = update_mean(zeros_tt(1, modes), k, std::vector<double>{2.0}, kExact);
    CHECK(to_dense_matrix(mn)(0, 0) == doctest::Approx(2.0 * 1000.0 / 1000.01).epsilon(1e-15));
}

TEST_CASE("kalman_gain, update_mean, update_cov against dense") {
    Rng rng(34);
    const Dims modes{3, 3};
    const auto c = random_tt(rng, 1, modes, {2});
    const Eigen::VectorXd cd = to_dense_matrix(c).col(0);
    const auto p = random_covariance(rng, 2, modes);
    const std::vector<double> r{0.1, 0.2};
    const auto s = innovation_variance(p, c, r);
    const auto k = kalman_gain(p, c, s, kExact);
    const Eigen::MatrixXd kd = to_dense_matrix(k);
    for (Index i = 0; i < 2; ++i) {
        CHECK(rel_diff(kd.col(static_cast<Eigen::Index>(i)), dense_of(p, i) * cd / s[i]) < 1e-12);
    }
    CHECK(covariance_times_measurement(p, c).ranks() == Dims{p.ranks()[0] * 2});

    const auto m = random_tt(rng, 2, modes, {2});
    const std::vector<double> v{0.5, -2.0};
    const auto mn = update_mean(m, k, v, kExact);
    Eigen::MatrixXd mref = to_dense_matrix(m);
    for (Index i = 0; i < 2; ++i) mref.col(static_cast<Eigen::Index>(i)) += v[i] * kd.col(static_cast<Eigen::Index>(i));
    CHECK(rel_diff(to_dense_matrix(mn), mref) < 1e-12);
    CHECK(rel_diff(to_dense_matrix(update_mean(m, k, std::vector<double>{0.0, 0.0}, kExact)), to_dense_matrix(m)) < 1e-14);

    const auto pn = update_cov(p, k, s, kExact);
    for (Index i = 0; i < 2; ++i) {
        const auto ki = kd.col(static_cast<Eigen::Index>(i));
        CHECK(rel_diff(dense_of(pn, i), dense_of(p, i) - s[i] * ki * ki.transpose()) < 1e-12);
    }
    const auto zero_gain = zeros_tt(2, modes);
    CHECK(rel_diff(dense_of(update_cov(p, zero_gain, s, kExact), 1), dense_of(p, 1)) < 1e-14);
    CHECK_THROWS_AS(kalman_gain(p, c, std::vector<double>{1.0, 0.0}, kExact), CovarianceError);
}

TEST_CASE("kk_outer_tn equals the column-wise outer product") {
    Rng rng(35);
    for (int trial = 0; trial < 50; ++trial) {
        const Index l = 1 + rng.next_u64() % 4;
        const Index n = 1 + rng.next_u64() % 4;
        const Index d = 1 + rng.next_u64() % 4;
        Dims ranks(d - 1);
        for (auto& r : ranks) r = 1 + rng.next_u64() % 3;
        const auto k = random_tt(rng, l, Dims(d, n), ranks);
        const auto kk = kk_outer_tn(k);
        Dims squared;
        for (Index r : ranks) squared.push_back(r * r);
        REQUIRE(kk.ranks() == squared);
        const Eigen::MatrixXd kd = to_dense_matrix(k);
        const auto ref = colwise_outer(kd, kd);
        const auto got = contract_full(kk).permute({1, 2, 0});
        REQUIRE(rel_diff(got, ref) < 1e-12);
    }
    const Eigen::Vector3d u(1.0, -2.0, 0.5);
    const auto kk = kk_outer_tn(rank1_tt_from_vector(u, 3));
    const Eigen::VectorXd w = repeated_kron(u, 3);
    CHECK(rel_diff(dense_of(kk), w * w.transpose()) < 1e-14);
    CHECK(kk_outer_tn(random_tt(rng, 1, Dims(3, 2), {2, 3})).ranks() == Dims{4, 9});
}

TEST_CASE("step matches the dense filter for all n^d <= 4096") {
    struct Case {
        Index n, d;
        bool with_dynamics;
    };
    for (const Case cs : {Case{2, 2, true}, Case{3, 3, true}, Case{4, 3, true}, Case{2, 6, true}, Case{4, 4, false},
                          Case{2, 12, false}, Case{16, 3, false}, Case{64, 2, false}}) {
        CAPTURE(cs.n);
        CAPTURE(cs.d);
        Rng rng(100 + cs.n * 17 + cs.d);
        const Dims modes(cs.d, cs.n);
        const Index big_n = element_count(modes);
        const std::vector<double> var{10.0};
        const std::vector<double> r{0.05};

        ModelSpec model;
        model.measurement_noise = r;
        std::optional<Eigen::MatrixXd> a_dense;
        std::vector<Eigen::VectorXd> q_dense;
        if (cs.with_dynamics) {
            model.transition = near_identity(rng, modes);
            model.process_noise = scaled_identity_ttm(std::vector<double>{0.01}, modes);
            a_dense = dense_of(*model.transition);
            q_dense.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(big_n), 0.01));
        }
        KalmanState state = initial_state(var, modes, kExact);
        DenseKalmanState dense = dense_initial_state(var, big_n);
        const int steps = big_n >= 1024 ? 4 : 20;
        for (int t = 0; t < steps; ++t) {
            const auto c = random_tt(rng, 1, modes, Dims(cs.d - 1, 1));
            const std::vector<double> y{rng.normal()};
            state = step(state, model, c, y);
            dense = dense_kalman_step(dense, a_dense, to_dense_matrix(c).col(0), q_dense, r, y);
            REQUIRE(rel_diff(to_dense_matrix(state.mean), dense.mean) < 1e-8);
            REQUIRE(rel_diff(dense_of(state.cov), dense.cov[0]) < 1e-8);
        }
        CHECK(state.t == static_cast<Index>(steps));
    }
}

TEST_CASE("batched step equals independent runs and permutes with the batch") {
    Rng rng(36);
    const Dims modes{3, 3, 3};
    const std::vector<double> var{5.0, 20.0, 1.0};
    const std::vector<double> r{0.01, 0.1, 1.0};
    ModelSpec batched;
    batched.measurement_noise = r;
    KalmanState joint = initial_state(var, modes, kExact);
    std::vector<KalmanState> single;
    std::vector<ModelSpec> single_models(3);
    for (Index i = 0; i < 3; ++i) {
        single.push_back(initial_state(std::vector<double>{var[i]}, modes, kExact));
        single_models[i].measurement_noise = {r[i]};
    }
    // Reverse batch order for the permutation check.
    ModelSpec reversed_model;
    reversed_model.measurement_noise = {r[2], r[1], r[0]};
    KalmanState reversed = initial_state(std::vector<double>{var[2], var[1], var[0]}, modes, kExact);

    for (int t = 0; t < 15; ++t) {
        const auto c = random_tt(rng, 1, modes, {2, 2});
        const std::vector<double> y{rng.normal(), rng.normal(), rng.normal()};
        joint = step(joint, batched, c, y);
        reversed = step(reversed, reversed_model, c, std::vector<double>{y[2], y[1], y[0]});
        for (Index i = 0; i < 3; ++i) single[i] = step(single[i], single_models[i], c, std::vector<double>{y[i]});
    }
    const Eigen::MatrixXd jm = to_dense_matrix(joint.mean);
    const Eigen::MatrixXd rm = to_dense_matrix(reversed.mean);
    for (Index i = 0; i < 3; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        CHECK(rel_diff(jm.col(col), to_dense_matrix(single[i].mean).col(0)) < 1e-10);
        CHECK(rel_diff(dense_of(joint.cov, i), dense_of(single[i].cov)) < 1e-10);
        CHECK(rel_diff(rm.col(2 - col), jm.col(col)) < 1e-10);
        CHECK(rel_diff(dense_of(reversed.cov, 2 - i), dense_of(joint.cov, i)) < 1e-10);
    }
}

TEST_CASE("covariance stays symmetric and PSD over 100 exact steps") {
    Rng rng(37);
    const Dims modes(3, 4);
    ModelSpec model;
    model.measurement_noise = {0.01};
    KalmanState state = initial_state(std::vector<double>{100.0}, modes, kExact);
    for (int t = 0; t < 100; ++t) {
        const auto c = rank1_tt_from_vector(random_vector(rng, 4), 3);
        const std::vector<double> y{rng.normal()};
        StepInfo info;
        state = step(state, model, c, y, &info);
        REQUIRE(info.innovation_variance[0] >= 0.01);
        if (t % 10 == 9) {
            const Eigen::MatrixXd p = dense_of(state.cov);
            REQUIRE(rel_diff(p, p.transpose()) < 1e-8);
            const Eigen::MatrixXd sym = 0.5 * (p + p.transpose());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
            REQUIRE(eig.eigenvalues().minCoeff() >= -1e-8 * sym.trace());
        }
    }
}

TEST_CASE("noise-free identification error decreases") {
    Rng rng(38);
    const Dims modes(2, 4);
    // c spans symmetric tensors only, so the truth is taken symmetric.
    const Eigen::MatrixXd g = random_matrix(rng, 4, 4);
    const Eigen::MatrixXd sym = g + g.transpose();
    const Eigen::VectorXd truth = sym.reshaped();
    ModelSpec model;
    model.measurement_noise = {1e-6};
    KalmanState state = initial_state(std::vector<double>{100.0}, modes, kExact);
    double prev = 1.0;
    for (int t = 0; t < 50; ++t) {
        const Eigen::VectorXd u = random_vector(rng, 4);
        const auto c = rank1_tt_from_vector(u, 2);
        const std::vector<double> y{repeated_kron(u, 2).dot(truth)};
        state = step(state, model, c, y);
        const double err = (to_dense_matrix(state.mean).col(0) - truth).norm() / truth.norm();
        if (t < 16) REQUIRE(err < prev + 1e-12);
        prev = err;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("step validates its inputs") {
    const Dims modes(2, 3);
    auto state = initial_state(std::vector<double>{1.0}, modes, kExact);
    const auto c = rank1_tt_from_vector(Eigen::VectorXd::Ones(3), 2);
    ModelSpec model;
    model.measurement_noise = {0.0};
    CHECK_THROWS_AS(step(state, model, c, std::vector<double>{1.0}), ParameterError);
    model.measurement_noise = {0.1, 0.1};
    CHECK_THROWS_AS(step(state, model, c, std::vector<double>{1.0}), DimensionError);
    model.measurement_noise = {0.1};
    CHECK_THROWS_AS(step(state, model, rank1_tt_from_vector(Eigen::VectorXd::Ones(4), 2), std::vector<double>{1.0}),
                    DimensionError);
}
