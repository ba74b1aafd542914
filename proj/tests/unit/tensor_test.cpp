#include "pointprompt/tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace pointprompt;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, Scalar scale = 1.0) {
    return Tensor::randn(std::move(shape), rng, 0.0, scale);
}

}  // namespace

TEST_CASE("matmul known products") {
    // Identity: A*I = A.
    Rng rng(7);
    Tensor a = random_tensor({3, 3}, rng);
    MatrixR eye = MatrixR::Identity(3, 3);
    Tensor i = Tensor::from_matrix(eye);
    Tensor out = matmul(a, i);
    CHECK((out.values() - a.values()).abs().maxCoeff() == doctest::Approx(0.0));

    // Hand arithmetic: [[1,2],[3,4]] * [[5,6],[7,8]] = [[19,22],[43,50]].
    Tensor x = Tensor::from_values({2, 2}, [] {
        ArrayX v(4);
        v << 1, 2, 3, 4;
        return v;
    }());
    Tensor y = Tensor::from_values({2, 2}, [] {
        ArrayX v(4);
        v << 5, 6, 7, 8;
        return v;
    }());
    Tensor p = matmul(x, y);
    CHECK(p(0, 0) == 19.0);
    CHECK(p(0, 1) == 22.0);
    CHECK(p(1, 0) == 43.0);
    CHECK(p(1, 1) == 50.0);

    // Zero: A*0 = 0.
    Tensor z = matmul(a, Tensor::zeros({3, 3}));
    CHECK(z.values().abs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST_CASE("softmax basics") {
    Tensor s = softmax(Tensor::vector({0.0, 0.0}));
    CHECK(s(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s(1) == doctest::Approx(0.5).epsilon(1e-12));

    // [ln 2, 0] -> [2/3, 1/3].
    Tensor t = softmax(Tensor::vector({std::log(2.0), 0.0}));
    CHECK(t(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(t(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    CHECK_THROWS_AS(softmax(Tensor::vector({std::nan(""), 0.0})), NumericError);
    CHECK_THROWS_AS(softmax(Tensor::vector({1e0, INFINITY})), NumericError);
}

TEST_CASE("softmax properties: normalization and shift invariance") {
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        Tensor x = random_tensor({7}, rng, 3.0);
        Tensor y = softmax(x);
        CHECK(std::abs(y.values().sum() - 1.0) < 1e-9);
        CHECK(y.values().minCoeff() > 0.0);

        const Scalar c = rng.uniform(-5.0, 5.0);
        Tensor shifted = softmax(add_scalar(x, c));
        CHECK((shifted.values() - y.values()).abs().maxCoeff() < 1e-12);
    }
    // Rank-2, both axes.
    for (int axis : {0, 1}) {
        Tensor x = random_tensor({4, 5}, rng, 2.0);
        Tensor y = softmax(x, axis);
        ConstMatMap m(y.values().data(), 4, 5);
        if (axis == 1) {
            for (Index r = 0; r < 4; ++r) CHECK(std::abs(m.row(r).sum() - 1.0) < 1e-9);
        } else {
            for (Index c = 0; c < 5; ++c) CHECK(std::abs(m.col(c).sum() - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("cosine similarity") {
    Rng rng(3);
    Tensor u = random_tensor({6}, rng);
    CHECK(cosine_similarity(u, u).value() == doctest::Approx(1.0).epsilon(1e-12));

    Tensor e1 = Tensor::vector({1.0, 0.0});
    Tensor e2 = Tensor::vector({0.0, 1.0});
    CHECK(cosine_similarity(e1, e2).value() == doctest::Approx(0.0));

    // (1,2).(2,1) / (sqrt5 * sqrt5) = 4/5.
    Tensor a = Tensor::vector({1.0, 2.0});
    Tensor b = Tensor::vector({2.0, 1.0});
    CHECK(cosine_similarity(a, b).value() == doctest::Approx(0.8).epsilon(1e-12));

    CHECK_THROWS_AS(cosine_similarity(Tensor::zeros({2}), e1), DegenerateVectorError);
}

TEST_CASE("layer_norm") {
    Tensor gamma = Tensor::constant({4}, 1.0);
    Tensor beta = Tensor::zeros({4});

    // Constant row -> zeros (variance floor via eps).
    Tensor c = layer_norm(Tensor::constant({4}, 3.5), gamma, beta, 1e-5);
    CHECK(c.values().abs().maxCoeff() == doctest::Approx(0.0));

    // [1,-1] already standardized.
    Tensor g2 = Tensor::constant({2}, 1.0);
    Tensor b2 = Tensor::zeros({2});
    Tensor t = layer_norm(Tensor::vector({1.0, -1.0}), g2, b2, 1e-12);
    CHECK(t(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(t(1) == doctest::Approx(-1.0).epsilon(1e-6));

    // beta offset: normalized + beta when gamma = 1.
    Rng rng(5);
    Tensor x = random_tensor({3, 4}, rng);
    Tensor bet = random_tensor({4}, rng);
    Tensor with_beta = layer_norm(x, gamma, bet, 1e-5);
    Tensor without = layer_norm(x, gamma, Tensor::zeros({4}), 1e-5);
    for (Index r = 0; r < 3; ++r)
        for (Index cidx = 0; cidx < 4; ++cidx)
            CHECK(with_beta(r, cidx) ==
                  doctest::Approx(without(r, cidx) + bet(cidx)).epsilon(1e-12));

    // Mean ~ 0 and variance ~ 1 before affine, d >= 2.
    for (Index r = 0; r < 3; ++r) {
        ArrayX row = without.values().segment(r * 4, 4);
        CHECK(std::abs(row.sum() / 4.0) < 1e-9);
        CHECK(std::abs(row.square().sum() / 4.0 - 1.0) < 1e-4);  // eps shifts variance slightly
    }
}

TEST_CASE("gelu values") {
    Tensor z = gelu(Tensor::vector({0.0}));
    CHECK(z(0) == 0.0);

    // Large positive input approaches identity.
    Tensor big = gelu(Tensor::vector({6.0, 9.0}));
    CHECK(std::abs(big(0) - 6.0) < 1e-6);
    CHECK(std::abs(big(1) - 9.0) < 1e-6);

    // Exact-Phi value at 1.0: 0.5*(1+erf(1/sqrt 2)) = 0.841344746...
    Tensor one = gelu(Tensor::vector({1.0}), GeluMode::kExact);
    CHECK(one(0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
    // Tanh approximation is close but not identical.
    Tensor approx = gelu(Tensor::vector({1.0}), GeluMode::kTanh);
    CHECK(std::abs(approx(0) - 0.8413447460685429) < 1e-3);
}

TEST_CASE("backward basics") {
    Rng rng(17);
    Tensor p = random_tensor({5}, rng);
    p.set_requires_grad(true);

    // loss = sum(p) -> grad all ones.
    Tensor loss = sum(p);
    loss.backward();
    CHECK((p.grad() - 1.0).abs().maxCoeff() == 0.0);

    // loss = p.p -> grad 2p (grads accumulate; zero first).
    p.zero_grad();
    Tensor loss2 = dot(p, p);
    loss2.backward();
    CHECK((p.grad() - 2.0 * p.values()).abs().maxCoeff() < 1e-12);

    // Non-scalar root rejected.
    Tensor m = random_tensor({2, 2}, rng);
    m.set_requires_grad(true);
    Tensor y = mul_scalar(m, 2.0);
    CHECK_THROWS_AS(y.backward(), ContractError);
}

TEST_CASE("repeated backward on one graph is rejected") {
    Tensor p = Tensor::vector({1.0, 2.0});
    p.set_requires_grad(true);
    Tensor loss = sum(mul(p, p));
    loss.backward();
    CHECK_THROWS_AS(loss.backward(), ContractError);

    // A fresh graph over the same leaf accumulates additively.
    ArrayX first = p.grad();
    Tensor loss2 = sum(mul(p, p));
    loss2.backward();
    CHECK((p.grad() - 2.0 * first).abs().maxCoeff() < 1e-12);
}

TEST_CASE("gradients match central finite differences across ops") {
    Rng rng(23);
    struct Case {
        const char* name;
        std::function<Tensor(const Tensor&)> f;
        Shape shape;
        Scalar tol;
    };
    Rng wr(29);
    Tensor w = random_tensor({4, 3}, wr);
    Tensor rv = random_tensor({4}, wr);
    std::vector<Index> gather_idx = {2, 0, 2, 1};

    std::vector<Case> cases = {
        {"add+mul", [&](const Tensor& x) { return sum(mul(add(x, x), x)); }, {3, 4}, 1e-6},
        {"div", [&](const Tensor& x) { return sum(div(x, add_scalar(mul(x, x), 1.0))); },
         {5}, 1e-6},
        {"exp", [](const Tensor& x) { return sum(exp(x)); }, {6}, 1e-6},
        {"log", [](const Tensor& x) { return sum(log(add_scalar(mul(x, x), 1.0))); }, {6}, 1e-6},
        {"sqrt", [](const Tensor& x) { return sum(sqrt(add_scalar(mul(x, x), 1.0))); }, {6}, 1e-6},
        {"tanh", [](const Tensor& x) { return sum(tanh(x)); }, {6}, 1e-6},
        {"erf", [](const Tensor& x) { return sum(erf(x)); }, {6}, 1e-6},
        {"gelu_tanh", [](const Tensor& x) { return sum(gelu(x, GeluMode::kTanh)); }, {6}, 1e-6},
        {"gelu_exact", [](const Tensor& x) { return sum(gelu(x, GeluMode::kExact)); }, {6}, 1e-6},
        {"matmul", [&](const Tensor& x) { return sum(matmul(x, w)); }, {2, 4}, 1e-6},
        {"matmul_nt", [&](const Tensor& x) { return sum(matmul_nt(x, w)); }, {2, 3}, 1e-6},
        {"dot", [&](const Tensor& x) { return dot(x, x); }, {5}, 1e-6},
        {"mean", [](const Tensor& x) { return mean(mul(x, x)); }, {7}, 1e-6},
        {"max_over_rows", [](const Tensor& x) { return sum(max_over_rows(x)); }, {4, 3}, 1e-5},
        {"mean_over_rows", [](const Tensor& x) { return sum(mul(mean_over_rows(x),
                                                                mean_over_rows(x))); },
         {4, 3}, 1e-6},
        {"reshape", [](const Tensor& x) { return sum(mul(reshape(x, {6}), reshape(x, {6}))); },
         {2, 3}, 1e-6},
        {"slice_rows", [](const Tensor& x) { return sum(mul(slice_rows(x, 1, 2),
                                                            slice_rows(x, 0, 2))); },
         {4, 3}, 1e-6},
        {"slice_cols", [](const Tensor& x) { return sum(mul(slice_cols(x, 1, 2),
                                                            slice_cols(x, 0, 2))); },
         {3, 4}, 1e-6},
        {"get_row", [](const Tensor& x) { return dot(get_row(x, 1), get_row(x, 2)); },
         {4, 3}, 1e-6},
        {"concat_rows", [](const Tensor& x) {
             std::vector<Tensor> parts = {x, mul_scalar(x, 2.0)};
             Tensor c = concat_rows(parts);
             return sum(mul(c, c));
         }, {2, 3}, 1e-6},
        {"concat_cols", [](const Tensor& x) {
             std::vector<Tensor> parts = {x, mul_scalar(x, -1.5)};
             Tensor c = concat_cols(parts);
             return sum(mul(c, c));
         }, {3, 2}, 1e-6},
        {"gather_rows", [&](const Tensor& x) {
             Tensor g = gather_rows(x, gather_idx);
             return sum(mul(g, g));
         }, {4, 3}, 1e-6},
        {"add_rowvec", [&](const Tensor& x) { return sum(mul(add_rowvec(x, rv), x)); },
         {3, 4}, 1e-6},
        {"softmax_vec", [](const Tensor& x) { return sum(mul(softmax(x), softmax(x))); },
         {5}, 1e-5},
        {"softmax_rows", [](const Tensor& x) { return sum(mul(softmax(x, 1), softmax(x, 1))); },
         {3, 4}, 1e-5},
        {"softmax_cols", [](const Tensor& x) { return sum(mul(softmax(x, 0), softmax(x, 0))); },
         {3, 4}, 1e-5},
        {"log_softmax_rows", [](const Tensor& x) {
             Tensor ls = log_softmax(x, 1);
             return sum(mul(ls, ls));
         }, {3, 4}, 1e-5},
        {"log_softmax_cols", [](const Tensor& x) {
             Tensor ls = log_softmax(x, 0);
             return sum(mul(ls, ls));
         }, {3, 4}, 1e-5},
        {"normalize_rows", [](const Tensor& x) {
             Tensor n = normalize_rows(x);
             return sum(mul(n, mul_scalar(n, 0.5)));
         }, {3, 4}, 1e-5},
        {"layer_norm_x", [&](const Tensor& x) {
             Tensor gm = Tensor::constant({3}, 1.3);
             Tensor bt = Tensor::constant({3}, -0.2);
             Tensor ln = layer_norm(x, gm, bt, 1e-5);
             return sum(mul(ln, ln));
         }, {4, 3}, 1e-5},
        {"cosine", [&](const Tensor& x) {
             Tensor u = slice_rows(reshape(x, {2, 3}), 0, 1);
             Tensor v = slice_rows(reshape(x, {2, 3}), 1, 1);
             return cosine_similarity(reshape(u, {3}), reshape(v, {3}));
         }, {6}, 1e-5},
        {"clamp_min", [](const Tensor& x) { return sum(mul(clamp_min(x, 0.25), x)); }, {6}, 1e-5},
    };

    for (const auto& c : cases) {
        CAPTURE(c.name);
        // >= 20 random inputs per differentiable operation.
        for (int trial = 0; trial < 20; ++trial) {
            Tensor x = random_tensor(c.shape, rng);
            const Scalar err = grad_check(c.f, x, 1e-5);
            CHECK_MESSAGE(err <= 1e-4, c.name, " trial ", trial, " rel err ", err);
        }
    }
}

TEST_CASE("grad_check on composites from the contract") {
    Rng rng(31);
    // f = sum: error ~ 0.
    Tensor x = random_tensor({6}, rng);
    CHECK(grad_check([](const Tensor& t) { return sum(t); }, x) <= 1e-10);

    // f = softmax-then-pick-first.
    for (int trial = 0; trial < 20; ++trial) {
        Tensor y = random_tensor({5}, rng);
        const Scalar err = grad_check(
            [](const Tensor& t) {
                Tensor basis = Tensor::vector({1.0, 0.0, 0.0, 0.0, 0.0});
                return dot(softmax(t), basis);
            },
            y);
        CHECK(err <= 1e-4);
    }
}

TEST_CASE("gradient flows only into subgraphs that require it") {
    Rng rng(41);
    Tensor frozen = random_tensor({3, 3}, rng);  // requires_grad stays false
    Tensor live = random_tensor({3, 3}, rng);
    live.set_requires_grad(true);

    Tensor out = sum(matmul(frozen, live));
    out.backward();
    CHECK(live.has_grad());
    CHECK_FALSE(frozen.has_grad());
}

TEST_CASE("determinism: same seed, bit-identical tensors and ops") {
    Rng a(123), b(123);
    Tensor ta = Tensor::randn({4, 4}, a, 0.0, 0.5);
    Tensor tb = Tensor::randn({4, 4}, b, 0.0, 0.5);
    CHECK((ta.values() == tb.values()).all());

    Tensor ra = softmax(matmul(ta, ta), 1);
    Tensor rb = softmax(matmul(tb, tb), 1);
    CHECK((ra.values() == rb.values()).all());
}

TEST_CASE("detach cuts the graph") {
    Tensor p = Tensor::vector({1.0, 2.0});
    p.set_requires_grad(true);
    Tensor d = mul(p, p).detach();
    CHECK_FALSE(d.requires_grad());
    Tensor loss = sum(d);
    loss.backward();  // nothing trainable reachable; no-op
    CHECK_FALSE(p.has_grad());
}
