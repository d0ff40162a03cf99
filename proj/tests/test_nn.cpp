#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "setle/nn.hpp"
#include "setle/rng.hpp"
#include "setle/tensor.hpp"

using namespace setle;

TEST_CASE("elementwise ops and backward") {
    Tensor a = Tensor::from_values({3}, {1.0, -2.0, 3.0}, true);
    Tensor b = Tensor::from_values({3}, {0.5, 4.0, -1.0}, true);
    Tensor loss = sum(mul(add(a, b), sub(a, b)));  // sum(a^2 - b^2)
    loss.backward();
    CHECK(loss.item() == doctest::Approx(1.0 - 0.25 + 4.0 - 16.0 + 9.0 - 1.0));
    for (int i = 0; i < 3; ++i) {
        CHECK(a.grad()[i] == doctest::Approx(2.0 * a.at(i)));
        CHECK(b.grad()[i] == doctest::Approx(-2.0 * b.at(i)));
    }
}

TEST_CASE("gcn_layer: self-loop identity case") {
    // single node, no neighbors: normalization is 1, output = H*W
    Tensor h = Tensor::from_values({1, 2}, {2.0, -1.0});
    Tensor w = Tensor::from_values({2, 2}, {1.0, 2.0, 3.0, 4.0});
    Tensor a = normalized_adjacency(1, {});
    Tensor out = gcn_layer(h, a, w, Activation::Identity);
    CHECK(out.at2(0, 0) == doctest::Approx(2.0 * 1.0 - 1.0 * 3.0));
    CHECK(out.at2(0, 1) == doctest::Approx(2.0 * 2.0 - 1.0 * 4.0));
}

TEST_CASE("gcn_layer: two connected nodes average with degree 2") {
    // with self-loops both nodes have degree 2, so each row is 0.5*(h1+h2)*W
    Tensor h = Tensor::from_values({2, 2}, {1.0, 0.0, 0.0, 1.0});
    Tensor w = Tensor::from_values({2, 2}, {1.0, 0.0, 0.0, 1.0});
    Tensor a = normalized_adjacency(2, {{0, 1}});
    Tensor out = gcn_layer(h, a, w, Activation::Identity);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) CHECK(out.at2(r, c) == doctest::Approx(0.5));
}

TEST_CASE("gcn_layer: zero W gives zero pre-activation") {
    Tensor h = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor w = Tensor::zeros({3, 4});
    Tensor out = gcn_layer(h, normalized_adjacency(2, {{0, 1}}), w, Activation::Identity);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.at(i) == 0.0);
}

TEST_CASE("gcn_layer with A=I equals plain linear map exactly") {
    Rng rng(7);
    std::vector<double> hv(12), wv(12);
    for (auto& x : hv) x = rng.next_gaussian();
    for (auto& x : wv) x = rng.next_gaussian();
    Tensor h = Tensor::from_values({4, 3}, hv);
    Tensor w = Tensor::from_values({3, 4}, wv);
    Tensor a = normalized_adjacency(4, {});
    Tensor gcn = gcn_layer(h, a, w, Activation::Identity);
    Tensor lin = matmul(h, w);
    for (std::size_t i = 0; i < gcn.size(); ++i) CHECK(gcn.at(i) == lin.at(i));
}

TEST_CASE("triplet loss point values") {
    CHECK(triplet_loss_value(0.3, 0.3, 0.5) == doctest::Approx(0.5));
    CHECK(triplet_loss_value(0.2, 1.0, 0.5) == doctest::Approx(0.0));
    CHECK(triplet_loss_value(0.5, 0.8, 0.6) == doctest::Approx(0.3));
    CHECK_THROWS_AS(triplet_loss_value(0.1, 0.1, -0.5), ConfigError);

    Tensor dap = Tensor::scalar(0.5), dan = Tensor::scalar(0.8);
    CHECK(triplet_loss(dap, dan, 0.6).item() == doctest::Approx(0.3));
}

TEST_CASE("triplet loss nondecreasing in margin for fixed distances") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        double dap = rng.next_double() * 2.0, dan = rng.next_double() * 2.0;
        double m1 = 0.1 + rng.next_double(), m2 = m1 + rng.next_double();
        CHECK(triplet_loss_value(dap, dan, m2) >= triplet_loss_value(dap, dan, m1));
    }
}

TEST_CASE("info_nce point values") {
    // all sims equal, |Z| = 4 -> ln 4
    CHECK(info_nce_value(0.3, {0.3, 0.3, 0.3, 0.3}, 0.7) == doctest::Approx(std::log(4.0)));
    // dominant positive -> ~0
    CHECK(info_nce_value(50.0, {50.0, 0.1, 0.2}, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
    // singleton -> 0
    CHECK(info_nce_value(0.9, {0.9}, 0.5) == doctest::Approx(0.0));
    CHECK_THROWS_AS(info_nce_value(0.1, {}, 0.5), ConfigError);

    Tensor pos = Tensor::scalar(0.3);
    Tensor all = Tensor::from_values({4}, {0.3, 0.3, 0.3, 0.3});
    CHECK(info_nce(pos, all, 0.7).item() == doctest::Approx(std::log(4.0)));
}

TEST_CASE("softmax is a probability vector") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 1 + static_cast<int>(rng.next_below(8));
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = rng.next_gaussian() * 10.0;
        Tensor sm = softmax(Tensor::from_values({n}, v));
        double total = 0.0;
        for (std::size_t i = 0; i < sm.size(); ++i) {
            CHECK(sm.at(i) >= 0.0);
            total += sm.at(i);
        }
        CHECK(std::abs(total - 1.0) <= 1e-9);
    }
}

TEST_CASE("adam: zero gradient and zero weight decay leaves parameters unchanged") {
    ParameterStore store;
    Tensor p = store.create("p", {3}, {1.0, 2.0, 3.0});
    AdamOptimizer opt(store, {});
    opt.step();
    CHECK(p.at(0) == 1.0);
    CHECK(p.at(1) == 2.0);
    CHECK(p.at(2) == 3.0);
}

TEST_CASE("adam: bias-corrected first step moves by -lr") {
    ParameterStore store;
    Tensor p = store.create("theta", {1}, {0.5});
    AdamConfig cfg;
    cfg.learning_rate = 0.001;
    AdamOptimizer opt(store, cfg);
    p.mutable_grad()[0] = 1.0;
    opt.step();
    CHECK(p.at(0) == doctest::Approx(0.5 - 0.001).epsilon(1e-9));
}

TEST_CASE("adam: accumulation window gates updates") {
    ParameterStore store;
    Tensor p = store.create("theta", {1}, {1.0});
    AdamConfig cfg;
    cfg.accumulation_window = 20;
    AdamOptimizer opt(store, cfg);
    for (int i = 1; i <= 60; ++i) {
        p.mutable_grad()[0] += 0.05;  // as if a backward pass deposited gradient
        bool updated = opt.step();
        CHECK(updated == (i % 20 == 0));
    }
    CHECK(opt.update_count() == 3);
}

TEST_CASE("adam: monotone descent on a quadratic bowl after warm-up") {
    ParameterStore store;
    Tensor p = store.create("x", {2}, {3.0, -2.0});
    AdamConfig cfg;
    cfg.learning_rate = 0.05;
    AdamOptimizer opt(store, cfg);
    auto loss_fn = [&]() { return sum(mul(p, p)); };
    double prev = 1e300;
    for (int i = 0; i < 100; ++i) {
        store.zero_grads();
        Tensor loss = loss_fn();
        loss.backward();
        opt.step();
        double cur = loss_fn().item();
        if (i >= 5) CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
    CHECK(prev < 1e-2);
}

TEST_CASE("adam: NaN gradient reports the parameter name") {
    ParameterStore store;
    Tensor p = store.create("bad_param", {1}, {1.0});
    AdamOptimizer opt(store, {});
    p.mutable_grad()[0] = std::nan("");
    try {
        opt.step();
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("bad_param") != std::string::npos);
    }
}

TEST_CASE("polyak update") {
    Tensor target = Tensor::from_values({2}, {0.0, 0.0});
    Tensor online = Tensor::from_values({2}, {1.0, 1.0});
    SUBCASE("tau = 1 is a hard update") {
        polyak_update(target, online, 1.0);
        CHECK(target.at(0) == 1.0);
    }
    SUBCASE("single step blends by tau") {
        polyak_update(target, online, 0.005);
        CHECK(target.at(0) == doctest::Approx(0.005));
    }
    SUBCASE("repeated updates follow 1-(1-tau)^n exactly") {
        const double tau = 0.1;
        for (int n = 1; n <= 25; ++n) {
            polyak_update(target, online, tau);
            const double expect = 1.0 - std::pow(1.0 - tau, n);
            CHECK(target.at(0) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("shape mismatch rejected") {
        Tensor bad = Tensor::from_values({3}, {1, 2, 3});
        CHECK_THROWS_AS(polyak_update(target, bad, 0.5), ConfigError);
    }
}

TEST_CASE("grad_check: polynomial sanity") {
    Tensor x = Tensor::from_values({1}, {3.0}, true);
    auto f = [&]() { return mul(x, x); };
    double err = grad_check(f, {x}, 1e-5);
    CHECK(err < 1e-8);
    // analytic derivative of x^2 at 3 is 6
    x.zero_grad();
    f().backward();
    CHECK(x.grad()[0] == doctest::Approx(6.0));
}

TEST_CASE("grad_check: composite network paths") {
    Rng rng(42);
    ParameterStore store;
    Linear l1 = make_linear(store, "l1", 4, 5, rng.split(1));
    Linear l2 = make_linear(store, "l2", 5, 3, rng.split(2));
    std::vector<double> xv(8);
    for (auto& v : xv) v = rng.next_gaussian();
    Tensor x = Tensor::from_values({2, 4}, xv, true);
    auto f = [&]() {
        Tensor h = elu(l1(x));
        Tensor o = tanh_op(l2(h));
        Tensor sm = softmax(row(o, 0));
        return add(logsumexp(row(o, 1)), pick(log_op(sm), 1));
    };
    std::vector<Tensor> params = {x, l1.weight, l1.bias, l2.weight, l2.bias};
    CHECK(grad_check(f, params, 1e-5) < 1e-7);
}

TEST_CASE("grad_check: normalization and distance geometry") {
    Rng rng(5);
    std::vector<double> av(6), bv(6);
    for (auto& v : av) v = rng.next_gaussian() + 0.5;
    for (auto& v : bv) v = rng.next_gaussian() - 0.5;
    Tensor a = Tensor::from_values({6}, av, true);
    Tensor b = Tensor::from_values({6}, bv, true);
    auto f = [&]() {
        Tensor d = euclidean_distance(l2_normalize(a), l2_normalize(b));
        Tensor c = cosine_similarity(a, b);
        return add(d, mul(c, c));
    };
    CHECK(grad_check(f, {a, b}, 1e-5) < 1e-7);
}

TEST_CASE("checkpoint round-trip preserves values and names") {
    const std::string path = "test_nn_ckpt.bin";
    double csum = 0.0;
    {
        ParameterStore store;
        Rng rng(9);
        store.create_glorot("b_mat", 3, 4, rng.split(0));
        store.create("a_vec", {2}, {0.25, -0.75});
        store.create_identity("c_eye", 3);
        csum = store.checksum();
        store.save(path);
    }
    ParameterStore loaded;
    loaded.load(path);
    CHECK(loaded.all().size() == 3);
    CHECK(loaded.get("a_vec").at(1) == doctest::Approx(-0.75));
    CHECK(loaded.checksum() == doctest::Approx(csum).epsilon(1e-6));
    // lexicographic serialization order: re-saving must be byte-identical
    const std::string path2 = "test_nn_ckpt2.bin";
    loaded.save(path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("checkpoint: truncated file rejected") {
    const std::string path = "test_nn_trunc.bin";
    {
        ParameterStore store;
        store.create("w", {4}, {1, 2, 3, 4});
        store.save(path);
    }
    // chop off the last 6 bytes
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 6));
    out.close();
    ParameterStore store2;
    CHECK_THROWS_AS(store2.load(path), DataError);
    std::remove(path.c_str());
}

TEST_CASE("gradient accumulation across separate backward calls adds up") {
    ParameterStore store;
    Tensor p = store.create("p", {1}, {2.0});
    for (int i = 0; i < 3; ++i) {
        Tensor loss = mul(p, p);
        loss.backward();
    }
    CHECK(p.grad()[0] == doctest::Approx(3.0 * 4.0));  // 3 passes of d(x^2)=4
}
