#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "seqlab/tensor.hpp"

using namespace seqlab;

namespace {

using D = double;
using Ptr = TensorPtr<D>;

Ptr make_param(Tape<D>& tape, int rows, int cols, std::uint64_t seed, double scale = 1.0) {
    auto t = tape.tensor(rows, cols, /*requires_grad=*/true);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : t->data) v = scale * u(rng);
    return t;
}

// central finite differences against the analytic gradient of a scalar loss
void check_gradients(const std::vector<Ptr>& params,
                     const std::function<Ptr(Tape<D>&)>& build, double tol = 1e-7) {
    Tape<D> tape;
    for (auto& p : params) p->zero_grad();
    auto loss = build(tape);
    tape.backward(loss);

    const double h = 1e-6;
    for (auto& p : params) {
        for (std::size_t i = 0; i < p->data.size(); ++i) {
            const double saved = p->data[i];
            Tape<D> t1;
            p->data[i] = saved + h;
            const double lp = build(t1)->data[0];
            Tape<D> t2;
            p->data[i] = saved - h;
            const double lm = build(t2)->data[0];
            p->data[i] = saved;
            const double fd = (lp - lm) / (2 * h);
            CHECK(p->grad[i] == doctest::Approx(fd).epsilon(tol).scale(1.0));
        }
    }
}

// scalar-valued reduction so every op test ends in a [1 x 1] loss
Ptr reduce_sum(Tape<D>& tape, const Ptr& x) {
    auto ones_c = tape.tensor(x->cols, 1, false);
    for (auto& v : ones_c->data) v = 1.0;
    auto col = tape.matmul(x, ones_c); // [rows x 1]
    auto ones_r = tape.tensor(1, x->rows, false);
    for (auto& v : ones_r->data) v = 1.0;
    return tape.matmul(ones_r, col); // [1 x 1]
}

} // namespace

TEST_CASE("gradients: matmul chain") {
    Tape<D> init;
    auto a = make_param(init, 3, 4, 1);
    auto b = make_param(init, 4, 5, 2);
    check_gradients({a, b}, [&](Tape<D>& t) { return reduce_sum(t, t.gelu(t.matmul(a, b))); });
}

TEST_CASE("gradients: matmul_nt, add, add_rowwise, scale") {
    Tape<D> init;
    auto a = make_param(init, 3, 4, 3);
    auto b = make_param(init, 5, 4, 4);
    auto c = make_param(init, 3, 5, 5);
    auto bias = make_param(init, 1, 5, 6);
    check_gradients({a, b, c, bias}, [&](Tape<D>& t) {
        auto x = t.add(t.matmul_nt(a, b), c);
        x = t.add_rowwise(x, bias);
        x = t.scale(x, 0.7);
        return reduce_sum(t, t.gelu(x));
    });
}

TEST_CASE("gradients: softmax_rows with additive mask") {
    Tape<D> init;
    auto a = make_param(init, 2, 4, 7);
    std::vector<D> mask{0, 0, -1e9, 0, 0, -1e9, 0, 0};
    check_gradients({a}, [&](Tape<D>& t) {
        auto y = t.softmax_rows(a, &mask);
        auto w = make_param(t, 2, 4, 8); // fixed weights (same seed each rebuild)
        w->requires_grad = false;
        return reduce_sum(t, t.gelu(t.add(y, w)));
    });
}

TEST_CASE("gradients: layer_norm") {
    Tape<D> init;
    auto x = make_param(init, 3, 6, 9);
    auto gain = make_param(init, 1, 6, 10);
    auto bias = make_param(init, 1, 6, 11);
    check_gradients({x, gain, bias}, [&](Tape<D>& t) {
        return reduce_sum(t, t.gelu(t.layer_norm(x, gain, bias)));
    }, 1e-5);
}

TEST_CASE("gradients: gather_rows scatter-adds with repeated indices") {
    Tape<D> init;
    auto table = make_param(init, 5, 3, 12);
    std::vector<int> idx{0, 2, 2, 4, 0, 0};
    check_gradients({table}, [&](Tape<D>& t) {
        return reduce_sum(t, t.gelu(t.gather_rows(table, idx)));
    });
}

TEST_CASE("gradients: slice and assemble") {
    Tape<D> init;
    auto x = make_param(init, 4, 6, 13);
    check_gradients({x}, [&](Tape<D>& t) {
        auto top = t.slice(x, 0, 2, 0, 6);
        auto bottom = t.slice(x, 2, 2, 0, 6);
        auto swapped = t.assemble({{bottom, 0, 0}, {top, 2, 0}}, 4, 6);
        return reduce_sum(t, t.gelu(swapped));
    });
}

TEST_CASE("gradients: rowwise_dot and gather_pairs") {
    Tape<D> init;
    auto a = make_param(init, 4, 3, 14);
    auto b = make_param(init, 4, 3, 15);
    auto src = make_param(init, 5, 4, 16);
    std::vector<int> rows{0, 1, 2, 3, 4, 0}, cols{0, 1, 2, 3, 0, 2};
    check_gradients({a, b, src}, [&](Tape<D>& t) {
        auto d = t.rowwise_dot(a, b); // [4 x 1]
        auto g = t.gather_pairs(src, rows, cols, 2, 3);
        auto gsum = reduce_sum(t, t.gelu(g));
        return t.add(reduce_sum(t, t.gelu(d)), gsum);
    });
}

TEST_CASE("gradients: masked_cross_entropy, sampled_bce, bpr") {
    Tape<D> init;
    auto logits = make_param(init, 4, 6, 17);
    std::vector<int> targets{1, 3, 0, 5};
    std::vector<char> active{1, 0, 1, 1};
    check_gradients({logits},
                    [&](Tape<D>& t) { return t.masked_cross_entropy(logits, targets, active); });

    Tape<D> init2;
    auto pos = make_param(init2, 5, 1, 18);
    auto neg = make_param(init2, 5, 1, 19);
    check_gradients({pos, neg}, [&](Tape<D>& t) { return t.sampled_bce(pos, neg); });
    check_gradients({pos, neg}, [&](Tape<D>& t) { return t.bpr(pos, neg); });
}

TEST_CASE("loss values: analytic spot checks") {
    Tape<D> tape;
    auto pos = tape.tensor(1, 1, true);
    auto neg = tape.tensor(1, 1, true);
    pos->data[0] = 1.0;
    neg->data[0] = 0.0;
    // -ln sigmoid(1 - 0) = 0.313261687...
    CHECK(tape.bpr(pos, neg)->data[0] == doctest::Approx(0.3132616875182228).epsilon(1e-12));
    // -ln sigmoid(1) - ln(1 - sigmoid(0)) = 0.313261... + ln 2
    CHECK(tape.sampled_bce(pos, neg)->data[0] ==
          doctest::Approx(0.3132616875182228 + std::log(2.0)).epsilon(1e-12));

    // uniform logits: CE = ln(num classes)
    auto logits = tape.tensor(2, 5, true);
    CHECK(tape.masked_cross_entropy(logits, {0, 3}, {1, 1})->data[0] ==
          doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("gradient accumulation supports parameter reuse") {
    // f(w) = sum(gelu(w)) + sum(gelu(w)) must produce twice the single-use grad
    Tape<D> init;
    auto w = make_param(init, 2, 3, 20);

    Tape<D> t1;
    w->zero_grad();
    t1.backward(reduce_sum(t1, t1.gelu(w)));
    auto single = w->grad;

    Tape<D> t2;
    w->zero_grad();
    auto loss = t2.add(reduce_sum(t2, t2.gelu(w)), reduce_sum(t2, t2.gelu(w)));
    t2.backward(loss);
    for (std::size_t i = 0; i < single.size(); ++i)
        CHECK(w->grad[i] == doctest::Approx(2.0 * single[i]).epsilon(1e-12));
}

TEST_CASE("dropout: inverted scaling, determinism, pass-through when disabled") {
    Tape<D> tape;
    auto x = tape.tensor(50, 40, false);
    for (auto& v : x->data) v = 1.0;

    std::mt19937_64 rng1(99), rng2(99), rng3(100);
    auto y1 = tape.dropout(x, 0.5, rng1, true);
    auto y2 = tape.dropout(x, 0.5, rng2, true);
    CHECK(y1->data == y2->data); // same rng stream, same mask

    auto y3 = tape.dropout(x, 0.5, rng3, true);
    CHECK(y1->data != y3->data);

    double mean = 0;
    int zeros = 0;
    for (double v : y1->data) {
        mean += v;
        if (v == 0.0) ++zeros;
        else CHECK(v == doctest::Approx(2.0)); // kept entries scaled by 1/(1-rate)
    }
    mean /= (double)y1->data.size();
    CHECK(mean == doctest::Approx(1.0).epsilon(0.1));
    CHECK(zeros > 700); // ~1000 of 2000

    std::mt19937_64 rng4(1);
    auto y4 = tape.dropout(x, 0.5, rng4, false);
    CHECK(y4->data == x->data);
}

TEST_CASE("grad_enabled=false records no backward nodes") {
    Tape<D> tape;
    tape.grad_enabled = false;
    auto a = make_param(tape, 3, 3, 21);
    auto b = make_param(tape, 3, 3, 22);
    auto c = tape.gelu(tape.matmul(a, b));
    CHECK_FALSE(c->requires_grad);
    CHECK(tape.num_nodes() == 0);
}

TEST_CASE("backward contract errors") {
    Tape<D> tape;
    auto a = make_param(tape, 2, 2, 23);
    CHECK_THROWS_AS(tape.backward(a), ContractError); // not scalar
    auto fixed = tape.tensor(1, 1, false);
    CHECK_THROWS_AS(tape.backward(fixed), ContractError); // not connected
    auto b = make_param(tape, 2, 3, 24);
    CHECK_THROWS_AS(tape.matmul(b, b), ShapeError);
}

TEST_CASE("Adam: first-step update is -lr * sign(grad) up to eps") {
    Tape<D> tape;
    auto p = tape.tensor(1, 2, true);
    p->data = {1.0, -2.0};
    p->grad = {0.3, -0.7};
    Adam<D> adam(AdamConfig<D>{0.01, 0.9, 0.999, 1e-8});
    adam.step({p});
    // bias-corrected mhat = g, vhat = g^2 -> step = lr * g / (|g| + eps)
    CHECK(p->data[0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-12));
    CHECK(p->data[1] == doctest::Approx(-2.0 + 0.01 * 0.7 / (0.7 + 1e-8)).epsilon(1e-12));
    CHECK(adam.t() == 1);
}

TEST_CASE("Adam: two constant-gradient steps match a hand computation") {
    const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.5;
    Tape<D> tape;
    auto p = tape.tensor(1, 1, true);
    p->data[0] = 0.0;
    Adam<D> adam(AdamConfig<D>{lr, b1, b2, eps});

    double m = 0, v = 0, x = 0;
    for (int t = 1; t <= 2; ++t) {
        p->grad[0] = g;
        adam.step({p});
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        x -= lr * mhat / (std::sqrt(vhat) + eps);
        CHECK(p->data[0] == doctest::Approx(x).epsilon(1e-14));
    }
}

TEST_CASE("float and double tapes agree to float precision") {
    Tape<float> tf;
    Tape<double> td;
    Tape<D> seed_helper;
    auto ad = make_param(seed_helper, 3, 3, 30);
    auto af = tf.tensor(3, 3, true);
    for (std::size_t i = 0; i < af->data.size(); ++i) af->data[i] = (float)ad->data[i];

    auto bf = tf.gelu(af);
    auto bd = td.gelu(ad);
    for (std::size_t i = 0; i < bf->data.size(); ++i)
        CHECK((double)bf->data[i] == doctest::Approx(bd->data[i]).epsilon(1e-5));
}
