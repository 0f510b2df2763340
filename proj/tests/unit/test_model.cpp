#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fg/core/errors.hpp"
#include "fg/model/checkpoint.hpp"
#include "fg/model/network.hpp"
#include "../support/gradcheck.hpp"
#include "../support/temp_dir.hpp"

using namespace fg;
using diff::Tape;
using diff::Tensor;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(r, c);
    for (auto& x : m.data) x = g(rng);
    return m;
}

Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

// Random symmetric 0/1 graph with self-loops.
Matrix random_graph(std::mt19937_64& rng, std::size_t n) {
    std::bernoulli_distribution b(0.4);
    Matrix m = identity(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (b(rng)) m(i, j) = m(j, i) = 1.0;
    return m;
}

Matrix permute_rows(const Matrix& x, const std::vector<std::size_t>& p) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) std::copy(x.row(p[i]).begin(), x.row(p[i]).end(), out.row(i).begin());
    return out;
}

Matrix permute_both(const Matrix& a, const std::vector<std::size_t>& p) {
    Matrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out(i, j) = a(p[i], p[j]);
    return out;
}

ModelConfig small_config(std::size_t m, std::size_t m1 = 32) {
    ModelConfig c;
    c.n_factors = m;
    c.context_dim = m1;
    return c;
}

void zero(Dense& d) {
    for (auto& v : d.w.mutable_values()) v = 0.0;
    for (auto& v : d.b.mutable_values()) v = 0.0;
}

// Minimal Adam used only to drive the fitting checks below.
struct TestAdam {
    std::vector<Tensor> params;
    std::vector<std::vector<double>> m, v;
    double lr;
    int t = 0;
    TestAdam(std::vector<Tensor> p, double lr_) : params(std::move(p)), lr(lr_) {
        for (auto& x : params) {
            m.emplace_back(x.size(), 0.0);
            v.emplace_back(x.size(), 0.0);
        }
    }
    void step() {
        ++t;
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto val = params[i].mutable_values();
            auto g = params[i].grad();
            for (std::size_t j = 0; j < val.size(); ++j) {
                m[i][j] = 0.9 * m[i][j] + 0.1 * g[j];
                v[i][j] = 0.999 * v[i][j] + 0.001 * g[j] * g[j];
                const double mh = m[i][j] / (1 - std::pow(0.9, t));
                const double vh = v[i][j] / (1 - std::pow(0.999, t));
                val[j] -= lr * mh / (std::sqrt(vh) + 1e-12);
            }
            params[i].zero_grad();
        }
    }
};

}  // namespace

TEST_CASE("factor gate keeps columns at or above the threshold") {
    Tape tape;
    std::mt19937_64 rng(1);
    Tensor raw = Tensor::from(random_matrix(rng, 6, 4));
    auto r = apply_factor_gate(tape, raw, Tensor::row({0.4, 0.3, 0.2, 0.1}), 0.15);
    CHECK(r.mask == std::vector<double>{1, 1, 1, 0});
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 3; ++j) CHECK(r.selected(i, j) == raw(i, j));
        CHECK(r.selected(i, 3) == 0.0);
    }
}

TEST_CASE("factor gate at zero threshold is the identity") {
    Tape tape;
    std::mt19937_64 rng(2);
    ModelParams p = ModelParams::init(small_config(5), 3);
    Tensor raw = Tensor::from(random_matrix(rng, 8, 5));
    auto r = select_factors(tape, raw, 0.0, p.selection_hidden, p.selection_out);
    CHECK(r.mask == std::vector<double>(5, 1.0));
    CHECK(r.selected.to_vector() == raw.to_vector());
    double total = 0.0;
    for (double s : r.scores.values()) total += s;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("factor gate falls back to the argmax factor") {
    Tape tape;
    std::mt19937_64 rng(3);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ModelParams p = ModelParams::init(small_config(5), seed);
        Tensor raw = Tensor::from(random_matrix(rng, 8, 5));
        auto r = select_factors(tape, raw, 0.99, p.selection_hidden, p.selection_out);
        CHECK(std::accumulate(r.mask.begin(), r.mask.end(), 0.0) == 1.0);
        auto s = r.scores.values();
        const auto best = std::max_element(s.begin(), s.end()) - s.begin();
        CHECK(r.mask[static_cast<std::size_t>(best)] == 1.0);
    }
    Tensor raw = Tensor::from(random_matrix(rng, 4, 4));
    auto tie = apply_factor_gate(tape, raw, Tensor::row({0.25, 0.25, 0.25, 0.25}), 0.5);
    CHECK(tie.mask == std::vector<double>{1, 0, 0, 0});
    CHECK_THROWS_AS(apply_factor_gate(tape, Tensor::zeros(3, 0), Tensor::zeros(1, 0), 0.1), ValidationError);
    ModelParams p = ModelParams::init(small_config(2), 1);
    CHECK_THROWS_AS(select_factors(tape, Tensor::zeros(3, 0), 0.1, p.selection_hidden, p.selection_out),
                    ValidationError);
}

TEST_CASE("encode_context contracts") {
    std::mt19937_64 rng(4);
    ModelParams p = ModelParams::init(small_config(6), 5);
    Tape tape;
    for (std::size_t n : {2u, 7u, 50u}) {
        Tensor c = encode_context(tape, Tensor::from(random_matrix(rng, n, 6)), p.encoder_hidden, p.encoder_out);
        CHECK(c.rows() == n);
        CHECK(c.cols() == 32);
    }
    CHECK_THROWS_AS(encode_context(tape, Tensor::from(random_matrix(rng, 1, 6)), p.encoder_hidden, p.encoder_out),
                    ValidationError);

    const Matrix x = random_matrix(rng, 9, 6);
    std::vector<std::size_t> perm(9);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor a = encode_context(tape, Tensor::from(x), p.encoder_hidden, p.encoder_out);
    Tensor b = encode_context(tape, Tensor::from(permute_rows(x, perm)), p.encoder_hidden, p.encoder_out);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 32; ++j) CHECK(b(i, j) == doctest::Approx(a(perm[i], j)).epsilon(1e-12));

    zero(p.encoder_hidden);
    zero(p.encoder_out);
    Tensor z = encode_context(tape, Tensor::from(x), p.encoder_hidden, p.encoder_out);
    for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("gat_layer contracts") {
    std::mt19937_64 rng(6);
    ModelParams p = ModelParams::init(small_config(3, 4), 7);
    Tape tape;
    const Matrix c = random_matrix(rng, 5, 4);

    SUBCASE("identity adjacency attends only to self") {
        Tensor out = gat_layer(tape, Tensor::from(c), identity(5), p.gat_industry);
        Tensor h = diff::matmul(tape, Tensor::from(c), p.gat_industry.w);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 4; ++j) CHECK(out(i, j) == doctest::Approx(h(i, j)).epsilon(1e-14));
        Matrix c2 = c;
        for (auto& v : c2.row(3)) v += 10.0;
        Tensor out2 = gat_layer(tape, Tensor::from(c2), identity(5), p.gat_industry);
        for (std::size_t i = 0; i < 5; ++i) {
            if (i == 3) continue;
            for (std::size_t j = 0; j < 4; ++j) CHECK(out2(i, j) == out(i, j));
        }
    }
    SUBCASE("zero parameters give zero output") {
        GatParams g{Tensor::zeros(4, 4), Tensor::zeros(4, 1), Tensor::zeros(4, 1)};
        Tensor out = gat_layer(tape, Tensor::from(c), random_graph(rng, 5), g);
        for (double v : out.values()) CHECK(v == 0.0);
        Tensor neutral = relational_neutralize(tape, Tensor::from(c), random_graph(rng, 5), g);
        CHECK(neutral.to_vector() == c.data);
        CHECK(neutral.rows() == 5);
        CHECK(neutral.cols() == 4);
    }
    SUBCASE("exchangeable nodes get identical rows") {
        Matrix two(2, 4);
        for (std::size_t j = 0; j < 4; ++j) two(0, j) = two(1, j) = c(0, j);
        Tensor out = gat_layer(tape, Tensor::from(two), Matrix(2, 2, 1.0), p.gat_universe);
        for (std::size_t j = 0; j < 4; ++j) CHECK(out(0, j) == out(1, j));
    }
    SUBCASE("adjacency must carry self-loops and match n") {
        Matrix a = identity(5);
        a(2, 2) = 0.0;
        CHECK_THROWS_AS(gat_layer(tape, Tensor::from(c), a, p.gat_industry), ValidationError);
        CHECK_THROWS_AS(gat_layer(tape, Tensor::from(c), identity(4), p.gat_industry), DimensionError);
    }
}

TEST_CASE("neutralization with a GAT fitted to the identity leaves a near-zero residual") {
    std::mt19937_64 rng(8);
    const Matrix c = random_matrix(rng, 10, 4);
    ModelParams p = ModelParams::init(small_config(3, 4), 9);
    GatParams& g = p.gat_industry;
    // Gradient descent on ||C - C W||^2 with a step below 1 / lambda_max.
    double trace = 0.0;
    for (double v : c.data) trace += v * v;
    const double lr = 1.0 / (4.0 * trace);
    const Tensor ctx = Tensor::from(c);
    for (int it = 0; it < 20000; ++it) {
        Tape tape;
        Tensor res = relational_neutralize(tape, ctx, identity(10), g);
        tape.backward(diff::sum(tape, diff::square(tape, res)));
        auto w = g.w.mutable_values();
        auto gr = g.w.grad();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gr[i];
        g.w.zero_grad();
    }
    Tape tape(false);
    const double residual = diff::l2_norm(tape, relational_neutralize(tape, ctx, identity(10), g)).item();
    CHECK(residual < 1e-3);
}

TEST_CASE("deep factor heads") {
    std::mt19937_64 rng(10);
    ModelParams p = ModelParams::init(small_config(3, 4), 11);
    Tape tape;
    Tensor c = Tensor::from(random_matrix(rng, 6, 4));
    Tensor ci = Tensor::from(random_matrix(rng, 6, 4));
    Tensor cu = Tensor::from(random_matrix(rng, 6, 4));
    CHECK(p.head[0].w.rows() == 12);

    auto base = deep_factor_heads(tape, c, ci, cu, p.head);
    for (const auto& f : base) {
        CHECK(f.rows() == 6);
        CHECK(f.cols() == 1);
    }
    ModelParams q = p.clone();
    for (auto& v : q.head[0].w.mutable_values()) v += 0.5;
    auto perturbed = deep_factor_heads(tape, c, ci, cu, q.head);
    CHECK(perturbed[0].to_vector() != base[0].to_vector());
    for (std::size_t k = 1; k < kNumHorizons; ++k) CHECK(perturbed[k].to_vector() == base[k].to_vector());

    for (auto& h : q.head) zero(h);
    for (const auto& f : deep_factor_heads(tape, c, ci, cu, q.head))
        for (double v : f.values()) CHECK(v == 0.0);

    CHECK_THROWS_AS(deep_factor_heads(tape, c, ci, Tensor::from(random_matrix(rng, 6, 3)), p.head), DimensionError);
}

TEST_CASE("directional attention estimate") {
    std::mt19937_64 rng(12);
    Tape tape;
    SUBCASE("single factor") {
        ModelParams p = ModelParams::init(small_config(1), 13);
        const Matrix x = random_matrix(rng, 7, 1);
        auto e = directional_attention_estimate(tape, Tensor::from(x), std::vector<double>{1.0}, p.attention[0]);
        CHECK(e.a_bar.item() == 1.0);
        CHECK(e.f_hat.to_vector() == x.data);
    }
    SUBCASE("direction flip and simplex") {
        ModelParams p = ModelParams::init(small_config(4), 14);
        const Tensor x = Tensor::from(random_matrix(rng, 9, 4));
        const std::vector<double> d{1, -1, 1, -1}, nd{-1, 1, -1, 1};
        auto e = directional_attention_estimate(tape, x, d, p.attention[2]);
        auto f = directional_attention_estimate(tape, x, nd, p.attention[2]);
        for (std::size_t i = 0; i < 9; ++i) CHECK(f.f_hat(i, 0) == -e.f_hat(i, 0));
        double total = 0.0;
        for (double a : e.a_bar.values()) {
            CHECK(a >= 0.0);
            total += a;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t i = 0; i < 9; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < 4; ++j) row += e.attention(i, j);
            CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK_THROWS_AS(directional_attention_estimate(tape, x, std::vector<double>{1, 0, 1, 1}, p.attention[0]),
                        ValidationError);
        CHECK_THROWS_AS(directional_attention_estimate(tape, x, std::vector<double>{1, 1}, p.attention[0]),
                        DimensionError);
    }
}

TEST_CASE("attention map can be fitted to a hand-built directional target") {
    std::mt19937_64 rng(15);
    const std::vector<double> w{0.5, 0.3, 0.2}, d{1, -1, 1};
    const Matrix x = random_matrix(rng, 20, 3);
    std::vector<double> target(20, 0.0);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 3; ++j) target[i] += x(i, j) * w[j] * d[j];
    const Tensor raw = Tensor::from(x), f = Tensor::column(target);
    ModelParams p = ModelParams::init(small_config(3), 16);
    Dense& map = p.attention[0];
    TestAdam opt({map.w, map.b}, 0.05);
    for (int it = 0; it < 3000; ++it) {
        Tape tape;
        auto e = directional_attention_estimate(tape, raw, d, map);
        tape.backward(diff::sum(tape, diff::square(tape, diff::sub(tape, f, e.f_hat))));
        opt.step();
    }
    Tape tape(false);
    auto e = directional_attention_estimate(tape, raw, d, map);
    CHECK(diff::l2_norm(tape, diff::sub(tape, f, e.f_hat)).item() < 1e-3);
}

TEST_CASE("gated allocation") {
    Tape tape;
    SUBCASE("two survivors re-softmaxed over their own logits") {
        const std::vector<double> att{0.4, 0.35, 0.15, 0.10};
        std::vector<double> logits;
        for (double a : att) logits.push_back(std::log(a));
        auto r = gated_allocation(tape, Tensor::column(logits), 0.8);  // tau = 0.8 / 4 = 0.2
        CHECK(r.survivors == std::vector<char>{1, 1, 0, 0});
        const double e0 = std::exp(logits[0]), e1 = std::exp(logits[1]);
        CHECK(r.weights(0, 0) == doctest::Approx(e0 / (e0 + e1)).epsilon(1e-12));
        CHECK(r.weights(1, 0) == doctest::Approx(e1 / (e0 + e1)).epsilon(1e-12));
        CHECK(r.weights(2, 0) == 0.0);
        CHECK(r.weights(3, 0) == 0.0);
        for (std::size_t i = 0; i < 4; ++i) CHECK(r.attention[i] == doctest::Approx(att[i]).epsilon(1e-12));
    }
    SUBCASE("vanishing threshold is a plain softmax") {
        const std::vector<double> s{0.3, -1.2, 2.0, 0.0, 0.7};
        auto r = gated_allocation(tape, Tensor::column(s), 1e-12);
        double z = 0.0;
        for (double v : s) z += std::exp(v);
        for (std::size_t i = 0; i < 5; ++i) CHECK(r.weights(i, 0) == doctest::Approx(std::exp(s[i]) / z));
    }
    SUBCASE("equal scores give equal weights") {
        for (double gp : {0.3, 1.0}) {
            auto r = gated_allocation(tape, Tensor::filled(7, 1, 0.42), gp);
            for (std::size_t i = 0; i < 7; ++i) CHECK(r.weights(i, 0) == doctest::Approx(1.0 / 7).epsilon(1e-14));
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(gated_allocation(tape, Tensor::zeros(0, 1), 0.5), ValidationError);
        CHECK_THROWS_AS(gated_allocation(tape, Tensor::zeros(3, 1), 0.0), ValidationError);
        CHECK_THROWS_AS(gated_allocation(tape, Tensor::zeros(3, 1), 1.5), ValidationError);
    }
}

TEST_CASE("forward output invariants over random draws") {
    std::mt19937_64 rng(17);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 5 + seed % 20, m = 2 + seed % 6;
        ModelConfig cfg = small_config(m);
        cfg.gamma_p = 0.1 + 0.045 * static_cast<double>(seed);
        ModelParams p = ModelParams::init(cfg, seed);
        Directions dirs = Directions::positive(m);
        for (std::size_t j = 0; j < m; j += 2) dirs.factor[j] = -1.0;
        dirs.deep[1] = -1.0;
        Tape tape(false);
        auto out = forward(tape, p, cfg, random_matrix(rng, n, m), random_graph(rng, n), Matrix(n, n, 1.0), dirs);
        CHECK(std::accumulate(out.factors.selection.mask.begin(), out.factors.selection.mask.end(), 0.0) >= 1.0);
        for (std::size_t k = 0; k < kNumHorizons; ++k) {
            const auto& pf = out.directional.portfolio[k];
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double w = pf.weights(i, 0);
                CHECK(w >= 0.0);
                if (!pf.survivors[i]) CHECK(w == 0.0);
                total += w;
            }
            CHECK(std::abs(total - 1.0) <= 1e-9);
            double att = 0.0;
            for (double a : out.directional.estimate[k].a_bar.values()) {
                CHECK(a >= 0.0);
                att += a;
            }
            CHECK(std::abs(att - 1.0) <= 1e-9);
            CHECK(out.factors.deep[k].rows() == n);
        }
    }
}

TEST_CASE("zero threshold pipeline does not depend on the selection network") {
    std::mt19937_64 rng(18);
    ModelConfig cfg = small_config(4);
    cfg.gamma_f = 0.0;
    ModelParams p = ModelParams::init(cfg, 19);
    const Matrix x = random_matrix(rng, 8, 4), ind = random_graph(rng, 8), uni(8, 8, 1.0);
    Tape tape(false);
    auto a = forward_factors(tape, p, cfg, x, ind, uni);
    ModelParams q = p.clone();
    for (auto& v : q.selection_hidden.w.mutable_values()) v = -3.0 * v + 1.0;
    zero(q.selection_out);
    auto b = forward_factors(tape, q, cfg, x, ind, uni);
    Tensor direct = encode_context(tape, Tensor::from(x), p.encoder_hidden, p.encoder_out);
    CHECK(a.context.to_vector() == direct.to_vector());
    for (std::size_t k = 0; k < kNumHorizons; ++k) CHECK(a.deep[k].to_vector() == b.deep[k].to_vector());
}

TEST_CASE("stock permutation permutes deep factors and weights") {
    std::mt19937_64 rng(20);
    ModelConfig cfg = small_config(5);
    ModelParams p = ModelParams::init(cfg, 21);
    const std::size_t n = 12;
    const Matrix x = random_matrix(rng, n, 5), ind = random_graph(rng, n), uni(n, n, 1.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Directions dirs = Directions::positive(5);
    Tape tape(false);
    auto a = forward(tape, p, cfg, x, ind, uni, dirs);
    auto b = forward(tape, p, cfg, permute_rows(x, perm), permute_both(ind, perm), uni, dirs);
    CHECK(a.factors.selection.mask == b.factors.selection.mask);
    for (std::size_t k = 0; k < kNumHorizons; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(b.factors.deep[k](i, 0) == doctest::Approx(a.factors.deep[k](perm[i], 0)).epsilon(1e-10));
            CHECK(b.directional.portfolio[k].weights(i, 0) ==
                  doctest::Approx(a.directional.portfolio[k].weights(perm[i], 0)).epsilon(1e-10));
            CHECK(b.directional.estimate[k].f_hat(i, 0) ==
                  doctest::Approx(a.directional.estimate[k].f_hat(perm[i], 0)).epsilon(1e-10));
        }
    }
}

TEST_CASE("portfolio loss gradient matches finite differences for every parameter") {
    std::mt19937_64 rng(22);
    ModelConfig cfg = small_config(4, 8);
    cfg.gamma_p = 0.3;
    ModelParams p = ModelParams::init(cfg, 23);
    const Matrix x = random_matrix(rng, 5, 4), ind = random_graph(rng, 5), uni(5, 5, 1.0);
    const Tensor r = Tensor::from(random_matrix(rng, 5, 1));
    Directions dirs = Directions::positive(4);
    dirs.deep[2] = -1.0;
    auto loss = [&](Tape& tape) {
        auto out = forward(tape, p, cfg, x, ind, uni, dirs);
        Tensor total = Tensor::scalar(0.0);
        for (std::size_t k = 0; k < kNumHorizons; ++k) {
            total = diff::sub(tape, total, diff::sum(tape, diff::mul(tape, out.directional.portfolio[k].weights, r)));
        }
        return total;
    };
    auto res = testing::grad_check(p.tensors(), loss);
    CHECK(res.checked > 500);
    CHECK(res.max_rel_err < 1e-3);
}

TEST_CASE("checkpoint round trip") {
    testing::TempDir dir;
    Checkpoint c;
    c.config = small_config(3, 4);
    c.params = ModelParams::init(c.config, 24);
    c.factor_names = {"a", "b", "c"};
    c.factor_buffer = {0.3, -0.2, 1e-6};
    c.deep_buffer = {1.0, -1.0, 0.0, 0.1, -0.1};
    c.config_hash = "abc123";
    c.best_epoch = 4;
    save_checkpoint(c, dir / "ckpt.json");
    Checkpoint d = load_checkpoint(dir / "ckpt.json");
    CHECK(d.config_hash == "abc123");
    CHECK(d.best_epoch == 4);
    CHECK(d.factor_names == c.factor_names);
    CHECK(d.factor_buffer == c.factor_buffer);
    CHECK(d.deep_buffer == c.deep_buffer);
    CHECK(d.config.n_factors == 3);
    CHECK(d.config.factor_threshold() == c.config.factor_threshold());
    auto a = c.params.named(), b = d.params.named();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first == b[i].first);
        CHECK(a[i].second.to_vector() == b[i].second.to_vector());
    }
    auto dirs = d.directions();
    CHECK(dirs.factor == std::vector<double>{1, -1, 1});
    CHECK(dirs.deep[1] == -1.0);
    CHECK(dirs.deep[2] == 1.0);

    dir.write("bad.json", "{\"format\": \"fg-checkpoint/1\", \"horizons\": [1, 2]}");
    CHECK_THROWS_AS(load_checkpoint(dir / "bad.json"), DataError);
    dir.write("junk.json", "not json");
    CHECK_THROWS_AS(load_checkpoint(dir / "junk.json"), DataError);
    CHECK(horizon_index(10) == 2);
    CHECK_THROWS_AS(horizon_index(7), ValidationError);
}
