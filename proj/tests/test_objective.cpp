#include <cmath>

#include "doctest.h"
#include "wnetgan/errors.hpp"
#include "wnetgan/objective.hpp"
#include "wnetgan/rng.hpp"

using namespace wnetgan;
using namespace wnetgan::objective;
using nn::Shape4;
using nn::Tensor;
using nn::Var;

namespace {

Tensor filled(float v, Shape4 s = {1, 1, 4, 4}) { return Tensor(s, v); }

Tensor random_map(RandomSource& rng, double lo, double hi, Shape4 s = {1, 1, 4, 4}) {
    Tensor t(s);
    for (auto& v : t.vec()) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

// Central finite difference over the actually-realized float step.
double fd_vs_analytic(const std::function<double(const Tensor&)>& f, Tensor x,
                      std::size_t idx, double h = 1e-4) {
    const float base = x.vec()[idx];
    const float hi = static_cast<float>(base + h);
    const float lo = static_cast<float>(base - h);
    x.vec()[idx] = hi;
    const double fp = f(x);
    x.vec()[idx] = lo;
    const double fm = f(x);
    x.vec()[idx] = base;
    return (fp - fm) / (static_cast<double>(hi) - static_cast<double>(lo));
}

void check_rel(double analytic, double fd, double tol = 1e-3) {
    const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-8});
    CHECK(std::abs(analytic - fd) / scale <= tol);
}

}  // namespace

TEST_CASE("d_loss worked examples") {
    CHECK(d_loss(filled(1.0f), filled(0.0f)) == 0.0);
    CHECK(d_loss(filled(0.5f), filled(0.5f)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d_loss(filled(0.0f), filled(1.0f)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(d_loss(Tensor(Shape4{1, 1, 0, 0}), filled(0.5f)), ParameterError);
}

TEST_CASE("g_adv_loss worked examples") {
    CHECK(g_adv_loss(filled(1.0f)) == 0.0);
    CHECK(g_adv_loss(filled(0.0f)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g_adv_loss(filled(0.25f)) == doctest::Approx(0.5625).epsilon(1e-12));
    CHECK_THROWS_AS(g_adv_loss(Tensor(Shape4{1, 1, 0, 0})), ParameterError);
}

TEST_CASE("l1_loss with and without mask") {
    CHECK(l1_loss(filled(0.75f), filled(0.75f)) == 0.0);
    CHECK(l1_loss(filled(1.0f), filled(0.5f)) == doctest::Approx(0.5).epsilon(1e-12));

    RandomSource rng(1);
    const Tensor a = random_map(rng, -1, 1);
    const Tensor b = random_map(rng, -1, 1);
    Tensor mask(Shape4{1, 1, 4, 4});
    for (auto& v : mask.vec()) v = rng.uniform() < 0.5 ? 1.0f : 0.0f;
    mask.vec()[3] = 1.0f;  // guarantee non-empty

    double acc = 0.0, count = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
        if (mask.vec()[i] == 0.0f) continue;
        acc += std::abs(static_cast<double>(a.vec()[i]) - b.vec()[i]);
        count += 1.0;
    }
    CHECK(l1_loss(a, b, &mask) == doctest::Approx(acc / count).epsilon(1e-12));

    Tensor empty_mask(Shape4{1, 1, 4, 4}, 0.0f);
    CHECK_THROWS_AS(l1_loss(a, b, &empty_mask), ParameterError);
    CHECK_THROWS_AS(l1_loss(a, Tensor(Shape4{1, 1, 2, 2})), ParameterError);
}

TEST_CASE("g_total_loss composition and lambda algebra") {
    LossWeights w;
    SUBCASE("lambda zero reduces to the adversarial term") {
        w.lambda_l1 = 0.0f;
        RandomSource rng(2);
        const Tensor d_fake = random_map(rng, 0.01, 0.99);
        const Tensor gen = random_map(rng, -1, 1);
        const Tensor gt = random_map(rng, -1, 1);
        CHECK(g_total_loss(d_fake, gen, gt, w) == g_adv_loss(d_fake));
    }
    SUBCASE("perfect generation with a fooled discriminator is zero") {
        w.lambda_l1 = 100.0f;
        CHECK(g_total_loss(filled(1.0f), filled(0.3f), filled(0.3f), w) == 0.0);
    }
    SUBCASE("documented arithmetic: adv 0.5625 + 100 * 0.01") {
        w.lambda_l1 = 100.0f;
        const double total =
            g_total_loss(filled(0.25f), filled(0.51f), filled(0.5f), w);
        CHECK(total == doctest::Approx(1.5625).epsilon(1e-5));
    }
    SUBCASE("affine in lambda") {
        RandomSource rng(3);
        const Tensor d_fake = random_map(rng, 0.01, 0.99);
        const Tensor gen = random_map(rng, -1, 1);
        const Tensor gt = random_map(rng, -1, 1);
        auto total = [&](float lambda) {
            LossWeights lw;
            lw.lambda_l1 = lambda;
            return g_total_loss(d_fake, gen, gt, lw);
        };
        const double t0 = total(0.0f), t50 = total(50.0f), t100 = total(100.0f);
        CHECK(t50 == doctest::Approx(0.5 * (t0 + t100)).epsilon(1e-9));
        CHECK_THROWS_AS(total(-1.0f), ParameterError);
    }
}

TEST_CASE("losses are nonnegative and vanish only at their perfect points") {
    RandomSource rng(4);
    for (int i = 0; i < 50; ++i) {
        const Tensor real = random_map(rng, 0.01, 0.99);
        const Tensor fake = random_map(rng, 0.01, 0.99);
        CHECK(d_loss(real, fake) >= 0.0);
        CHECK(g_adv_loss(fake) >= 0.0);
        CHECK(l1_loss(real, fake) >= 0.0);
        if (d_loss(real, fake) == 0.0) {
            for (float v : real.vec()) CHECK(v == 1.0f);
            for (float v : fake.vec()) CHECK(v == 0.0f);
        }
    }
}

TEST_CASE("graph losses agree with the plain reductions") {
    RandomSource rng(5);
    LossWeights w;
    const Tensor real = random_map(rng, 0.01, 0.99);
    const Tensor fake = random_map(rng, 0.01, 0.99);
    const Tensor gen = random_map(rng, -1, 1);
    const Tensor gt = random_map(rng, -1, 1);
    CHECK(d_loss_node(nn::constant(real), nn::constant(fake), w)->value.item() ==
          doctest::Approx(d_loss(real, fake)).epsilon(1e-6));
    CHECK(g_total_loss_node(nn::constant(fake), nn::constant(gen), nn::constant(gt), w)
              ->value.item() ==
          doctest::Approx(g_total_loss(fake, gen, gt, w)).epsilon(1e-5));
}

TEST_CASE("analytic gradients match central finite differences (1e-4 step)") {
    RandomSource rng(6);
    LossWeights w;

    SUBCASE("d_loss wrt both maps") {
        const Tensor real = random_map(rng, 0.05, 0.95);
        const Tensor fake = random_map(rng, 0.05, 0.95);
        Var rv = nn::leaf(real, true), fv = nn::leaf(fake, true);
        nn::backward(d_loss_node(rv, fv, w));
        for (std::size_t idx = 0; idx < 16; ++idx) {
            check_rel(rv->grad.vec()[idx],
                      fd_vs_analytic([&](const Tensor& t) { return d_loss(t, fake); },
                                     real, idx));
            check_rel(fv->grad.vec()[idx],
                      fd_vs_analytic([&](const Tensor& t) { return d_loss(real, t); },
                                     fake, idx));
        }
    }
    SUBCASE("g_adv_loss") {
        const Tensor fake = random_map(rng, 0.05, 0.95);
        Var fv = nn::leaf(fake, true);
        nn::backward(g_adv_loss_node(fv, w));
        for (std::size_t idx = 0; idx < 16; ++idx)
            check_rel(fv->grad.vec()[idx],
                      fd_vs_analytic([&](const Tensor& t) { return g_adv_loss(t); },
                                     fake, idx));
    }
    SUBCASE("l1_loss with mask, away from kinks") {
        Tensor gen = random_map(rng, -1, 1);
        const Tensor gt = random_map(rng, -1, 1);
        // keep every difference well clear of the |.| kink relative to the step
        for (std::size_t i = 0; i < 16; ++i)
            if (std::abs(gen.vec()[i] - gt.vec()[i]) < 5e-3f)
                gen.vec()[i] = gt.vec()[i] + 0.25f;
        Tensor mask(Shape4{1, 1, 4, 4}, 0.0f);
        for (std::size_t i = 0; i < 16; i += 2) mask.vec()[i] = 1.0f;
        Var gv = nn::leaf(gen, true);
        nn::backward(l1_loss_node(gv, nn::constant(gt), &mask));
        for (std::size_t idx = 0; idx < 16; ++idx) {
            const double fd = fd_vs_analytic(
                [&](const Tensor& t) { return l1_loss(t, gt, &mask); }, gen, idx);
            const double analytic = gv->grad_allocated ? gv->grad.vec()[idx] : 0.0;
            if (mask.vec()[idx] == 0.0f) {
                CHECK(analytic == 0.0);
                CHECK(fd == 0.0);
            } else {
                check_rel(analytic, fd);
            }
        }
    }
    SUBCASE("g_total_loss wrt generated patch") {
        Tensor gen = random_map(rng, -0.9, 0.9);
        const Tensor gt = random_map(rng, -0.9, 0.9);
        for (std::size_t i = 0; i < 16; ++i)
            if (std::abs(gen.vec()[i] - gt.vec()[i]) < 5e-3f)
                gen.vec()[i] = gt.vec()[i] + 0.25f;
        const Tensor fake = random_map(rng, 0.05, 0.95);
        Var gv = nn::leaf(gen, true);
        nn::backward(
            g_total_loss_node(nn::constant(fake), gv, nn::constant(gt), w, nullptr));
        for (std::size_t idx = 0; idx < 16; ++idx)
            check_rel(gv->grad.vec()[idx],
                      fd_vs_analytic(
                          [&](const Tensor& t) { return g_total_loss(fake, t, gt, w); },
                          gen, idx));
    }
}
