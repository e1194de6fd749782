#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "amir/metrics.hpp"
#include "amir/nn/conv.hpp"
#include "amir/nn/loss.hpp"
#include "amir/nn/norm.hpp"
#include "amir/nn/optim.hpp"
#include "amir/nn/params.hpp"
#include "gradcheck.hpp"

using namespace amir;
using nn::Var;
using D = double;

namespace {
std::vector<D> window_d() {
  const auto& w = ssim_window();
  return std::vector<D>(w.begin(), w.end());
}
}  // namespace

TEST_CASE("conv2d: identity and analytic values") {
  std::mt19937_64 rng(1);
  auto x = Var<D>::leaf(random_array({1, 1, 6, 6}, rng), true);
  nn::NdArray<D> id({1, 1, 1, 1});
  id.v[0] = 1.0;
  auto w = Var<D>::constant(std::move(id));
  auto b = Var<D>::constant(nn::NdArray<D>({1}, 0.0));
  auto y = nn::conv2d(x, w, b);
  for (size_t i = 0; i < x.numel(); ++i)
    CHECK(y.value().v[i] == doctest::Approx(x.value().v[i]));

  auto ones_x = Var<D>::constant(nn::NdArray<D>({1, 1, 5, 5}, 1.0));
  auto ones_w = Var<D>::constant(nn::NdArray<D>({1, 1, 3, 3}, 1.0));
  auto y2 = nn::conv2d(ones_x, ones_w, b);
  CHECK(y2.value().v[2 * 5 + 2] == doctest::Approx(9.0));  // interior
  CHECK(y2.value().v[0] == doctest::Approx(4.0));          // corner, zero pad
}

TEST_CASE("conv2d: gradient vs finite differences") {
  std::mt19937_64 rng(2);
  auto x = Var<D>::leaf(random_array({2, 3, 6, 6}, rng), true);
  auto w = Var<D>::leaf(random_array({4, 3, 3, 3}, rng), true);
  auto b = Var<D>::leaf(random_array({4}, rng), true);
  auto build = [&] { return nn::mean_all(nn::mul(nn::conv2d(x, w, b), nn::conv2d(x, w, b))); };
  CHECK(max_rel_err({&x, &w, &b}, build) < 1e-4);

  // strided variant
  auto build_s = [&] {
    auto y = nn::conv2d(x, w, b, 2, 1);
    return nn::mean_all(nn::mul(y, y));
  };
  CHECK(max_rel_err({&x, &w, &b}, build_s) < 1e-4);

  auto bad_w = Var<D>::leaf(random_array({4, 2, 3, 3}, rng), true);
  CHECK_THROWS(nn::conv2d(x, bad_w, b));
}

TEST_CASE("linear: gradient check") {
  std::mt19937_64 rng(3);
  auto x = Var<D>::leaf(random_array({3, 5}, rng), true);
  auto w = Var<D>::leaf(random_array({4, 5}, rng), true);
  auto b = Var<D>::leaf(random_array({4}, rng), true);
  auto build = [&] {
    auto y = nn::linear(x, w, b);
    return nn::mean_all(nn::mul(y, y));
  };
  CHECK(max_rel_err({&x, &w, &b}, build) < 1e-4);
}

TEST_CASE("gelu: values and gradient") {
  std::mt19937_64 rng(4);
  auto x = Var<D>::leaf(random_array({20}, rng, -2.0, 2.0), true);
  auto y = nn::gelu(x);
  for (size_t i = 0; i < x.numel(); ++i) {
    double v = x.value().v[i];
    CHECK(y.value().v[i] ==
          doctest::Approx(v * 0.5 * (1 + std::erf(v / std::sqrt(2.0)))));
  }
  auto build = [&] { return nn::mean_all(nn::mul(nn::gelu(x), nn::gelu(x))); };
  CHECK(max_rel_err({&x}, build) < 1e-4);
}

TEST_CASE("layer_norm: normalization and degenerate variance") {
  std::mt19937_64 rng(5);
  auto x = Var<D>::leaf(random_array({2, 8, 3, 3}, rng), true);
  auto gamma = Var<D>::constant(nn::NdArray<D>({8}, 1.0));
  auto beta = Var<D>::constant(nn::NdArray<D>({8}, 0.0));
  auto y = nn::layer_norm(x, gamma, beta);
  // per-position mean 0, variance ~ 1
  const size_t hw = 9;
  for (int n = 0; n < 2; ++n)
    for (size_t p = 0; p < hw; ++p) {
      double mu = 0, var = 0;
      for (int c = 0; c < 8; ++c) mu += y.value().v[(n * 8 + c) * hw + p];
      mu /= 8;
      for (int c = 0; c < 8; ++c) {
        double d = y.value().v[(n * 8 + c) * hw + p] - mu;
        var += d * d;
      }
      var /= 8;
      CHECK(std::abs(mu) < 1e-10);
      CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }

  auto xc = Var<D>::constant(nn::NdArray<D>({1, 4, 2, 2}, 0.7));
  auto beta2 = Var<D>::constant(nn::NdArray<D>({4}, 0.3));
  auto gamma2 = Var<D>::constant(nn::NdArray<D>({4}, 1.0));
  auto yc = nn::layer_norm(xc, gamma2, beta2);
  for (D v : yc.value().v) CHECK(v == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("layer_norm: gradient check") {
  std::mt19937_64 rng(6);
  auto x = Var<D>::leaf(random_array({2, 5, 3, 3}, rng), true);
  auto gamma = Var<D>::leaf(random_array({5}, rng), true);
  auto beta = Var<D>::leaf(random_array({5}, rng), true);
  auto build = [&] {
    auto y = nn::layer_norm(x, gamma, beta);
    return nn::mean_all(nn::mul(y, y));
  };
  CHECK(max_rel_err({&x, &gamma, &beta}, build) < 1e-4);
}

TEST_CASE("dsln: reduces to plain LN under identity conditioning") {
  std::mt19937_64 rng(7);
  const int C = 6, R = 30;
  for (int trial = 0; trial < 5; ++trial) {
    auto x = Var<D>::leaf(random_array({2, C, 4, 4}, rng), false);
    auto r = Var<D>::leaf(random_array({2, R}, rng), false);
    auto wg = Var<D>::constant(nn::NdArray<D>({C, R}, 0.0));
    auto bg = Var<D>::constant(nn::NdArray<D>({C}, 1.0));
    auto wb = Var<D>::constant(nn::NdArray<D>({C, R}, 0.0));
    auto bb = Var<D>::constant(nn::NdArray<D>({C}, 0.0));
    auto y1 = nn::dsln(x, r, wg, bg, wb, bb);
    auto gamma = Var<D>::constant(nn::NdArray<D>({C}, 1.0));
    auto beta = Var<D>::constant(nn::NdArray<D>({C}, 0.0));
    auto y2 = nn::layer_norm(x, gamma, beta);
    for (size_t i = 0; i < y1.numel(); ++i)
      CHECK(std::abs(y1.value().v[i] - y2.value().v[i]) < 1e-6);
  }
}

TEST_CASE("dsln: conditioning is live and gradients flow to r") {
  std::mt19937_64 rng(8);
  const int C = 4, R = 30;
  auto x = Var<D>::leaf(random_array({1, C, 3, 3}, rng), true);
  auto r1 = Var<D>::leaf(random_array({1, R}, rng), true);
  auto r2 = Var<D>::leaf(random_array({1, R}, rng), true);
  auto wg = Var<D>::leaf(random_array({C, R}, rng), true);
  auto bg = Var<D>::leaf(random_array({C}, rng), true);
  auto wb = Var<D>::leaf(random_array({C, R}, rng), true);
  auto bb = Var<D>::leaf(random_array({C}, rng), true);

  auto y1 = nn::dsln(x, r1, wg, bg, wb, bb);
  auto y2 = nn::dsln(x, r2, wg, bg, wb, bb);
  double diff = 0;
  for (size_t i = 0; i < y1.numel(); ++i)
    diff = std::max(diff, std::abs(y1.value().v[i] - y2.value().v[i]));
  CHECK(diff > 1e-4);

  auto build = [&] {
    auto y = nn::dsln(x, r1, wg, bg, wb, bb);
    return nn::mean_all(nn::mul(y, y));
  };
  CHECK(max_rel_err({&x, &r1, &wg, &bg, &wb, &bb}, build) < 1e-4);
}

TEST_CASE("gating_modulation: unit gate, closed gate, linearity, gradient") {
  std::mt19937_64 rng(9);
  const int C = 4, R = 30;
  auto x = Var<D>::leaf(random_array({2, C, 3, 3}, rng), true);
  auto r = Var<D>::leaf(random_array({2, R}, rng), true);

  // GELU(t) = 1 at t ~ solve t*Phi(t) = 1 by Newton
  double t = 1.0;
  for (int i = 0; i < 60; ++i) {
    double phi = 0.5 * (1 + std::erf(t / std::sqrt(2.0)));
    double pdf = std::exp(-t * t / 2) / std::sqrt(2 * M_PI);
    t -= (t * phi - 1.0) / (phi + t * pdf);
  }
  auto w0 = Var<D>::constant(nn::NdArray<D>({C, R}, 0.0));
  auto b1_unit = Var<D>::constant(nn::NdArray<D>({C}, t));
  auto b2_one = Var<D>::constant(nn::NdArray<D>({C}, 1.0));
  auto y_unit = nn::gating_modulation(x, r, w0, b1_unit, w0, b2_one);
  for (size_t i = 0; i < x.numel(); ++i)
    CHECK(y_unit.value().v[i] == doctest::Approx(x.value().v[i]).epsilon(1e-9));

  auto b_zero = Var<D>::constant(nn::NdArray<D>({C}, 0.0));
  auto y_closed = nn::gating_modulation(x, r, w0, b_zero, w0, b2_one);
  for (D v : y_closed.value().v) CHECK(v == doctest::Approx(0.0));

  // linearity in x: GM(a x + b z, r) = a GM(x,r) + b GM(z,r)
  auto w1 = Var<D>::leaf(random_array({C, R}, rng), true);
  auto b1 = Var<D>::leaf(random_array({C}, rng), true);
  auto w2 = Var<D>::leaf(random_array({C, R}, rng), true);
  auto b2 = Var<D>::leaf(random_array({C}, rng), true);
  auto z = Var<D>::leaf(random_array({2, C, 3, 3}, rng), false);
  auto lhs = nn::gating_modulation(
      nn::add(nn::mul_scalar(x, 2.0), nn::mul_scalar(z, 3.0)), r, w1, b1, w2, b2);
  auto rhs = nn::add(nn::mul_scalar(nn::gating_modulation(x, r, w1, b1, w2, b2), 2.0),
                     nn::mul_scalar(nn::gating_modulation(z, r, w1, b1, w2, b2), 3.0));
  for (size_t i = 0; i < lhs.numel(); ++i)
    CHECK(lhs.value().v[i] == doctest::Approx(rhs.value().v[i]).epsilon(1e-10));

  auto build = [&] {
    auto y = nn::gating_modulation(x, r, w1, b1, w2, b2);
    return nn::mean_all(nn::mul(y, y));
  };
  CHECK(max_rel_err({&x, &r, &w1, &b1, &w2, &b2}, build) < 1e-4);
}

TEST_CASE("smooth_l1: piecewise values and gradient") {
  auto mk = [](double d) {
    auto p = Var<D>::leaf(nn::NdArray<D>({1}, d), true);
    auto t = Var<D>::constant(nn::NdArray<D>({1}, 0.0));
    return nn::smooth_l1(p, t).scalar();
  };
  CHECK(mk(0.0) == doctest::Approx(0.0));
  CHECK(mk(0.5) == doctest::Approx(0.125));
  CHECK(mk(2.0) == doctest::Approx(1.5));

  std::mt19937_64 rng(10);
  auto p = Var<D>::leaf(random_array({12}, rng, -2.0, 2.0), true);
  auto t = Var<D>::constant(random_array({12}, rng, -2.0, 2.0));
  auto build = [&] { return nn::smooth_l1(p, t); };
  CHECK(max_rel_err({&p}, build) < 1e-4);
}

TEST_CASE("ssim_loss: zero at equality, bounded, gradient") {
  std::mt19937_64 rng(11);
  auto win = window_d();
  auto t = Var<D>::constant(random_array({1, 1, 16, 16}, rng, 0.0, 1.0));
  auto p_same = Var<D>::leaf(t.value(), true);
  CHECK(nn::ssim_loss(p_same, t, win).scalar() == doctest::Approx(0.0).epsilon(1e-6));

  auto p = Var<D>::leaf(random_array({1, 1, 16, 16}, rng, 0.0, 1.0), true);
  double l = nn::ssim_loss(p, t, win).scalar();
  CHECK(l >= 0.0);
  CHECK(l <= 2.0);

  auto build = [&] { return nn::ssim_loss(p, t, win); };
  CHECK(max_rel_err({&p}, build) < 1e-3);
}

TEST_CASE("ssim_loss forward agrees with the image-domain SSIM metric") {
  std::mt19937_64 rng(12);
  Image a(16, 16, 1), b(16, 16, 1);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  for (auto& v : a.data) v = u(rng);
  for (auto& v : b.data) v = u(rng);
  nn::NdArray<D> av({1, 1, 16, 16}), bv({1, 1, 16, 16});
  for (size_t i = 0; i < a.size(); ++i) {
    av.v[i] = a.data[i];
    bv.v[i] = b.data[i];
  }
  auto loss = nn::ssim_loss(Var<D>::leaf(std::move(av), true),
                            Var<D>::constant(std::move(bv)), window_d());
  CHECK(loss.scalar() == doctest::Approx(1.0 - ssim(a, b)).epsilon(1e-5));
}

TEST_CASE("per_level_cross_entropy: analytic values and gradient") {
  const std::vector<int> sizes = {2, 4, 8, 16};
  // uniform logits
  auto logits = Var<D>::leaf(nn::NdArray<D>({1, 30}, 0.0), true);
  std::vector<int> targets = {1, 2, 5, 11};
  CHECK(nn::per_level_cross_entropy(logits, targets, sizes, 1).scalar() ==
        doctest::Approx(std::log(2.0)));
  CHECK(nn::per_level_cross_entropy(logits, targets, sizes, 2).scalar() ==
        doctest::Approx(std::log(2.0) + std::log(4.0)));
  CHECK(nn::per_level_cross_entropy(logits, targets, sizes, 4).scalar() ==
        doctest::Approx(std::log(2.0) + std::log(4.0) + std::log(8.0) + std::log(16.0)));

  // logits massively favoring the true node
  nn::NdArray<D> strong({1, 30}, -50.0);
  auto off = std::vector<int>{0, 2, 6, 14};
  for (int l = 0; l < 4; ++l) strong.v[static_cast<size_t>(off[static_cast<size_t>(l)] + targets[static_cast<size_t>(l)])] = 50.0;
  auto sl = Var<D>::leaf(std::move(strong), true);
  CHECK(nn::per_level_cross_entropy(sl, targets, sizes, 4).scalar() ==
        doctest::Approx(0.0).epsilon(1e-9));

  std::mt19937_64 rng(13);
  auto l2 = Var<D>::leaf(random_array({2, 30}, rng), true);
  std::vector<int> t2 = {0, 3, 7, 15, 1, 0, 2, 9};
  auto build = [&] { return nn::per_level_cross_entropy(l2, t2, sizes, 4); };
  CHECK(max_rel_err({&l2}, build) < 1e-4);

  std::vector<int> bad = {0, 9, 0, 0};  // level-2 index out of range
  CHECK_THROWS(nn::per_level_cross_entropy(logits, bad, sizes, 2));
}

TEST_CASE("per_level_softmax: slices sum to one, zeros past built levels") {
  std::mt19937_64 rng(14);
  const std::vector<int> sizes = {2, 4, 8, 16};
  auto logits = Var<D>::leaf(random_array({3, 30}, rng), true);
  auto probs = nn::per_level_softmax(logits, sizes, 2);
  for (int n = 0; n < 3; ++n) {
    double s0 = probs.value().v[n * 30] + probs.value().v[n * 30 + 1];
    double s1 = 0;
    for (int j = 2; j < 6; ++j) s1 += probs.value().v[n * 30 + j];
    CHECK(s0 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s1 == doctest::Approx(1.0).epsilon(1e-9));
    for (int j = 6; j < 30; ++j) CHECK(probs.value().v[n * 30 + j] == 0.0);
  }
  auto build = [&] {
    auto p = nn::per_level_softmax(logits, sizes, 2);
    return nn::mean_all(nn::mul(p, p));
  };
  CHECK(max_rel_err({&logits}, build) < 1e-4);
}

TEST_CASE("simple_gate: definition and odd-channel rejection") {
  nn::NdArray<D> x({1, 2, 2, 2});
  for (size_t i = 0; i < 4; ++i) x.v[i] = 2.0;
  for (size_t i = 4; i < 8; ++i) x.v[i] = 3.0;
  auto y = nn::simple_gate(Var<D>::leaf(std::move(x), true));
  for (D v : y.value().v) CHECK(v == doctest::Approx(6.0));

  auto odd = Var<D>::leaf(nn::NdArray<D>({1, 3, 2, 2}, 1.0), true);
  CHECK_THROWS(nn::simple_gate(odd));

  std::mt19937_64 rng(15);
  auto xr = Var<D>::leaf(random_array({2, 4, 3, 3}, rng), true);
  auto build = [&] {
    auto g = nn::simple_gate(xr);
    return nn::mean_all(nn::mul(g, g));
  };
  CHECK(max_rel_err({&xr}, build) < 1e-4);
}

TEST_CASE("pooling, upsampling, concat gradients") {
  std::mt19937_64 rng(16);
  auto x = Var<D>::leaf(random_array({2, 3, 4, 4}, rng), true);
  auto y = Var<D>::leaf(random_array({2, 2, 4, 4}, rng), true);
  auto build = [&] {
    auto up = nn::upsample_nearest2x(x);
    auto gp = nn::global_average_pool(up);
    auto cc = nn::channel_concat(x, y);
    return nn::add(nn::mean_all(nn::mul(gp, gp)), nn::mean_all(nn::mul(cc, cc)));
  };
  CHECK(max_rel_err({&x, &y}, build) < 1e-4);
}

TEST_CASE("gradient accumulation across uses") {
  auto x = Var<D>::leaf(nn::NdArray<D>({3}, 2.0), true);
  auto s = nn::mean_all(nn::add(x, x));  // d/dx = 2/3 per element
  nn::backward(s);
  for (D g : x.grad()) CHECK(g == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("AdamW converges on a quadratic; cosine schedule endpoints") {
  nn::ParamStore<D> store(0);
  auto& p = store.add_constant("x", {1}, 5.0);
  nn::AdamW<D> opt(store);
  int steps = 0;
  for (; steps < 500; ++steps) {
    store.zero_grad();
    auto loss = nn::mean_all(nn::mul(p, p));  // min at 0
    nn::backward(loss);
    opt.step(0.05);
    if (std::abs(p.value().v[0]) < 1e-6 && loss.scalar() < 1e-6) break;
  }
  CHECK(std::abs(p.value().v[0]) < 1e-3);
  CHECK(p.value().v[0] * p.value().v[0] < 1e-6);
  CHECK(steps < 500);

  CHECK(nn::cosine_lr(5e-4, 1e-6, 0, 41) == doctest::Approx(5e-4));
  CHECK(nn::cosine_lr(5e-4, 1e-6, 40, 41) == doctest::Approx(1e-6));
  CHECK(nn::cosine_lr(5e-4, 1e-6, 20, 41) ==
        doctest::Approx(1e-6 + 0.5 * (5e-4 - 1e-6)));
}
