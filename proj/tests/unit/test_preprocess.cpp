#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "../oracles.hpp"
#include "doctest.h"
#include "fcseg/preprocess.hpp"
#include "scratch_dir.hpp"

using namespace fcseg;

namespace {

// Bright box (value `inner`) inside a dimmer background (value `outer`).
std::vector<double> two_region(const Grid& g, double outer, double inner, std::vector<std::uint8_t>* mask = nullptr) {
  const auto& d = g.dims();
  std::vector<double> v(g.size(), outer);
  if (mask) mask->assign(g.size(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto p = g.coord(i);
    if (p.x >= d.nx / 4 && p.x < 3 * d.nx / 4 && p.y >= d.ny / 4 && p.y < 3 * d.ny / 4) {
      v[i] = inner;
      if (mask) (*mask)[i] = 1;
    }
  }
  return v;
}

std::vector<double> region(const Volume& v, const std::vector<std::uint8_t>& mask, std::uint8_t want) {
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (mask[i] == want) out.push_back(v[i]);
  return out;
}

double sd(const std::vector<double>& v) { return oracle::cov(v) * std::abs(oracle::mean(v)); }

// Air background, then two tissue blocks, plus noise.
Volume tissue_image(double scale, double shift, std::uint64_t seed, std::vector<std::uint8_t>* labels = nullptr) {
  const Grid g({32, 32, 8}, {});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 8.0);
  std::vector<double> v(g.size());
  if (labels) labels->assign(g.size(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto p = g.coord(i);
    double base = 10;
    std::uint8_t lab = 0;
    if (p.x >= 4 && p.x < 16) base = 300, lab = 1;
    else if (p.x >= 16 && p.x < 30) base = 700, lab = 2;
    if (labels) (*labels)[i] = lab;
    v[i] = (base + noise(rng)) * scale + shift;
  }
  return Volume(g, std::move(v));
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("constant volume has a unit bias field") {
    const auto v = Volume::filled(Grid({16, 16, 4}, {}), 250.0);
    const auto b = estimate_bias(v, 60.0);
    for (double x : b.data()) CHECK(x == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("injected broad ramp is recovered and correction lowers CoV") {
    // Field of view well beyond the smoothing kernel, as in a real scan.
    const Grid g({96, 96, 8}, {});
    std::vector<double> clean(g.size(), 400.0), ramp(g.size());
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 4.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto p = g.coord(i);
      const double dx = p.x - 10.0, dy = p.y - 12.0;
      ramp[i] = 0.8 + 0.4 * std::exp(-(dx * dx + dy * dy) / (2 * 40.0 * 40.0));
      clean[i] += noise(rng);
    }
    std::vector<double> biased(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) biased[i] = clean[i] * ramp[i];
    const Volume v(g, biased);
    const auto b = estimate_bias(v, BiasOptions{});
    CHECK(oracle::pearson({b.data().begin(), b.data().end()}, ramp) >= 0.95);
    const auto corrected = correct_bias(v, b);
    CHECK(oracle::cov({corrected.data().begin(), corrected.data().end()}) < oracle::cov(biased));
  }

  TEST_CASE("bias errors") {
    const auto zero = Volume::filled(Grid({4, 4, 4}, {}), 0.0);
    CHECK_THROWS_AS(estimate_bias(zero, 60.0), Error);
    const auto one = Volume::filled(Grid({4, 4, 4}, {}), 1.0);
    CHECK_THROWS_AS(correct_bias(one, zero), Error);
  }

  TEST_CASE("denoise: zero iterations is identity") {
    const auto v = tissue_image(1, 0, 1);
    CHECK(denoise(v, 0, 20.0) == v);
  }

  TEST_CASE("denoise lowers per-region spread and keeps the step edge") {
    const Grid g({40, 40, 6}, {});
    std::vector<std::uint8_t> mask;
    auto v = two_region(g, 100.0, 300.0, &mask);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 10.0);
    for (auto& x : v) x += noise(rng);
    const Volume noisy(g, v);
    const auto out = denoise(noisy, 5, 30.0);
    for (std::uint8_t r : {std::uint8_t{0}, std::uint8_t{1}})
      CHECK(sd(region(out, mask, r)) < sd(region(noisy, mask, r)));

    // Summed absolute x-gradient per plane; the two box faces must stay the
    // two strongest planes.
    auto edge_planes = [&](const Volume& vol) {
      std::vector<double> grad(g.dims().nx - 1, 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = g.coord(i);
        if (p.x + 1 < g.dims().nx && p.y > 12 && p.y < 28) grad[p.x] += std::abs(vol[i + 1] - vol[i]);
      }
      std::vector<std::size_t> order(grad.size());
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + 2, order.end(),
                        [&](auto a, auto b) { return grad[a] > grad[b]; });
      return std::set<std::size_t>{order[0], order[1]};
    };
    const auto before = edge_planes(Volume(g, two_region(g, 100.0, 300.0)));
    CHECK(before == std::set<std::size_t>{9, 29});
    CHECK(edge_planes(out) == before);
  }

  TEST_CASE("noise estimate tracks the injected sd") {
    const Grid g({64, 64, 4}, {});
    std::mt19937_64 rng(2);
    std::normal_distribution<double> noise(0.0, 12.0);
    std::vector<double> v(g.size());
    for (auto& x : v) x = 500 + noise(rng);
    CHECK(estimate_noise_sigma(Volume(g, v)) == doctest::Approx(12.0).epsilon(0.1));
  }

  TEST_CASE("identical histograms train onto their own mapped landmarks") {
    const auto v = tissue_image(1, 0, 4);
    const auto h = IntensityHistogram::from_volume(v);
    const std::vector<IntensityHistogram> hs{h, h};
    const auto model = train_standardization(hs);
    const auto lm = extract_landmarks(h, model.landmark_percentiles);
    const double scale = (model.s_max - model.s_min) / (lm.max_value - lm.min_value);
    for (std::size_t k = 0; k < lm.percentiles.size(); ++k)
      CHECK(model.trained_landmarks[k] ==
            doctest::Approx(model.s_min + (lm.percentiles[k] - lm.min_value) * scale));
  }

  TEST_CASE("a +100 shift standardizes onto the same landmarks") {
    const auto a = tissue_image(1, 0, 6);
    const auto b = tissue_image(1, 100, 6);
    const std::vector<IntensityHistogram> hs{IntensityHistogram::from_volume(a), IntensityHistogram::from_volume(b)};
    const auto model = train_standardization(hs);
    const auto sa = apply_standardization(a, model), sb = apply_standardization(b, model);
    const auto la = extract_landmarks(IntensityHistogram::from_volume(sa), model.landmark_percentiles);
    const auto lb = extract_landmarks(IntensityHistogram::from_volume(sb), model.landmark_percentiles);
    for (std::size_t k = 0; k < la.percentiles.size(); ++k)
      CHECK(la.percentiles[k] == doctest::Approx(lb.percentiles[k]).epsilon(1e-6));
    for (const auto* s : {&sa, &sb}) {
      const auto [mn, mx] = std::minmax_element(s->data().begin(), s->data().end());
      CHECK(*mn >= 1.0);
      CHECK(*mx <= 4095.0);
    }
  }

  TEST_CASE("image already on the model's landmarks maps to itself") {
    // Rescaled onto [1, 4095] so training on two copies reproduces its own landmarks.
    const auto raw = tissue_image(1, 0, 8);
    const auto [mn, mx] = std::minmax_element(raw.data().begin(), raw.data().end());
    std::vector<double> v(raw.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + (raw[i] - *mn) * 4094.0 / (*mx - *mn);
    const Volume img(raw.grid(), v);
    const auto h = IntensityHistogram::from_volume(img);
    const std::vector<IntensityHistogram> hs{h, h};
    const auto out = apply_standardization(img, train_standardization(hs));
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(out[i] == doctest::Approx(v[i]).epsilon(1e-9));
  }

  TEST_CASE("standardization is monotone") {
    const std::vector<IntensityHistogram> hs{IntensityHistogram::from_volume(tissue_image(1, 0, 1)),
                                             IntensityHistogram::from_volume(tissue_image(1.3, 40, 2))};
    const auto model = train_standardization(hs);
    for (std::uint64_t s = 10; s < 15; ++s) {
      const auto v = tissue_image(0.7 + 0.1 * static_cast<double>(s - 10), 5.0 * static_cast<double>(s), s);
      const auto out = apply_standardization(v, model);
      std::vector<std::size_t> order(v.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
      for (std::size_t k = 1; k < order.size(); ++k) CHECK(out[order[k - 1]] <= out[order[k]]);
    }
  }

  TEST_CASE("scaled and shifted copies agree on tissue mean after standardization") {
    const double scales[4] = {0.8, 1.0, 1.15, 1.3}, shifts[4] = {-20, 0, 35, 60};
    std::vector<Volume> cohort;
    std::vector<std::uint8_t> labels;
    for (int k = 0; k < 4; ++k) cohort.push_back(tissue_image(scales[k], shifts[k], 20 + k, &labels));
    PreprocessOptions opts;
    opts.bias_enabled = false;
    opts.denoise_enabled = false;
    StandardizationModel model;
    const auto out = preprocess_cohort(cohort, opts, model);
    for (std::uint8_t tissue : {std::uint8_t{1}, std::uint8_t{2}}) {
      std::vector<double> pre, post;
      for (int k = 0; k < 4; ++k) {
        pre.push_back(oracle::mean(region(cohort[k], labels, tissue)));
        post.push_back(oracle::mean(region(out[k], labels, tissue)));
      }
      CHECK(oracle::cov(post) < oracle::cov(pre));
    }
  }

  TEST_CASE("model persists through key/value text") {
    const std::vector<IntensityHistogram> hs{IntensityHistogram::from_volume(tissue_image(1, 0, 1)),
                                             IntensityHistogram::from_volume(tissue_image(1.2, 9, 2))};
    const auto model = train_standardization(hs);
    const auto path = scratch_dir("model") / "water.model";
    model.save(path);
    const auto back = StandardizationModel::load(path);
    CHECK(back.trained_landmarks == model.trained_landmarks);
    CHECK(back.trained_mode == model.trained_mode);
    CHECK(back.landmark_percentiles == model.landmark_percentiles);
  }

  TEST_CASE("standardization errors") {
    const auto v = tissue_image(1, 0, 1);
    CHECK_THROWS_AS(apply_standardization(v, StandardizationModel{}), Error);
    const std::vector<IntensityHistogram> one{IntensityHistogram::from_volume(v)};
    CHECK_THROWS_AS(train_standardization(one), Error);
    const std::vector<IntensityHistogram> two{IntensityHistogram::from_volume(v), IntensityHistogram::from_volume(v)};
    CHECK_THROWS_AS(train_standardization(two, {50, 40}), Error);
  }
}
