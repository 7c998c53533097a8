#include "fcseg/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fcseg/filters.hpp"

namespace fcseg {

// ---------------------------------------------------------------------------
// Bias field
// ---------------------------------------------------------------------------

namespace {

// 1-D k-means on `values` with centers initialized at evenly spaced quantiles.
std::vector<int> kmeans_1d(std::span<const double> values, int k, std::vector<double>& centers) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  centers.resize(k);
  for (int c = 0; c < k; ++c) centers[c] = percentile_sorted(sorted, 100.0 * (c + 0.5) / k);
  std::vector<int> label(values.size(), 0);
  for (int iter = 0; iter < 25; ++iter) {
    std::vector<double> sum(k, 0.0), cnt(k, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (std::abs(values[i] - centers[c]) < std::abs(values[i] - centers[best])) best = c;
      label[i] = best;
      sum[best] += values[i];
      cnt[best] += 1;
    }
    bool moved = false;
    for (int c = 0; c < k; ++c) {
      if (cnt[c] == 0) continue;
      const double m = sum[c] / cnt[c];
      moved |= m != centers[c];
      centers[c] = m;
    }
    if (!moved) break;
  }
  return label;
}

}  // namespace

Volume estimate_bias(const Volume& vol, double fwhm_mm) {
  BiasOptions opts;
  opts.fwhm_mm = fwhm_mm;
  return estimate_bias(vol, opts);
}

Volume estimate_bias(const Volume& vol, const BiasOptions& options) {
  if (!(options.fwhm_mm > 0)) fail(ErrorCode::InvalidArgument, "bias fwhm_mm must be > 0");
  if (options.tissue_classes < 1 || options.iterations < 1)
    fail(ErrorCode::InvalidArgument, "bias tissue_classes and iterations must be >= 1");
  const auto data = vol.data();
  if (std::all_of(data.begin(), data.end(), [](double v) { return v == 0.0; }))
    fail(ErrorCode::DegenerateData, "bias field undefined for an all-zero volume");

  const auto hist = IntensityHistogram::from_volume(vol);
  const double threshold = std::max(hist.foreground_threshold(), 0.0);
  std::vector<double> mask(vol.size(), 0.0);
  std::vector<std::size_t> fg;
  for (std::size_t i = 0; i < vol.size(); ++i)
    if (data[i] > threshold) {
      mask[i] = 1.0;
      fg.push_back(i);
    }
  if (fg.empty())
    for (std::size_t i = 0; i < vol.size(); ++i)
      if (data[i] > 0) {
        mask[i] = 1.0;
        fg.push_back(i);
      }
  if (fg.empty()) fail(ErrorCode::DegenerateData, "no positive intensities for bias estimation");

  std::vector<double> log_v(vol.size(), 0.0);
  for (auto i : fg) log_v[i] = std::log(data[i]);

  const double sigma = fwhm_to_sigma(options.fwhm_mm);
  std::vector<double> log_b(vol.size(), 0.0);
  std::vector<double> residual(vol.size(), 0.0);
  std::vector<double> corrected(fg.size());
  for (int iter = 0; iter < options.iterations; ++iter) {
    for (std::size_t j = 0; j < fg.size(); ++j) corrected[j] = log_v[fg[j]] - log_b[fg[j]];
    if (options.tissue_classes > 1) {
      std::vector<double> centers;
      const auto label = kmeans_1d(corrected, options.tissue_classes, centers);
      for (std::size_t j = 0; j < fg.size(); ++j) residual[fg[j]] = log_v[fg[j]] - centers[label[j]];
    } else {
      const double m = mean_of(corrected);
      for (auto i : fg) residual[i] = log_v[i] - m;
    }
    log_b = smooth_normalized(residual, mask, vol.grid(), sigma, 0.0);
  }

  std::vector<double> b(vol.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::exp(log_b[i]);
  double fg_mean = 0;
  for (auto i : fg) fg_mean += b[i];
  fg_mean /= static_cast<double>(fg.size());
  for (auto& v : b) v /= fg_mean;
  return Volume(vol.grid(), std::move(b));
}

Volume correct_bias(const Volume& vol, const Volume& bias) {
  require_same_grid(vol.grid(), bias.grid(), "correct_bias");
  std::vector<double> out(vol.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(bias[i] > 0)) fail(ErrorCode::InvalidArgument, "bias field must be strictly positive");
    out[i] = vol[i] / bias[i];
  }
  return Volume(vol.grid(), std::move(out));
}

// ---------------------------------------------------------------------------
// Denoising
// ---------------------------------------------------------------------------

Volume denoise(const Volume& vol, int iterations, double conductance) {
  if (iterations < 0) fail(ErrorCode::InvalidArgument, "denoise iterations must be >= 0");
  if (!(conductance > 0)) fail(ErrorCode::InvalidArgument, "denoise conductance must be > 0");
  if (iterations == 0) return vol;

  constexpr double kStep = 1.0 / 7.0;  // stable for 6 neighbours
  const Grid& grid = vol.grid();
  std::vector<double> cur(vol.data().begin(), vol.data().end());
  std::vector<double> next(cur.size());
  const double inv_k2 = 1.0 / (conductance * conductance);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const double u = cur[i];
      double flux = 0;
      for_each_neighbor(grid, i, Adjacency::Six, [&](std::size_t j, const auto&) {
        const double diff = cur[j] - u;
        flux += std::exp(-diff * diff * inv_k2) * diff;
      });
      next[i] = u + kStep * flux;
    }
    cur.swap(next);
  }
  return Volume(grid, std::move(cur));
}

double estimate_noise_sigma(const Volume& vol) {
  const auto& d = vol.dims();
  if (d.nx < 2) return 0.0;
  std::vector<double> diffs;
  diffs.reserve(vol.size());
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x + 1 < d.nx; ++x) {
        const auto i = vol.grid().index({x, y, z});
        diffs.push_back(std::abs(vol[i + 1] - vol[i]));
      }
  auto mid = diffs.begin() + static_cast<std::ptrdiff_t>(diffs.size() / 2);
  std::nth_element(diffs.begin(), mid, diffs.end());
  return 1.4826 * *mid / std::sqrt(2.0);
}

// ---------------------------------------------------------------------------
// Histogram
// ---------------------------------------------------------------------------

IntensityHistogram IntensityHistogram::from_volume(const Volume& vol, int bins) {
  if (bins < 2) fail(ErrorCode::InvalidArgument, "histogram needs >= 2 bins");
  const auto data = vol.data();
  const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
  std::vector<double> counts(bins, 0.0);
  const double lo = *mn, hi = *mx;
  const double scale = hi > lo ? bins / (hi - lo) : 0.0;
  for (double v : data) {
    const int b = std::min(bins - 1, static_cast<int>((v - lo) * scale));
    counts[b] += 1;
  }
  return IntensityHistogram(lo, hi, std::move(counts));
}

IntensityHistogram::IntensityHistogram(double min_value, double max_value,
                                       std::vector<double> counts)
    : min_(min_value), max_(max_value), counts_(std::move(counts)) {
  if (counts_.empty()) fail(ErrorCode::InvalidArgument, "histogram needs bins");
  if (max_ < min_) fail(ErrorCode::InvalidArgument, "histogram max < min");
}

double IntensityHistogram::bin_center(int b) const {
  return min_ + (b + 0.5) * (max_ - min_) / bins();
}

double IntensityHistogram::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), 0.0);
}

double IntensityHistogram::percentile(double p, double threshold) const {
  if (max_ == min_) return min_;
  const double width = (max_ - min_) / bins();
  // Portion of each bin at or above the threshold.
  std::vector<double> part(counts_.size());
  for (int b = 0; b < bins(); ++b) {
    const double lo = min_ + b * width;
    const double frac = std::clamp((lo + width - threshold) / width, 0.0, 1.0);
    part[b] = counts_[b] * frac;
  }
  const double total_fg = std::accumulate(part.begin(), part.end(), 0.0);
  if (total_fg <= 0) return max_;
  const double target = std::clamp(p, 0.0, 100.0) / 100.0 * total_fg;
  double cum = 0;
  for (int b = 0; b < bins(); ++b) {
    if (part[b] <= 0) continue;
    if (cum + part[b] >= target) {
      const double bin_lo = std::max(min_ + b * width, threshold);
      const double bin_hi = min_ + (b + 1) * width;
      const double t = (target - cum) / part[b];
      return bin_lo + t * (bin_hi - bin_lo);
    }
    cum += part[b];
  }
  return max_;
}

namespace {

std::vector<double> smooth_counts(const std::vector<double>& counts) {
  constexpr int kRadius = 4;
  constexpr double kSigma = 2.0;
  std::vector<double> k(2 * kRadius + 1);
  for (int i = -kRadius; i <= kRadius; ++i) k[i + kRadius] = std::exp(-0.5 * i * i / (kSigma * kSigma));
  const int n = static_cast<int>(counts.size());
  std::vector<double> out(n, 0.0);
  for (int b = 0; b < n; ++b) {
    double acc = 0, wsum = 0;
    for (int i = -kRadius; i <= kRadius; ++i) {
      const int j = b + i;
      if (j < 0 || j >= n) continue;
      acc += k[i + kRadius] * counts[j];
      wsum += k[i + kRadius];
    }
    out[b] = acc / wsum;
  }
  return out;
}

}  // namespace

double IntensityHistogram::foreground_threshold() const {
  if (max_ == min_) return min_ - 1.0;
  const auto s = smooth_counts(counts_);
  const int n = bins();
  const int search_end = std::max(1, n / 4);
  int peak = 0;
  for (int b = 1; b < search_end; ++b)
    if (s[b] > s[peak]) peak = b;
  const double half = 0.5 * s[peak];
  int left = peak;
  while (left > 0 && s[left] > half) --left;
  int right = peak;
  while (right < n - 1 && s[right] > half) ++right;
  const bool left_ok = s[left] <= half && left < peak;
  const double hwhm_bins = left_ok ? static_cast<double>(peak - left) : static_cast<double>(right - peak);
  const double width = (max_ - min_) / n;
  const double sigma = std::max(hwhm_bins, 0.5) * width / 1.1774;
  return bin_center(peak) + 3.0 * sigma;
}

double IntensityHistogram::foreground_mode() const {
  if (max_ == min_) return min_;
  const auto s = smooth_counts(counts_);
  const double threshold = foreground_threshold();
  int best = -1;
  for (int b = 0; b < bins(); ++b) {
    if (bin_center(b) <= threshold) continue;
    if (best < 0 || s[b] > s[best]) best = b;
  }
  if (best < 0) best = static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
  return bin_center(best);
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

std::vector<double> default_landmark_percentiles() {
  return {10, 20, 30, 40, 50, 60, 70, 80, 90};
}

ImageLandmarks extract_landmarks(const IntensityHistogram& hist,
                                 std::span<const double> percentiles) {
  ImageLandmarks lm;
  lm.min_value = hist.min_value();
  lm.max_value = hist.max_value();
  const double threshold = hist.foreground_threshold();
  for (double p : percentiles) lm.percentiles.push_back(hist.percentile(p, threshold));
  lm.mode = hist.foreground_mode();
  return lm;
}

StandardizationModel train_standardization(std::span<const IntensityHistogram> histograms,
                                           std::vector<double> percentiles, double s_min,
                                           double s_max) {
  if (!(s_min < s_max) || !std::isfinite(s_min) || !std::isfinite(s_max))
    fail(ErrorCode::InvalidArgument, "standard scale needs s_min < s_max");
  if (histograms.size() < 2)
    fail(ErrorCode::InvalidArgument, "standardization training needs >= 2 histograms");
  if (percentiles.empty()) fail(ErrorCode::InvalidArgument, "no landmark percentiles");
  for (std::size_t i = 0; i < percentiles.size(); ++i) {
    if (!(percentiles[i] > 0 && percentiles[i] < 100))
      fail(ErrorCode::InvalidArgument, "landmark percentiles must lie in (0, 100)");
    if (i > 0 && !(percentiles[i] > percentiles[i - 1]))
      fail(ErrorCode::InvalidArgument, "landmark percentiles must be strictly increasing");
  }

  StandardizationModel model;
  model.s_min = s_min;
  model.s_max = s_max;
  model.landmark_percentiles = percentiles;
  model.histogram_bins = histograms.front().bins();
  model.trained_landmarks.assign(percentiles.size(), 0.0);
  const double span_s = model.s_max - model.s_min;
  for (const auto& h : histograms) {
    if (!(h.max_value() > h.min_value()))
      fail(ErrorCode::DegenerateData, "cannot train on a single-intensity histogram");
    const auto lm = extract_landmarks(h, percentiles);
    const double scale = span_s / (lm.max_value - lm.min_value);
    for (std::size_t k = 0; k < percentiles.size(); ++k)
      model.trained_landmarks[k] += model.s_min + (lm.percentiles[k] - lm.min_value) * scale;
    model.trained_mode += model.s_min + (lm.mode - lm.min_value) * scale;
  }
  const double n = static_cast<double>(histograms.size());
  for (auto& v : model.trained_landmarks) v /= n;
  model.trained_mode /= n;

  double prev = model.s_min;
  for (double v : model.trained_landmarks) {
    if (!(v > prev)) fail(ErrorCode::DegenerateData, "trained landmarks are not strictly increasing");
    prev = v;
  }
  if (!(prev < model.s_max) || !(model.trained_mode > model.s_min) ||
      !(model.trained_mode < model.s_max))
    fail(ErrorCode::DegenerateData, "trained landmarks fall outside the standard scale");
  return model;
}

Volume apply_standardization(const Volume& vol, const StandardizationModel& model) {
  if (!model.trained()) fail(ErrorCode::Untrained, "standardization model has not been trained");
  const auto hist = IntensityHistogram::from_volume(vol, model.histogram_bins);
  if (!(hist.max_value() > hist.min_value())) return Volume::filled(vol.grid(), model.s_min);
  const auto lm = extract_landmarks(hist, model.landmark_percentiles);

  struct Knot {
    double in, out;
  };
  std::vector<Knot> interior;
  for (std::size_t k = 0; k < lm.percentiles.size(); ++k)
    interior.push_back({lm.percentiles[k], model.trained_landmarks[k]});
  interior.push_back({lm.mode, model.trained_mode});
  std::stable_sort(interior.begin(), interior.end(),
                   [](const Knot& a, const Knot& b) { return a.in < b.in; });

  // Knots that would break strict input order or output monotonicity are
  // dropped, keeping the map monotone non-decreasing.
  std::vector<Knot> knots{{lm.min_value, model.s_min}};
  for (const auto& k : interior) {
    if (k.in > knots.back().in && k.in < lm.max_value && k.out >= knots.back().out &&
        k.out <= model.s_max)
      knots.push_back(k);
  }
  knots.push_back({lm.max_value, model.s_max});

  std::vector<double> out(vol.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = vol[i];
    auto it = std::upper_bound(knots.begin(), knots.end(), v,
                               [](double x, const Knot& k) { return x < k.in; });
    double mapped;
    if (it == knots.begin()) {
      mapped = model.s_min;
    } else if (it == knots.end()) {
      mapped = model.s_max;
    } else {
      const Knot& a = *(it - 1);
      const Knot& b = *it;
      mapped = a.out + (v - a.in) * (b.out - a.out) / (b.in - a.in);
    }
    out[i] = std::clamp(mapped, model.s_min, model.s_max);
  }
  return Volume(vol.grid(), std::move(out));
}

KeyValueFile StandardizationModel::to_keyvalue() const {
  KeyValueFile kv;
  kv.set("standardization.s_min", s_min);
  kv.set("standardization.s_max", s_max);
  kv.set("standardization.landmark_percentiles", landmark_percentiles);
  kv.set("standardization.trained_landmarks", trained_landmarks);
  kv.set("standardization.trained_mode", trained_mode);
  kv.set("standardization.histogram_bins", histogram_bins);
  return kv;
}

StandardizationModel StandardizationModel::from_keyvalue(const KeyValueFile& kv) {
  StandardizationModel m;
  m.s_min = kv.get_double("standardization.s_min");
  m.s_max = kv.get_double("standardization.s_max");
  m.landmark_percentiles = kv.get_doubles("standardization.landmark_percentiles");
  m.trained_landmarks = kv.get_doubles("standardization.trained_landmarks");
  m.trained_mode = kv.get_double("standardization.trained_mode");
  m.histogram_bins = static_cast<int>(
      kv.get_int("standardization.histogram_bins", IntensityHistogram::kDefaultBins));
  if (m.landmark_percentiles.size() != m.trained_landmarks.size())
    fail(ErrorCode::ConfigError, "standardization model: landmark count mismatch");
  return m;
}

void StandardizationModel::save(const std::filesystem::path& path) const {
  to_keyvalue().save(path);
}

StandardizationModel StandardizationModel::load(const std::filesystem::path& path) {
  return from_keyvalue(KeyValueFile::load(path));
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

Volume clean_volume(const Volume& vol, const PreprocessOptions& options) {
  Volume out = vol;
  if (options.bias_enabled) out = correct_bias(out, estimate_bias(out, options.bias));
  if (options.denoise_enabled && options.denoise_iterations > 0) {
    double k = options.conductance;
    if (k <= 0) k = 3.0 * estimate_noise_sigma(out);
    if (k > 0) out = denoise(out, options.denoise_iterations, k);
  }
  return out;
}

std::vector<Volume> preprocess_cohort(std::span<const Volume> cohort,
                                      const PreprocessOptions& options,
                                      StandardizationModel& model) {
  std::vector<Volume> cleaned;
  cleaned.reserve(cohort.size());
  for (const auto& v : cohort) cleaned.push_back(clean_volume(v, options));
  if (!options.standardize_enabled) return cleaned;
  if (!model.trained()) {
    std::vector<IntensityHistogram> hists;
    for (const auto& v : cleaned) hists.push_back(IntensityHistogram::from_volume(v, options.histogram_bins));
    model = train_standardization(hists, default_landmark_percentiles(), options.s_min,
                                  options.s_max);
  }
  for (auto& v : cleaned) v = apply_standardization(v, model);
  return cleaned;
}

}  // namespace fcseg
