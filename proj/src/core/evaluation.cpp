#include "fcseg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "fcseg/filters.hpp"

namespace fcseg {

namespace {

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) fail(ErrorCode::DimMismatch, "masks differ in size");
}

}  // namespace

double dice(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  require_same_size(a.size(), b.size());
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

SensSpec sensitivity_specificity(std::span<const std::uint8_t> pred,
                                 std::span<const std::uint8_t> truth) {
  require_same_size(pred.size(), truth.size());
  SensSpec s;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, t = truth[i] != 0;
    if (p && t) ++s.tp;
    else if (p) ++s.fp;
    else if (t) ++s.fn;
    else ++s.tn;
  }
  if (s.tp + s.fn > 0) s.sensitivity = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
  if (s.tn + s.fp > 0) s.specificity = static_cast<double>(s.tn) / static_cast<double>(s.tn + s.fp);
  return s;
}

double cov(std::span<const double> values) {
  if (values.size() < 2) fail(ErrorCode::InvalidArgument, "CoV needs at least 2 values");
  const double m = mean_of(values);
  if (m == 0.0) fail(ErrorCode::DegenerateData, "CoV undefined for zero mean");
  return stddev_of(values) / std::abs(m);
}

double quantify_volume(const LabelMap& labels, std::uint8_t class_id, const ClassRegistry& registry) {
  if (!registry.contains(class_id))
    fail(ErrorCode::UnknownClass, "class id " + std::to_string(class_id) + " is not registered");
  std::size_t n = 0;
  for (auto l : labels.labels()) n += l == class_id;
  return static_cast<double>(n) * labels.grid().spacing().voxel_volume();
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::InvalidArgument, "pearson inputs differ in length");
  if (x.size() < 3) fail(ErrorCode::InvalidArgument, "pearson needs at least 3 pairs");
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0) || !(syy > 0)) fail(ErrorCode::DegenerateData, "pearson input has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

LinearFit linear_regression(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::InvalidArgument, "regression inputs differ in length");
  if (x.size() < 3) fail(ErrorCode::InvalidArgument, "regression needs at least 3 samples");
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0)) fail(ErrorCode::DegenerateData, "regression design is degenerate (constant x)");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

LinearFit slice_volume_regression(std::span<const SliceVolumeSample> cohort, int slice) {
  std::vector<double> x, y;
  for (const auto& s : cohort) {
    if (slice < 0 || static_cast<std::size_t>(slice) >= s.slice_areas.size())
      fail(ErrorCode::OutOfBounds, "slice index outside subject");
    x.push_back(s.slice_areas[static_cast<std::size_t>(slice)]);
    y.push_back(s.volume);
  }
  return linear_regression(x, y);
}

std::vector<double> slice_areas(const LabelMap& labels, std::uint8_t class_id) {
  const Dims& d = labels.grid().dims();
  const Spacing& sp = labels.grid().spacing();
  const std::size_t per_slice = static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny);
  std::vector<double> out(static_cast<std::size_t>(d.nz), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == class_id) out[i / per_slice] += 1.0;
  for (double& a : out) a *= sp.sx * sp.sy;
  return out;
}

std::vector<ClassMetrics> evaluate_labels(const LabelMap& pred, const LabelMap& truth,
                                          const ClassRegistry& registry, bool include_background) {
  if (pred.grid().dims() != truth.grid().dims())
    fail(ErrorCode::DimMismatch, "prediction and ground truth differ in dims");
  std::vector<ClassMetrics> out;
  for (const auto& c : registry.classes()) {
    if (c.id == ClassRegistry::kBackground && !include_background) continue;
    const auto p = pred.mask_of(c.id), t = truth.mask_of(c.id);
    ClassMetrics m;
    m.name = c.name;
    m.class_id = c.id;
    m.dice = dice(p, t);
    m.sens_spec = sensitivity_specificity(p, t);
    m.volume_mm3 = quantify_volume(pred, c.id, registry);
    m.truth_volume_mm3 = quantify_volume(truth, c.id, registry);
    out.push_back(std::move(m));
  }
  return out;
}

void EvaluationReport::add(const std::string& image, const std::string& cls,
                           const std::string& metric, double value) {
  rows_.push_back({image, cls, metric, value});
}

void EvaluationReport::add_metrics(const std::string& image, std::span<const ClassMetrics> metrics) {
  for (const auto& m : metrics) {
    add(image, m.name, "dice", m.dice);
    if (m.sens_spec.sensitivity) add(image, m.name, "sensitivity", *m.sens_spec.sensitivity);
    if (m.sens_spec.specificity) add(image, m.name, "specificity", *m.sens_spec.specificity);
    add(image, m.name, "volume_mm3", m.volume_mm3);
    add(image, m.name, "truth_volume_mm3", m.truth_volume_mm3);
  }
}

void EvaluationReport::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "image,class,metric,value\n";
  for (const auto& r : rows_)
    out << r.image << ',' << r.cls << ',' << r.metric << ',' << format_double(r.value) << '\n';
  if (!out) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

KeyValueFile EvaluationReport::summary() const {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : rows_) groups[r.cls + "." + r.metric].push_back(r.value);
  KeyValueFile kv;
  for (const auto& [key, values] : groups) {
    kv.set(key + ".mean", mean_of(values));
    kv.set(key + ".std", stddev_of(values));
    kv.set(key + ".n", static_cast<long long>(values.size()));
  }
  return kv;
}

}  // namespace fcseg
