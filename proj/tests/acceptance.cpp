// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: fcseg_acceptance [work_dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fcseg/affinity.hpp"
#include "fcseg/affinity_propagation.hpp"
#include "fcseg/fusion.hpp"
#include "fcseg/fuzzy_connectedness.hpp"
#include "fcseg/phantom.hpp"
#include "fcseg/pipeline.hpp"
#include "fcseg/seeding.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

fs::path g_work;

std::vector<std::uint8_t> to_vec(const fcseg::LabelMap& m) { return {m.labels().begin(), m.labels().end()}; }

// 1. Max-min propagation against exhaustive simple-path enumeration.
Outcome fc_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dx(1, 5), dy(1, 4), dz(1, 3), level(0, 10);
  std::size_t mismatches = 0, voxels = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int nx, ny, nz;
    do {
      nx = dx(rng), ny = dy(rng), nz = dz(rng);
    } while (nx * ny * nz < 2 || nx * ny * nz > 20);
    const fcseg::Grid grid({nx, ny, nz}, {});
    const oracle::Graph g{nx, ny, nz};
    // Quantized so ties between paths are common.
    std::map<std::pair<std::size_t, std::size_t>, double> edge;
    for (std::size_t v = 0; v < g.size(); ++v)
      for (std::size_t w : g.neighbors6(v))
        if (v < w) edge[{v, w}] = level(rng) / 10.0;
    auto aff = [&](std::size_t p, std::size_t q) { return edge.at({std::min(p, q), std::max(p, q)}); };
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
    std::vector<std::size_t> seeds(1 + trial % 3);
    for (auto& s : seeds) s = pick(rng);
    const auto got = fcseg::compute_fc_with(grid, seeds, fcseg::Adjacency::Six, aff);
    const auto want = oracle::all_paths_bottleneck(g, seeds, aff);
    for (std::size_t i = 0; i < want.size(); ++i) mismatches += got[i] != want[i];
    voxels += want.size();
  }
  const double secs = since(t0);
  return {mismatches == 0 && secs < 10.0,
          std::to_string(mismatches) + "/" + std::to_string(voxels) + " voxels differ, " +
              fmt("%.2f s (< 10 s)", secs)};
}

// 2. Availability truth table, written out row by row.
Outcome truth_table() {
  struct Row {
    bool mri1, mri2, mri3, out;
  };
  const Row rows[8] = {{0, 0, 0, 0}, {0, 0, 1, 0}, {0, 1, 0, 1}, {0, 1, 1, 1},
                       {1, 0, 0, 0}, {1, 0, 1, 1}, {1, 1, 0, 1}, {1, 1, 1, 1}};
  const fcseg::Grid grid({2, 1, 1}, {});
  const fcseg::LabelMap lm(grid, {1, 2});
  int ok = 0;
  for (const auto& r : rows) {
    const bool avail = fcseg::can_fuse({r.mri1, r.mri2, r.mri3});
    fcseg::ContrastLabels cl;
    if (r.mri1) cl.mri1 = lm;
    if (r.mri2) cl.mri2 = lm;
    if (r.mri3) cl.mri3 = lm;
    bool fused = true;
    try {
      fcseg::decision_fuse(cl);
    } catch (const fcseg::Error& e) {
      fused = e.code() != fcseg::ErrorCode::FusionPrecondition;
    }
    ok += avail == r.out && fused == r.out;
  }
  return {ok == 8, std::to_string(ok) + "/8 rows match"};
}

fcseg::PipelineConfig base_config(const std::string& name) {
  fcseg::PipelineConfig c;
  c.out_dir = g_work / name;
  c.workers = 1;
  c.fc.workers = 1;
  return c;
}

// 3. Clean phantom, AP seeding, full pipeline.
Outcome clean_phantom() {
  auto c = base_config("clean");
  c.seed = 3;
  const auto t0 = Clock::now();
  const auto res = fcseg::run_pipeline(c);
  const double secs = since(t0);
  const auto truth = to_vec(*fcseg::load_subjects(c).front().truth);
  const auto pred = to_vec(res.subjects.front().fc.labels);
  const double fat = oracle::dice(pred, truth, 1), muscle = oracle::dice(pred, truth, 2);
  return {fat >= 0.98 && muscle >= 0.98 && secs < 30.0,
          "DSC fat " + fmt("%.4f", fat) + ", muscle " + fmt("%.4f", muscle) + " (>= 0.98), " +
              fmt("%.1f s (< 30 s)", secs)};
}

fcseg::PipelineConfig degraded_config() {
  auto c = base_config("degraded");
  c.seed = 4;
  c.cohort.count = 10;
  c.cohort.gain_jitter = 0.2;
  c.cohort.base.noise_sigma = 0.1 * c.cohort.base.class_separation();
  c.cohort.base.bias_amplitude = 0.2;
  return c;
}

struct DegradedRun {
  std::vector<std::vector<std::uint8_t>> truth;
  fcseg::PipelineResult result;
};

const DegradedRun& degraded_run() {
  static const DegradedRun run = [] {
    DegradedRun r;
    const auto c = degraded_config();
    for (const auto& s : fcseg::load_subjects(c)) r.truth.push_back(to_vec(*s.truth));
    r.result = fcseg::run_pipeline(c);
    return r;
  }();
  return run;
}

// 4. Noise, bias and gain jitter, full preprocessing, 10 seeds.
Outcome degraded_phantom() {
  const auto& run = degraded_run();
  std::vector<double> fat, muscle;
  for (std::size_t k = 0; k < run.truth.size(); ++k) {
    const auto pred = to_vec(run.result.subjects[k].fc.labels);
    fat.push_back(oracle::dice(pred, run.truth[k], 1));
    muscle.push_back(oracle::dice(pred, run.truth[k], 2));
  }
  const double f = oracle::mean(fat), m = oracle::mean(muscle);
  return {f >= 0.85 && m >= 0.85, "mean DSC over " + std::to_string(fat.size()) + " seeds: fat " +
                                      fmt("%.4f", f) + ", muscle " + fmt("%.4f", m) + " (>= 0.85)"};
}

// 5. Per-tissue CoV inside the true masks, before and after preprocessing.
Outcome cov_reduction() {
  auto c = base_config("cov");
  c.seed = 5;
  c.cohort.count = 10;
  c.cohort.gain_jitter = 0.2;
  c.cohort.offset_jitter = 50;
  c.cohort.base.bias_amplitude = 0.2;
  c.cohort.base.noise_sigma = 0.05 * c.cohort.base.class_separation();
  const auto subjects = fcseg::load_subjects(c);
  const auto res = fcseg::run_pipeline(c, fcseg::PipelineStage::Preprocess);
  int improved = 0;
  std::ostringstream worst;
  for (std::size_t k = 0; k < subjects.size(); ++k) {
    const auto truth = to_vec(*subjects[k].truth);
    bool all = true;
    for (std::uint8_t tissue : {std::uint8_t{1}, std::uint8_t{2}})
      for (std::size_t ch = 0; ch < subjects[k].image.channel_count(); ++ch) {
        std::vector<double> pre, post;
        const auto a = subjects[k].image.channel(ch).data();
        const auto b = res.subjects[k].preprocessed.channel(ch).data();
        for (std::size_t i = 0; i < truth.size(); ++i)
          if (truth[i] == tissue) {
            pre.push_back(a[i]);
            post.push_back(b[i]);
          }
        if (!(oracle::cov(post) < oracle::cov(pre))) {
          all = false;
          worst << " [" << subjects[k].name << " tissue " << int(tissue) << " ch " << ch << ": "
                << fmt("%.4f", oracle::cov(pre)) << " -> " << fmt("%.4f", oracle::cov(post)) << "]";
        }
      }
    improved += all;
  }
  return {improved >= 9, std::to_string(improved) +
                             "/10 phantoms lower CoV for every tissue and channel (>= 9)" + worst.str()};
}

// 6. Decision fusion against the best single contrast on the degraded cohort.
Outcome fusion_preserves() {
  const auto& run = degraded_run();
  const auto& subjects = run.result.subjects;
  const std::size_t C = subjects.front().fc.contrast_labels.size();
  std::ostringstream d;
  bool pass = true;
  for (std::uint8_t cls : {std::uint8_t{1}, std::uint8_t{2}}) {
    std::vector<double> fused;
    std::vector<std::vector<double>> single(C);
    for (std::size_t k = 0; k < subjects.size(); ++k) {
      fused.push_back(oracle::dice(to_vec(*subjects[k].decision), run.truth[k], cls));
      for (std::size_t ch = 0; ch < C; ++ch)
        single[ch].push_back(oracle::dice(to_vec(subjects[k].fc.contrast_labels[ch]), run.truth[k], cls));
    }
    double best = 0;
    for (const auto& s : single) best = std::max(best, oracle::mean(s));
    const double f = oracle::mean(fused);
    pass = pass && f >= best - 0.02;
    d << (cls == 1 ? "fat" : " muscle") << " fused " << fmt("%.4f", f) << " vs best single "
      << fmt("%.4f", best) << ";";
  }
  return {pass, d.str() + " margin 0.02"};
}

// 7. Weight normalization and scale invariance.
Outcome weights() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_int_distribution<int> len(2, 5);
  double worst_sum = 0, worst_scale = 0, worst_oracle = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> dsc(static_cast<std::size_t>(len(rng)));
    for (double& v : dsc) v = u(rng);
    const double mx = *std::max_element(dsc.begin(), dsc.end());
    const double k = std::uniform_real_distribution<double>(0.01, 1.0 / mx)(rng);
    std::vector<double> scaled;
    for (double v : dsc) scaled.push_back(k * v);
    const auto w = fcseg::compute_contrast_weights(dsc).w;
    const auto ws = fcseg::compute_contrast_weights(scaled).w;
    double sum = 0, total = 0;
    for (double v : dsc) total += v;
    for (std::size_t i = 0; i < w.size(); ++i) {
      sum += w[i];
      worst_scale = std::max(worst_scale, std::abs(w[i] - ws[i]));
      worst_oracle = std::max(worst_oracle, std::abs(w[i] - dsc[i] / total));
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  const bool pass = worst_sum <= 1e-12 && worst_scale <= 1e-12 && worst_oracle <= 1e-12;
  std::ostringstream d;
  d << "max |sum-1| " << worst_sum << ", max scale drift " << worst_scale << ", max |w - d/sum d| "
    << worst_oracle << " (<= 1e-12)";
  return {pass, d.str()};
}

// 8. AP against exhaustive k-medoids on well separated clusters.
Outcome ap_oracle() {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> sep(5.0, 8.0);
  std::uniform_int_distribution<int> per(8, 12);
  int count_ok = 0, assign_ok = 0, objective_prefers = 0;
  double worst = 1.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 2 + static_cast<std::size_t>(t % 2);
    const std::size_t dim = 1 + static_cast<std::size_t>((t / 2) % 2);
    // Centres on a line (1-D) or a jittered ring (2-D), >= 5 sigma apart.
    std::vector<std::vector<double>> centres;
    double pos = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (dim == 1) {
        centres.push_back({pos});
        pos += sep(rng);
      } else {
        const double ang = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(k);
        // Chord of a ring of radius R between neighbours is >= 2R sin(pi/3).
        const double r = sep(rng) / (2.0 * std::sin(M_PI / 3.0));
        centres.push_back({r * std::cos(ang), r * std::sin(ang)});
      }
    }
    std::vector<std::vector<double>> pts;
    for (const auto& ctr : centres) {
      const int m = per(rng);
      for (int i = 0; i < m; ++i) {
        std::vector<double> p(ctr);
        for (double& v : p) v += n01(rng);
        pts.push_back(p);
      }
    }
    const auto ap = fcseg::ap_cluster(pts);
    if (ap.exemplars.size() != k) {
      // Net similarity (the AP objective) of the exact medoid solutions at
      // the true and at the returned count, same preference.
      auto net = [&](std::size_t kk) {
        const auto a = oracle::brute_force_kmedoids(pts, kk);
        double s = ap.preference * static_cast<double>(kk);
        for (std::size_t i = 0; i < pts.size(); ++i)
          for (std::size_t c = 0; c < dim; ++c) s -= (pts[i][c] - pts[a[i]][c]) * (pts[i][c] - pts[a[i]][c]);
        return s;
      };
      if (ap.exemplars.size() <= 4 && net(ap.exemplars.size()) > net(k)) ++objective_prefers;
      continue;
    }
    ++count_ok;
    const double agree = oracle::partition_agreement(ap.assignment, oracle::brute_force_kmedoids(pts, k));
    worst = std::min(worst, agree);
    assign_ok += agree >= 0.99;
  }
  return {count_ok == 50 && assign_ok == 50,
          "cluster count right in " + std::to_string(count_ok) + "/50, >= 99% agreement in " +
              std::to_string(assign_ok) + "/50 (worst " + fmt("%.3f", worst) + "); " +
              std::to_string(objective_prefers) + " of the " + std::to_string(50 - count_ok) +
              " count misses score higher than the true count under the median preference"};
}

// 9. Slice area vs class volume across a geometry-varied cohort.
Outcome slice_correlation() {
  auto c = base_config("slices");
  c.seed = 9;
  c.cohort.count = 20;
  c.cohort.geometry_jitter = 0.15;
  c.cohort.base.noise_sigma = 0.05 * c.cohort.base.class_separation();
  c.save_fuzzy = false;
  const auto res = fcseg::run_pipeline(c);
  const auto& dims = res.subjects.front().fc.labels.grid().dims();
  const double px = res.subjects.front().fc.labels.grid().spacing().sx *
                    res.subjects.front().fc.labels.grid().spacing().sy;
  const double vox = px * res.subjects.front().fc.labels.grid().spacing().sz;
  double worst = 1.0;
  int worst_z = -1;
  for (std::uint8_t cls : {std::uint8_t{1}, std::uint8_t{2}})
    for (int z = dims.nz / 4; z < 3 * dims.nz / 4; ++z) {
      std::vector<double> area, volume;
      for (const auto& s : res.subjects) {
        const auto l = s.fc.labels.labels();
        const std::size_t slab = static_cast<std::size_t>(dims.nx) * dims.ny;
        double a = 0, v = 0;
        for (std::size_t i = 0; i < l.size(); ++i)
          if (l[i] == cls) {
            v += vox;
            if (i / slab == static_cast<std::size_t>(z)) a += px;
          }
        area.push_back(a);
        volume.push_back(v);
      }
      const double r = oracle::pearson(area, volume);
      if (r < worst) {
        worst = r;
        worst_z = z;
      }
    }
  return {worst > 0.97, "min Pearson r over mid-stack slices " + fmt("%.4f", worst) + " at z=" +
                            std::to_string(worst_z) + " (> 0.97), 20 phantoms"};
}

// 10. Every AP seed honours the placement constraints.
Outcome seed_constraints() {
  std::size_t total = 0, bad = 0;
  int phantoms = 0;
  fcseg::APSeedOptions opts;
  opts.seeds_per_class = 50;
  opts.min_component_size = 100;
  while (total < 1000) {
    fcseg::PhantomConfig cfg;
    cfg.seed = 1000 + static_cast<std::uint64_t>(phantoms);
    cfg.noise_sigma = 0.05 * (phantoms % 3) * cfg.class_separation();
    cfg.bias_amplitude = 0.1 * (phantoms % 2);
    cfg.leg_radius_mm = 24.0 + 2.0 * (phantoms % 3);
    const auto ph = fcseg::generate(cfg);
    const auto sr = fcseg::ap_seeds(ph.image, opts);
    const auto& grid = ph.image.grid();
    const oracle::Graph g{grid.dims().nx, grid.dims().ny, grid.dims().nz};
    const auto cls = to_vec(sr.class_map);
    for (const auto& s : sr.seeds.entries()) {
      ++total;
      if (!grid.contains(s.coord)) {
        ++bad;
        continue;
      }
      const std::size_t i = grid.index(s.coord);
      const auto nb = g.neighbors6(i);
      bool ok = nb.size() == 6 && cls[i] == s.class_id;
      for (std::size_t q : nb) ok = ok && cls[q] == cls[i];
      ok = ok && oracle::region_size(g, cls, i) >= static_cast<std::size_t>(opts.min_component_size);
      bad += !ok;
    }
    ++phantoms;
  }
  return {bad == 0, std::to_string(total - bad) + "/" + std::to_string(total) + " seeds valid over " +
                        std::to_string(phantoms) + " phantoms"};
}

// 11. Single contrast at 256x296x80: AP seeding and one FC search per class.
Outcome efficiency() {
  fcseg::PhantomConfig cfg;
  cfg.dims = {256, 296, 80};
  cfg.leg_separation_mm = 124;
  cfg.leg_radius_mm = 58;
  cfg.muscle_radius_mm = 42;
  cfg.bone_radius_mm = 9;
  cfg.channel_names = {"waterfat"};
  cfg.means = {{10}, {900}, {450}};
  cfg.noise_sigma = 0.05 * cfg.class_separation();
  cfg.seed = 11;
  const auto ph = fcseg::generate(cfg);
  auto t0 = Clock::now();
  const auto sr = fcseg::ap_seeds(ph.image);
  const double ap_secs = since(t0);
  const auto params = fcseg::estimate_param_table(ph.image, sr.seeds);
  double worst = 0;
  for (const auto& c : sr.seeds.registry().classes()) {
    t0 = Clock::now();
    const auto coords = sr.seeds.coords_of(c.id);
    fcseg::compute_fc(ph.image.channel(0), params.get(c.id, 0), coords);
    worst = std::max(worst, since(t0));
  }
  return {ap_secs < 10.0 && worst < 60.0,
          "AP seeding " + fmt("%.2f s (< 10 s)", ap_secs) + ", slowest per-class FC " +
              fmt("%.2f s (< 60 s)", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  g_work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "fcseg_acceptance";
  fs::create_directories(g_work);
  fcseg::set_warning_handler([](std::string_view) {});

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"fc-oracle-equivalence", fc_oracle},
      {"decision-truth-table", truth_table},
      {"phantom-clean", clean_phantom},
      {"phantom-degraded", degraded_phantom},
      {"preprocess-cov", cov_reduction},
      {"fusion-preserves", fusion_preserves},
      {"weight-normalization", weights},
      {"ap-kmedoids-oracle", ap_oracle},
      {"slice-volume-correlation", slice_correlation},
      {"seed-constraints", seed_constraints},
      {"efficiency-envelope", efficiency},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
