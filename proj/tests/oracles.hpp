#pragma once

// Test-side reference implementations. Deliberately naive and independent of
// the library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

namespace oracle {

struct Graph {
  int nx = 0, ny = 0, nz = 0;
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
  std::vector<std::size_t> neighbors6(std::size_t i) const {
    const int x = static_cast<int>(i % nx), y = static_cast<int>((i / nx) % ny),
              z = static_cast<int>(i / (static_cast<std::size_t>(nx) * ny));
    std::vector<std::size_t> out;
    const int d[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
    for (const auto& o : d) {
      const int a = x + o[0], b = y + o[1], c = z + o[2];
      if (a < 0 || b < 0 || c < 0 || a >= nx || b >= ny || c >= nz) continue;
      out.push_back(static_cast<std::size_t>(a) + static_cast<std::size_t>(nx) * (b + static_cast<std::size_t>(ny) * c));
    }
    return out;
  }
};

// Strength of the best path from any seed to every voxel, by enumerating
// every simple path. Exponential; only for tiny grids.
inline std::vector<double> all_paths_bottleneck(
    const Graph& g, const std::vector<std::size_t>& seeds,
    const std::function<double(std::size_t, std::size_t)>& affinity) {
  const std::size_t n = g.size();
  std::vector<double> best(n, 0.0);
  std::vector<char> on_path(n, 0);
  std::function<void(std::size_t, double)> walk = [&](std::size_t v, double strength) {
    best[v] = std::max(best[v], strength);
    on_path[v] = 1;
    for (std::size_t q : g.neighbors6(v))
      if (!on_path[q]) walk(q, std::min(strength, affinity(v, q)));
    on_path[v] = 0;
  };
  for (std::size_t s : seeds) walk(s, 1.0);
  return best;
}

// Exhaustive k-medoids on squared Euclidean distance; returns the medoid index
// chosen by every point.
inline std::vector<std::size_t> brute_force_kmedoids(const std::vector<std::vector<double>>& pts,
                                                     std::size_t k) {
  const std::size_t n = pts.size();
  auto d2 = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t c = 0; c < pts[a].size(); ++c) s += (pts[a][c] - pts[b][c]) * (pts[a][c] - pts[b][c]);
    return s;
  };
  std::vector<std::size_t> pick(k), best_pick;
  double best_cost = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t)> choose = [&](std::size_t depth, std::size_t from) {
    if (depth == k) {
      double cost = 0;
      for (std::size_t i = 0; i < n; ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t p : pick) m = std::min(m, d2(i, p));
        cost += m;
      }
      if (cost < best_cost) {
        best_cost = cost;
        best_pick = pick;
      }
      return;
    }
    for (std::size_t i = from; i < n; ++i) {
      pick[depth] = i;
      choose(depth + 1, i + 1);
    }
  };
  choose(0, 0);
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t b = best_pick.front();
    for (std::size_t p : best_pick)
      if (d2(i, p) < d2(i, b)) b = p;
    out[i] = b;
  }
  return out;
}

// Fraction of points on which two partitions agree under the best one-to-one
// matching of their cluster ids.
inline double partition_agreement(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> ia(a), ib(b);
  std::sort(ia.begin(), ia.end());
  ia.erase(std::unique(ia.begin(), ia.end()), ia.end());
  std::sort(ib.begin(), ib.end());
  ib.erase(std::unique(ib.begin(), ib.end()), ib.end());
  auto rank = [](const std::vector<std::size_t>& ids, std::size_t v) {
    return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), v) - ids.begin());
  };
  const std::size_t m = std::max(ia.size(), ib.size());
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) agree += perm[rank(ia, a[i])] == rank(ib, b[i]);
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(a.size());
}

// Size of the 6-connected region of equal labels containing `start`.
inline std::size_t region_size(const Graph& g, const std::vector<std::uint8_t>& labels,
                               std::size_t start) {
  std::vector<char> seen(g.size(), 0);
  std::queue<std::size_t> q;
  q.push(start);
  seen[start] = 1;
  std::size_t count = 0;
  while (!q.empty()) {
    const std::size_t v = q.front();
    q.pop();
    ++count;
    for (std::size_t w : g.neighbors6(v))
      if (!seen[w] && labels[w] == labels[start]) {
        seen[w] = 1;
        q.push(w);
      }
  }
  return count;
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Sample standard deviation over mean.
inline double cov(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1)) / std::abs(m);
}

inline double dice(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b,
                   std::uint8_t label) {
  std::size_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] == label;
    nb += b[i] == label;
    inter += a[i] == label && b[i] == label;
  }
  return na + nb == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

}  // namespace oracle
