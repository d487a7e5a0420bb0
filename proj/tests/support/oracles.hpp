#pragma once

// Independent reference implementations used only by tests. They are written
// as direct loop transcriptions over std::vector and share no code with the
// library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

/// Gyrovector addition transcribed term by term.
inline Vec mobius_add(const Vec& x, const Vec& y, double c) {
  const double xy = dot(x, y);
  const double xx = dot(x, x);
  const double yy = dot(y, y);
  const double a = 1.0 + 2.0 * c * xy + c * yy;
  const double b = 1.0 - c * xx;
  const double den = 1.0 + 2.0 * c * xy + c * c * xx * yy;
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (a * x[i] + b * y[i]) / den;
  return out;
}

inline double dist_hyp(const Vec& x, const Vec& y, double c) {
  Vec neg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
  const Vec m = mobius_add(neg, y, c);
  return 2.0 / std::sqrt(c) * std::atanh(std::sqrt(c) * norm(m));
}

inline double dist_cos(const Vec& a, const Vec& b) { return 2.0 - 2.0 * dot(a, b) / (norm(a) * norm(b)); }

/// clip -> exp at 0 -> boundary clip, in plain loops.
inline Vec to_ball(const Vec& v, double c, double r) {
  Vec x = v;
  const double n = norm(x);
  if (n > r) {
    for (double& e : x) e *= r / n;
  }
  const double nx = norm(x);
  if (nx == 0.0) return x;
  const double s = std::sqrt(c);
  const double factor = std::tanh(s * nx) / (s * nx);
  for (double& e : x) e *= factor;
  const double limit = (1.0 - 1e-5) / s;
  const double nb = norm(x);
  if (nb >= limit) {
    for (double& e : x) e *= limit / nb;
  }
  return x;
}

/// Mean pairwise cross-entropy for a two-subset batch given as rows and labels,
/// with explicit loops: embed, distance matrix, log-softmax over k != i.
inline double pair_loss(const Mat& rows, const std::vector<std::uint32_t>& labels, bool hyperbolic,
                        double tau, double c, double r) {
  const std::size_t k = rows.size();
  Mat z(k);
  for (std::size_t i = 0; i < k; ++i) z[i] = hyperbolic ? to_ball(rows[i], c, r) : rows[i];
  Mat d(k, Vec(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i != j) d[i][j] = hyperbolic ? dist_hyp(z[i], z[j], c) : dist_cos(z[i], z[j]);
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t pos = k;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i && labels[j] == labels[i]) pos = j;
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) denom += std::exp(-d[i][j] / tau);
    }
    total += -std::log(std::exp(-d[i][pos] / tau) / denom);
  }
  return total / static_cast<double>(k);
}

/// (A (x) B)[i][j] = max_k min(A[i][k], B[k][j]) with the textbook loop order.
inline Mat minmax(const Mat& a, const Mat& b) {
  const std::size_t n = a.size();
  Mat out(n, Vec(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) best = std::max(best, std::min(a[i][k], b[k][j]));
      out[i][j] = best;
    }
  }
  return out;
}

/// Four-point delta at basepoint w: max over (x, y, z) of
/// min((x,z)_w, (z,y)_w) - (x,y)_w, Gromov products taken straight from d.
inline double delta_naive(const Mat& d, std::size_t w) {
  const std::size_t n = d.size();
  auto gp = [&](std::size_t x, std::size_t y) { return 0.5 * (d[w][x] + d[w][y] - d[x][y]); };
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      double inner = -std::numeric_limits<double>::infinity();
      for (std::size_t z = 0; z < n; ++z) inner = std::max(inner, std::min(gp(x, z), gp(z, y)));
      best = std::max(best, inner - gp(x, y));
    }
  }
  return best;
}

/// Recall@K by fully sorting every query's candidate list by (distance, index).
inline double recall_bruteforce(const Mat& points, const std::vector<std::uint32_t>& labels, int k,
                                const std::function<double(const Vec&, const Vec&)>& dist) {
  const std::size_t m = points.size();
  std::size_t hits = 0;
  for (std::size_t q = 0; q < m; ++q) {
    std::vector<std::pair<double, std::size_t>> cands;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != q) cands.emplace_back(dist(points[q], points[j]), j);
    }
    std::sort(cands.begin(), cands.end());
    bool hit = false;
    for (int t = 0; t < k; ++t) hit = hit || labels[cands[static_cast<std::size_t>(t)].second] == labels[q];
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(m);
}

inline double recall_query_gallery(const Mat& queries, const std::vector<std::uint32_t>& qlabels,
                                   const Mat& gallery, const std::vector<std::uint32_t>& glabels, int k,
                                   const std::function<double(const Vec&, const Vec&)>& dist) {
  std::size_t hits = 0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<std::pair<double, std::size_t>> cands;
    for (std::size_t j = 0; j < gallery.size(); ++j) cands.emplace_back(dist(queries[q], gallery[j]), j);
    std::sort(cands.begin(), cands.end());
    bool hit = false;
    for (int t = 0; t < k; ++t) hit = hit || glabels[cands[static_cast<std::size_t>(t)].second] == qlabels[q];
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

/// Scalar AdamW step in the published decoupled form.
struct ScalarAdamW {
  double lr, wd, b1, b2, eps;
  double m = 0.0, v = 0.0;
  int t = 0;

  double step(double p, double g, bool decay) {
    ++t;
    if (decay) p = p - lr * wd * p;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mhat = m / (1.0 - std::pow(b1, t));
    const double vhat = v / (1.0 - std::pow(b2, t));
    return p - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

/// Shortest-path metric of a weighted tree via Floyd-Warshall.
inline Mat tree_metric(std::size_t n, const std::vector<std::size_t>& parent, const std::vector<double>& weight) {
  const double inf = std::numeric_limits<double>::infinity();
  Mat d(n, Vec(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    d[i][parent[i]] = weight[i];
    d[parent[i]][i] = weight[i];
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

}  // namespace oracle
