#pragma once

// Test-only reference solvers. Nothing here shares code with the library's
// transport module.

#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

// Minimum transport cost by enumerating every basic feasible solution of
// the m x n transportation polytope. Each basis is a spanning tree of the
// complete bipartite graph; its flows are fixed by peeling leaves.
class BasisEnumerator {
 public:
  BasisEnumerator(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& cost)
      : a_(a), b_(b), cost_(cost), m_(a.size()), n_(b.size()), parent_(m_ + n_), size_(m_ + n_, 1) {
    for (std::size_t k = 0; k < parent_.size(); ++k) parent_[k] = k;
  }

  double minimum() {
    best_ = std::numeric_limits<double>::infinity();
    chosen_.clear();
    search(0);
    return best_;
  }

  std::size_t bases_visited() const { return visited_; }

 private:
  // Union-find without path compression so unions can be undone.
  std::size_t find(std::size_t x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
  }

  void search(std::size_t cell) {
    const std::size_t need = m_ + n_ - 1;
    if (chosen_.size() == need) {
      evaluate();
      return;
    }
    if (cell == m_ * n_ || chosen_.size() + (m_ * n_ - cell) < need) return;

    const std::size_t i = cell / n_, j = cell % n_;
    std::size_t ri = find(i), rj = find(m_ + j);
    if (ri != rj) {
      if (size_[ri] < size_[rj]) std::swap(ri, rj);
      parent_[rj] = ri;
      size_[ri] += size_[rj];
      chosen_.push_back(cell);
      search(cell + 1);
      chosen_.pop_back();
      size_[ri] -= size_[rj];
      parent_[rj] = rj;
    }
    search(cell + 1);
  }

  void evaluate() {
    ++visited_;
    const std::size_t nodes = m_ + n_;
    std::vector<double> rest(nodes);
    for (std::size_t i = 0; i < m_; ++i) rest[i] = a_[i];
    for (std::size_t j = 0; j < n_; ++j) rest[m_ + j] = b_[j];
    std::vector<int> degree(nodes, 0);
    for (std::size_t cell : chosen_) {
      ++degree[cell / n_];
      ++degree[m_ + cell % n_];
    }
    std::vector<char> used(chosen_.size(), 0);
    double total = 0.0;
    for (std::size_t round = 0; round < chosen_.size(); ++round) {
      // Find a leaf and the single unused edge attached to it.
      std::size_t edge = chosen_.size(), leaf = nodes;
      for (std::size_t e = 0; e < chosen_.size() && edge == chosen_.size(); ++e) {
        if (used[e]) continue;
        const std::size_t r = chosen_[e] / n_, c = m_ + chosen_[e] % n_;
        if (degree[r] == 1) {
          edge = e, leaf = r;
        } else if (degree[c] == 1) {
          edge = e, leaf = c;
        }
      }
      const std::size_t r = chosen_[edge] / n_, c = m_ + chosen_[edge] % n_;
      const std::size_t other = leaf == r ? c : r;
      const double flow = rest[leaf];
      if (flow < -1e-12) return;  // infeasible basis
      rest[leaf] = 0.0;
      rest[other] -= flow;
      --degree[r];
      --degree[c];
      used[edge] = 1;
      total += flow * cost_[chosen_[edge]];
    }
    if (total < best_) best_ = total;
  }

  const std::vector<double>& a_;
  const std::vector<double>& b_;
  const std::vector<double>& cost_;
  std::size_t m_, n_;
  std::vector<std::size_t> parent_, size_;
  std::vector<std::size_t> chosen_;
  double best_ = 0.0;
  std::size_t visited_ = 0;
};

inline double brute_force_emd(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<double>& cost) {
  return BasisEnumerator(a, b, cost).minimum();
}

// Random strictly positive weights summing to 1.
inline std::vector<double> random_weights(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) total += (x = u(rng));
  for (auto& x : w) x /= total;
  return w;
}

inline std::vector<std::vector<double>> random_points(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts)
    for (auto& x : p) x = g(rng);
  return pts;
}

inline std::vector<double> euclidean_costs(const std::vector<std::vector<double>>& xs,
                                           const std::vector<std::vector<double>>& ys) {
  std::vector<double> c;
  c.reserve(xs.size() * ys.size());
  for (const auto& x : xs) {
    for (const auto& y : ys) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
      c.push_back(std::sqrt(s));
    }
  }
  return c;
}

}  // namespace oracle
