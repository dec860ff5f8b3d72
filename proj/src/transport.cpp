#include "evidex/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "evidex/errors.hpp"

namespace evidex::transport {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> costs)
    : rows_(rows), cols_(cols), costs_(std::move(costs)) {
  if (rows == 0 || cols == 0) throw InputError("cost matrix must be non-empty");
  if (costs_.size() != rows * cols) {
    throw InputError("cost matrix has " + std::to_string(costs_.size()) + " entries, expected " +
                     std::to_string(rows * cols));
  }
  for (double x : costs_) {
    if (!std::isfinite(x) || x < 0.0) throw InputError("cost matrix entries must be finite and non-negative");
  }
}

CostMatrix CostMatrix::transposed() const {
  std::vector<double> t(costs_.size());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t[j * rows_ + i] = costs_[i * cols_ + j];
  return CostMatrix(cols_, rows_, std::move(t));
}

double CostMatrix::median() const {
  std::vector<double> sorted(costs_);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double CostMatrix::max() const { return *std::max_element(costs_.begin(), costs_.end()); }

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> sums(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) sums[i] += mass[i * cols + j];
  return sums;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> sums(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) sums[j] += mass[i * cols + j];
  return sums;
}

CostMatrix cost_matrix(const textproc::Document& a, const textproc::Document& b,
                       const embeddings::EmbeddingTable& table) {
  auto vectors_of = [&](const textproc::Document& d) {
    std::vector<embeddings::Vector> out;
    out.reserve(d.tokens.size());
    for (const auto& t : d.tokens) {
      auto v = table.lookup(t);
      if (!v) throw ConsistencyError("token '" + t + "' missing from embedding table");
      out.push_back(*v);
    }
    return out;
  };
  const auto va = vectors_of(a);
  const auto vb = vectors_of(b);
  std::vector<double> costs(va.size() * vb.size());
  for (std::size_t i = 0; i < va.size(); ++i)
    for (std::size_t j = 0; j < vb.size(); ++j) costs[i * vb.size() + j] = embeddings::euclidean(va[i], vb[j]);
  return CostMatrix(va.size(), vb.size(), std::move(costs));
}

namespace {

double checked_total(std::span<const double> w, const char* name) {
  if (w.empty()) throw InputError(std::string(name) + " marginal is empty");
  double total = 0.0;
  for (double x : w) {
    if (!std::isfinite(x) || x <= 0.0) throw InputError(std::string(name) + " marginal must be strictly positive");
    total += x;
  }
  return total;
}

// Validates marginals against the cost matrix and returns the column
// marginal rescaled to the row marginal's total.
std::vector<double> balanced_columns(std::span<const double> wa, std::span<const double> wb, const CostMatrix& c) {
  if (wa.size() != c.rows() || wb.size() != c.cols()) {
    throw InputError("dimension mismatch: marginals " + std::to_string(wa.size()) + "x" +
                     std::to_string(wb.size()) + ", costs " + std::to_string(c.rows()) + "x" +
                     std::to_string(c.cols()));
  }
  const double ta = checked_total(wa, "row");
  const double tb = checked_total(wb, "column");
  if (std::abs(ta - tb) > 1e-6) {
    throw InputError("marginal totals differ: " + std::to_string(ta) + " vs " + std::to_string(tb));
  }
  std::vector<double> b(wb.begin(), wb.end());
  if (ta != tb) {
    for (double& x : b) x *= ta / tb;
  }
  return b;
}

// Transportation simplex over the bipartite graph rows x cols. The basis is
// a spanning tree of m + n - 1 arcs (degenerate arcs carry zero flow).
class NetworkSimplex {
 public:
  NetworkSimplex(std::span<const double> supply, std::span<const double> demand, const CostMatrix& c)
      : m_(c.rows()), n_(c.cols()), c_(c), adj_(m_ + n_), u_(m_), v_(n_) {
    initial_basis(supply, demand);
    const double scale = std::max(1.0, c.max());
    tol_ = 1e-12 * scale;
  }

  std::size_t solve() {
    const std::size_t max_pivots = 1000000 + 50 * m_ * n_;
    std::size_t pivots = 0;
    std::size_t degenerate_streak = 0;
    for (;;) {
      compute_potentials();
      // Dantzig pricing; after a run of degenerate pivots fall back to
      // Bland's lowest-index rule, which cannot cycle.
      const bool bland = degenerate_streak > kBlandAfter;
      auto entering = price(bland);
      if (!entering) break;
      if (++pivots > max_pivots) throw NumericalError("network simplex did not terminate");
      const double theta = pivot(entering->first, entering->second);
      degenerate_streak = theta > 0.0 ? 0 : degenerate_streak + 1;
    }
    compute_potentials();
    return pivots;
  }

  void fill(OTResult& out) const {
    out.plan.rows = m_;
    out.plan.cols = n_;
    out.plan.mass.assign(m_ * n_, 0.0);
    for (const auto& arc : basis_) out.plan.mass[arc.i * n_ + arc.j] = std::max(arc.flow, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < m_ * n_; ++k) total += out.plan.mass[k] * c_.values()[k];
    out.distance = total;
    out.row_potentials = u_;
    out.col_potentials = v_;
  }

 private:
  static constexpr std::size_t kBlandAfter = 64;

  struct Arc {
    std::size_t i;
    std::size_t j;
    double flow;
  };

  std::size_t col_node(std::size_t j) const { return m_ + j; }

  void add_arc(std::size_t slot, std::size_t i, std::size_t j, double flow) {
    basis_[slot] = {i, j, flow};
    adj_[i].push_back(slot);
    adj_[col_node(j)].push_back(slot);
  }

  void drop_arc(std::size_t slot) {
    auto erase = [&](std::vector<std::size_t>& list) { list.erase(std::find(list.begin(), list.end(), slot)); };
    erase(adj_[basis_[slot].i]);
    erase(adj_[col_node(basis_[slot].j)]);
  }

  // Least-cost rule, crossing out exactly one line per allocation so the
  // result is a spanning tree even when supplies and demands tie.
  void initial_basis(std::span<const double> supply, std::span<const double> demand) {
    std::vector<double> s(supply.begin(), supply.end());
    std::vector<double> d(demand.begin(), demand.end());
    std::vector<std::size_t> order(m_ * n_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return c_.values()[x] < c_.values()[y]; });
    std::vector<char> row_done(m_, 0), col_done(n_, 0);
    std::size_t rows_left = m_, cols_left = n_;
    basis_.resize(m_ + n_ - 1);
    std::size_t slot = 0;
    for (std::size_t cell : order) {
      const std::size_t i = cell / n_, j = cell % n_;
      if (row_done[i] || col_done[j]) continue;
      double x;
      if (rows_left == 1 && cols_left == 1) {
        x = std::max(s[i], 0.0);
        row_done[i] = col_done[j] = 1;
        rows_left = cols_left = 0;
      } else if (rows_left == 1 || (cols_left > 1 && d[j] < s[i])) {
        x = d[j];
        s[i] -= x;
        d[j] = 0.0;
        col_done[j] = 1;
        --cols_left;
      } else {
        x = s[i];
        d[j] -= x;
        s[i] = 0.0;
        row_done[i] = 1;
        --rows_left;
      }
      add_arc(slot++, i, j, std::max(x, 0.0));
      if (rows_left == 0) break;
    }
  }

  void compute_potentials() {
    std::vector<char> seen(m_ + n_, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    u_[0] = 0.0;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t slot : adj_[node]) {
        const Arc& arc = basis_[slot];
        const std::size_t other = node < m_ ? col_node(arc.j) : arc.i;
        if (seen[other]) continue;
        seen[other] = 1;
        if (node < m_) {
          v_[arc.j] = c_(arc.i, arc.j) - u_[arc.i];
        } else {
          u_[arc.i] = c_(arc.i, arc.j) - v_[arc.j];
        }
        stack.push_back(other);
      }
    }
  }

  std::optional<std::pair<std::size_t, std::size_t>> price(bool bland) const {
    std::optional<std::pair<std::size_t, std::size_t>> best;
    double best_reduced = -tol_;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        const double reduced = c_(i, j) - u_[i] - v_[j];
        if (reduced < best_reduced) {
          best = {i, j};
          if (bland) return best;
          best_reduced = reduced;
        }
      }
    }
    return best;
  }

  // Pushes flow around the cycle closed by arc (i, j); returns the step size.
  double pivot(std::size_t i, std::size_t j) {
    // Tree path from column node j back to row node i.
    const std::size_t target = i;
    std::vector<std::size_t> parent_arc(m_ + n_, kNone);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<std::size_t> stack{col_node(j)};
    seen[col_node(j)] = 1;
    while (!stack.empty() && !seen[target]) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t slot : adj_[node]) {
        const Arc& arc = basis_[slot];
        const std::size_t other = node < m_ ? col_node(arc.j) : arc.i;
        if (seen[other]) continue;
        seen[other] = 1;
        parent_arc[other] = slot;
        stack.push_back(other);
      }
    }
    // Walk from row i toward column j; arcs alternate -, +, -, ...
    std::vector<std::size_t> path;
    for (std::size_t node = target; node != col_node(j);) {
      const std::size_t slot = parent_arc[node];
      path.push_back(slot);
      const Arc& arc = basis_[slot];
      node = node < m_ ? col_node(arc.j) : arc.i;
    }

    std::size_t leaving = kNone;
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const Arc& arc = basis_[path[k]];
      const double flow = arc.flow;
      const bool better = flow < theta ||
                          (flow == theta && arc.i * n_ + arc.j < basis_[leaving].i * n_ + basis_[leaving].j);
      if (better) {
        theta = flow;
        leaving = path[k];
      }
    }
    theta = std::max(theta, 0.0);
    for (std::size_t k = 0; k < path.size(); ++k) {
      Arc& arc = basis_[path[k]];
      arc.flow = k % 2 == 0 ? std::max(arc.flow - theta, 0.0) : arc.flow + theta;
    }
    drop_arc(leaving);
    add_arc(leaving, i, j, theta);
    return theta;
  }

  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::size_t m_, n_;
  const CostMatrix& c_;
  std::vector<Arc> basis_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<double> u_, v_;
  double tol_ = 0.0;
};

// Projects an approximately feasible plan onto the transportation polytope:
// scale down overfull rows and columns, then distribute the deficit as a
// rank-one correction.
void round_to_marginals(std::vector<double>& p, std::size_t m, std::size_t n, std::span<const double> a,
                        std::span<const double> b) {
  for (std::size_t i = 0; i < m; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r += p[i * n + j];
    if (r > a[i]) {
      const double s = a[i] / r;
      for (std::size_t j = 0; j < n; ++j) p[i * n + j] *= s;
    }
  }
  std::vector<double> col(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) col[j] += p[i * n + j];
  for (std::size_t j = 0; j < n; ++j) {
    if (col[j] > b[j]) {
      const double s = b[j] / col[j];
      for (std::size_t i = 0; i < m; ++i) p[i * n + j] *= s;
    }
  }
  std::vector<double> err_r(m), err_c(n);
  double norm = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r += p[i * n + j];
    err_r[i] = std::max(a[i] - r, 0.0);
    norm += err_r[i];
  }
  std::fill(col.begin(), col.end(), 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) col[j] += p[i * n + j];
  for (std::size_t j = 0; j < n; ++j) err_c[j] = std::max(b[j] - col[j], 0.0);
  if (norm <= 0.0) return;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] += err_r[i] * err_c[j] / norm;
}

class ScalingSolver {
 public:
  ScalingSolver(std::span<const double> a, std::span<const double> b, const CostMatrix& c, const SinkhornOptions& o)
      : a_(a), b_(b), c_(c), o_(o), m_(c.rows()), n_(c.cols()), f_(m_, 0.0), g_(n_, 0.0), u_(m_, 1.0),
        v_(n_, 1.0), kernel_(m_ * n_) {}

  OTResult run() {
    OTResult out;
    if (o_.log_domain) {
      log_step();
    } else {
      plain_kernel();
    }
    const std::size_t scaling_budget = o_.log_domain ? std::min(o_.max_iter, kScalingIters) : o_.max_iter;
    std::size_t iter = 0;
    std::vector<double> kv(m_), ktu(n_);
    mul(kv);
    while (iter < scaling_budget) {
      ++iter;
      if (!positive(kv)) {
        if (!o_.log_domain) throw underflow();
        absorb();
        log_step();
        mul(kv);
        continue;
      }
      for (std::size_t i = 0; i < m_; ++i) u_[i] = a_[i] / kv[i];
      mul_t(ktu);
      if (!positive(ktu)) {
        if (!o_.log_domain) throw underflow();
        absorb();
        log_step();
        mul(kv);
        continue;
      }
      for (std::size_t j = 0; j < n_; ++j) v_[j] = b_[j] / ktu[j];
      if (!o_.log_domain && (!finite(u_) || !finite(v_))) throw underflow();

      mul(kv);
      double err_r = 0.0, err_c = 0.0;
      for (std::size_t i = 0; i < m_; ++i) err_r += std::abs(u_[i] * kv[i] - a_[i]);
      for (std::size_t j = 0; j < n_; ++j) err_c += std::abs(v_[j] * ktu[j] - b_[j]);
      if (err_r < o_.tol && err_c < o_.tol) {
        out.converged = true;
        break;
      }
      if (o_.log_domain && out_of_range()) {
        absorb();
        mul(kv);
      }
    }
    if (!out.converged && o_.log_domain) {
      // Scaling stalls on nearly degenerate kernels (sublinear rate); finish
      // with damped Newton steps on the dual potentials.
      absorb();
      std::vector<double> p(m_ * n_), r(m_), c(n_);
      for (;;) {
        evaluate(f_, g_, p, r, c);
        double err_r = 0.0, err_c = 0.0;
        for (std::size_t i = 0; i < m_; ++i) err_r += std::abs(r[i] - a_[i]);
        for (std::size_t j = 0; j < n_; ++j) err_c += std::abs(c[j] - b_[j]);
        if (err_r < o_.tol && err_c < o_.tol) {
          out.converged = true;
          break;
        }
        if (iter >= o_.max_iter) break;
        ++iter;
        if (!newton_update(p, r, c)) break;
      }
      rebuild_kernel();
    }
    out.iterations = iter;

    std::vector<double> p(m_ * n_);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < n_; ++j) p[i * n_ + j] = u_[i] * kernel_[i * n_ + j] * v_[j];
    round_to_marginals(p, m_, n_, a_, b_);

    double total = 0.0;
    for (std::size_t k = 0; k < m_ * n_; ++k) total += p[k] * c_.values()[k];
    out.distance = total;
    out.plan.rows = m_;
    out.plan.cols = n_;
    out.plan.mass = std::move(p);
    out.row_potentials.resize(m_);
    out.col_potentials.resize(n_);
    for (std::size_t i = 0; i < m_; ++i) out.row_potentials[i] = f_[i] + o_.epsilon * std::log(u_[i]);
    for (std::size_t j = 0; j < n_; ++j) out.col_potentials[j] = g_[j] + o_.epsilon * std::log(v_[j]);
    return out;
  }

 private:
  static constexpr std::size_t kScalingIters = 200;

  // Plan entries exp((f_i + g_j - c_ij) / eps) and its marginals. Returns
  // false when an exponent would overflow.
  bool evaluate(const std::vector<double>& f, const std::vector<double>& g, std::vector<double>& p,
                std::vector<double>& r, std::vector<double>& c) const {
    std::fill(r.begin(), r.end(), 0.0);
    std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        const double z = (f[i] + g[j] - c_(i, j)) / o_.epsilon;
        if (z > 700.0) return false;
        const double x = std::exp(z);
        p[i * n_ + j] = x;
        r[i] += x;
        c[j] += x;
      }
    }
    return true;
  }

  // Concave dual objective <a,f> + <b,g> - eps * sum(plan).
  double dual_objective(const std::vector<double>& f, const std::vector<double>& g) const {
    double value = 0.0;
    for (std::size_t i = 0; i < m_; ++i) value += a_[i] * f[i];
    for (std::size_t j = 0; j < n_; ++j) value += b_[j] * g[j];
    double mass = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        const double z = (f[i] + g[j] - c_(i, j)) / o_.epsilon;
        if (z > 700.0) return -std::numeric_limits<double>::infinity();
        mass += std::exp(z);
      }
    }
    return value - o_.epsilon * mass;
  }

  // One Newton step with Armijo backtracking. The Hessian system is reduced
  // to a Schur complement on the smaller side; its null direction (shifting
  // f up and g down) is removed by pinning the last potential.
  bool newton_update(const std::vector<double>& p, const std::vector<double>& r, const std::vector<double>& c) {
    const double eps = o_.epsilon;
    const bool cols_small = n_ <= m_;
    const std::size_t nx = cols_small ? m_ : n_;
    const std::size_t ny = cols_small ? n_ : m_;
    auto at = [&](std::size_t x, std::size_t y) { return cols_small ? p[x * n_ + y] : p[y * n_ + x]; };
    const std::vector<double>& rx = cols_small ? r : c;
    const std::vector<double>& ry = cols_small ? c : r;
    std::vector<double> gx(nx), gy(ny);
    for (std::size_t x = 0; x < nx; ++x) gx[x] = (cols_small ? a_[x] : b_[x]) - rx[x];
    for (std::size_t y = 0; y < ny; ++y) gy[y] = (cols_small ? b_[y] : a_[y]) - ry[y];

    std::vector<double> dy(ny, 0.0), dx(nx);
    if (ny > 1) {
      const std::size_t k = ny - 1;
      std::vector<double> s(k * k, 0.0), rhs(k);
      for (std::size_t y = 0; y < k; ++y) {
        s[y * k + y] = ry[y];
        rhs[y] = eps * gy[y];
      }
      std::vector<double> row(k);
      for (std::size_t x = 0; x < nx; ++x) {
        if (!(rx[x] > 0.0)) return false;
        for (std::size_t y = 0; y < k; ++y) row[y] = at(x, y);
        const double w = 1.0 / rx[x];
        for (std::size_t y = 0; y < k; ++y) {
          if (row[y] == 0.0) continue;
          const double wy = w * row[y];
          rhs[y] -= wy * eps * gx[x];
          for (std::size_t z = 0; z <= y; ++z) s[y * k + z] -= wy * row[z];
        }
      }
      double diag_max = 0.0;
      for (std::size_t y = 0; y < k; ++y) diag_max = std::max(diag_max, s[y * k + y]);
      for (std::size_t y = 0; y < k; ++y) s[y * k + y] += 1e-14 * diag_max + 1e-300;
      if (!cholesky_solve(s, rhs, k)) return false;
      std::copy(rhs.begin(), rhs.end(), dy.begin());
    }
    for (std::size_t x = 0; x < nx; ++x) {
      double acc = eps * gx[x];
      for (std::size_t y = 0; y < ny; ++y) acc -= at(x, y) * dy[y];
      dx[x] = acc / rx[x];
    }
    const std::vector<double>& df = cols_small ? dx : dy;
    const std::vector<double>& dg = cols_small ? dy : dx;
    const std::vector<double>& gf = cols_small ? gx : gy;
    const std::vector<double>& gg = cols_small ? gy : gx;

    double slope = 0.0;
    for (std::size_t i = 0; i < m_; ++i) slope += gf[i] * df[i];
    for (std::size_t j = 0; j < n_; ++j) slope += gg[j] * dg[j];
    if (!(slope > 0.0)) return false;

    const double base = dual_objective(f_, g_);
    std::vector<double> f(m_), g(n_);
    for (double t = 1.0; t > 1e-12; t *= 0.5) {
      for (std::size_t i = 0; i < m_; ++i) f[i] = f_[i] + t * df[i];
      for (std::size_t j = 0; j < n_; ++j) g[j] = g_[j] + t * dg[j];
      if (dual_objective(f, g) >= base + 1e-4 * t * slope) {
        f_.swap(f);
        g_.swap(g);
        return true;
      }
    }
    return false;
  }

  // In-place Cholesky of the lower triangle of s, then solves s x = rhs.
  static bool cholesky_solve(std::vector<double>& s, std::vector<double>& rhs, std::size_t k) {
    for (std::size_t y = 0; y < k; ++y) {
      double d = s[y * k + y];
      for (std::size_t z = 0; z < y; ++z) d -= s[y * k + z] * s[y * k + z];
      if (!(d > 0.0)) return false;
      d = std::sqrt(d);
      s[y * k + y] = d;
      for (std::size_t w = y + 1; w < k; ++w) {
        double v = s[w * k + y];
        for (std::size_t z = 0; z < y; ++z) v -= s[w * k + z] * s[y * k + z];
        s[w * k + y] = v / d;
      }
    }
    for (std::size_t y = 0; y < k; ++y) {
      double v = rhs[y];
      for (std::size_t z = 0; z < y; ++z) v -= s[y * k + z] * rhs[z];
      rhs[y] = v / s[y * k + y];
    }
    for (std::size_t y = k; y-- > 0;) {
      double v = rhs[y];
      for (std::size_t z = y + 1; z < k; ++z) v -= s[z * k + y] * rhs[z];
      rhs[y] = v / s[y * k + y];
    }
    return true;
  }

  static NumericalError underflow() {
    return NumericalError(
        "sinkhorn kernel exp(-c/epsilon) underflows; increase epsilon or enable log-domain mode");
  }

  static bool positive(const std::vector<double>& x) {
    return std::all_of(x.begin(), x.end(), [](double y) { return y > 0.0 && std::isfinite(y); });
  }
  static bool finite(const std::vector<double>& x) {
    return std::all_of(x.begin(), x.end(), [](double y) { return std::isfinite(y) && y > 0.0; });
  }
  bool out_of_range() const {
    auto bad = [](double y) { return y > 1e30 || y < 1e-30; };
    return std::any_of(u_.begin(), u_.end(), bad) || std::any_of(v_.begin(), v_.end(), bad);
  }

  void mul(std::vector<double>& kv) const {
    for (std::size_t i = 0; i < m_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += kernel_[i * n_ + j] * v_[j];
      kv[i] = s;
    }
  }
  void mul_t(std::vector<double>& ktu) const {
    std::fill(ktu.begin(), ktu.end(), 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < n_; ++j) ktu[j] += kernel_[i * n_ + j] * u_[i];
  }

  void plain_kernel() {
    for (std::size_t k = 0; k < m_ * n_; ++k) kernel_[k] = std::exp(-c_.values()[k] / o_.epsilon);
    std::vector<double> row(m_, 0.0), col(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        row[i] += kernel_[i * n_ + j];
        col[j] += kernel_[i * n_ + j];
      }
    if (!positive(row) || !positive(col)) throw underflow();
  }

  void rebuild_kernel() {
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        kernel_[i * n_ + j] = std::exp((f_[i] + g_[j] - c_(i, j)) / o_.epsilon);
  }

  void absorb() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (u_[i] > 0.0 && std::isfinite(u_[i])) f_[i] += o_.epsilon * std::log(u_[i]);
      u_[i] = 1.0;
    }
    for (std::size_t j = 0; j < n_; ++j) {
      if (v_[j] > 0.0 && std::isfinite(v_[j])) g_[j] += o_.epsilon * std::log(v_[j]);
      v_[j] = 1.0;
    }
    rebuild_kernel();
  }

  // One exact log-sum-exp sweep of both potentials.
  void log_step() {
    const double eps = o_.epsilon;
    std::vector<double> z(std::max(m_, n_));
    for (std::size_t i = 0; i < m_; ++i) {
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n_; ++j) hi = std::max(hi, (g_[j] - c_(i, j)) / eps);
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) s += std::exp((g_[j] - c_(i, j)) / eps - hi);
      f_[i] = eps * (std::log(a_[i]) - hi - std::log(s));
    }
    for (std::size_t j = 0; j < n_; ++j) {
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) hi = std::max(hi, (f_[i] - c_(i, j)) / eps);
      double s = 0.0;
      for (std::size_t i = 0; i < m_; ++i) s += std::exp((f_[i] - c_(i, j)) / eps - hi);
      g_[j] = eps * (std::log(b_[j]) - hi - std::log(s));
    }
    std::fill(u_.begin(), u_.end(), 1.0);
    std::fill(v_.begin(), v_.end(), 1.0);
    rebuild_kernel();
  }

  std::span<const double> a_, b_;
  const CostMatrix& c_;
  const SinkhornOptions& o_;
  std::size_t m_, n_;
  std::vector<double> f_, g_, u_, v_, kernel_;
};

}  // namespace

OTResult emd_exact(std::span<const double> wa, std::span<const double> wb, const CostMatrix& c) {
  const std::vector<double> b = balanced_columns(wa, wb, c);
  NetworkSimplex simplex(wa, b, c);
  OTResult out;
  out.iterations = simplex.solve();
  out.converged = true;
  simplex.fill(out);
  out.plan.row_marginals.assign(wa.begin(), wa.end());
  out.plan.col_marginals.assign(wb.begin(), wb.end());
  return out;
}

OTResult sinkhorn(std::span<const double> wa, std::span<const double> wb, const CostMatrix& c,
                  const SinkhornOptions& options) {
  if (!(options.epsilon > 0.0) || !std::isfinite(options.epsilon)) throw InputError("epsilon must be positive");
  if (!(options.tol > 0.0)) throw InputError("tolerance must be positive");
  if (options.max_iter == 0) throw InputError("max_iter must be at least 1");
  const std::vector<double> b = balanced_columns(wa, wb, c);
  OTResult out = ScalingSolver(wa, b, c, options).run();
  out.plan.row_marginals.assign(wa.begin(), wa.end());
  out.plan.col_marginals.assign(wb.begin(), wb.end());
  return out;
}

double relative_epsilon(const CostMatrix& c, double relative) {
  if (!(relative > 0.0)) throw InputError("relative epsilon must be positive");
  double scale = c.median();
  if (scale <= 0.0) scale = c.max();
  if (scale <= 0.0) scale = 1.0;
  return relative * scale;
}

double wmd(const textproc::Document& a, const textproc::Document& b, const embeddings::EmbeddingTable& table) {
  return emd_exact(a.weights, b.weights, cost_matrix(a, b, table)).distance;
}

double wrd(const textproc::Document& a, const textproc::Document& b, const embeddings::EmbeddingTable& table) {
  struct Side {
    std::vector<embeddings::Vector> vectors;
    std::vector<double> norms;
    std::vector<double> mass;
  };
  auto prepare = [&](const textproc::Document& d) {
    Side s;
    double total = 0.0;
    for (std::size_t k = 0; k < d.tokens.size(); ++k) {
      auto v = table.lookup(d.tokens[k]);
      if (!v) throw ConsistencyError("token '" + d.tokens[k] + "' missing from embedding table");
      const double norm = std::sqrt(std::inner_product(v->begin(), v->end(), v->begin(), 0.0));
      if (norm == 0.0) throw InputError("zero-norm vector for token '" + d.tokens[k] + "'");
      s.vectors.push_back(*v);
      s.norms.push_back(norm);
      s.mass.push_back(d.weights[k] * norm);
      total += d.weights[k] * norm;
    }
    for (double& x : s.mass) x /= total;
    return s;
  };
  const Side sa = prepare(a);
  const Side sb = prepare(b);
  std::vector<double> costs(sa.vectors.size() * sb.vectors.size());
  for (std::size_t i = 0; i < sa.vectors.size(); ++i) {
    for (std::size_t j = 0; j < sb.vectors.size(); ++j) {
      double cost = 0.0;
      if (a.tokens[i] != b.tokens[j]) {
        const double dot = std::inner_product(sa.vectors[i].begin(), sa.vectors[i].end(), sb.vectors[j].begin(), 0.0);
        const double cosine = std::clamp(dot / (sa.norms[i] * sb.norms[j]), -1.0, 1.0);
        cost = std::max(0.0, 1.0 - cosine);
      }
      costs[i * sb.vectors.size() + j] = cost;
    }
  }
  return emd_exact(sa.mass, sb.mass, CostMatrix(sa.vectors.size(), sb.vectors.size(), std::move(costs))).distance;
}

}  // namespace evidex::transport
