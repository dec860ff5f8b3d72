#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evidex/embeddings.hpp"
#include "evidex/textproc.hpp"

namespace evidex::transport {

// Dense row-major matrix of non-negative, finite ground costs.
class CostMatrix {
 public:
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> costs);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t j) const { return costs_[i * cols_ + j]; }
  std::span<const double> values() const { return costs_; }

  CostMatrix transposed() const;
  double median() const;
  double max() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> costs_;
};

struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> mass;  // row-major
  std::vector<double> row_marginals;
  std::vector<double> col_marginals;

  double operator()(std::size_t i, std::size_t j) const { return mass[i * cols + j]; }
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
};

struct OTResult {
  double distance = 0.0;
  TransportPlan plan;
  std::size_t iterations = 0;  // simplex pivots for the exact solver
  bool converged = false;
  // Dual potentials. For the exact solver these certify optimality:
  // row[i] + col[j] <= c(i,j), with equality wherever the plan is positive.
  std::vector<double> row_potentials;
  std::vector<double> col_potentials;
};

// Euclidean distances between the documents' word vectors.
CostMatrix cost_matrix(const textproc::Document& a, const textproc::Document& b,
                       const embeddings::EmbeddingTable& table);

// Exact transportation problem by network simplex. Marginals must be
// strictly positive and have equal totals (within 1e-6).
OTResult emd_exact(std::span<const double> wa, std::span<const double> wb, const CostMatrix& c);

struct SinkhornOptions {
  double epsilon = 0.0;
  double tol = 1e-6;  // L1 marginal violation
  std::size_t max_iter = 10000;
  // Stabilized scaling with potentials absorbed into the kernel. When false,
  // plain scaling is used and kernel underflow is reported as an error.
  bool log_domain = true;
};

// Entropically regularized transport. The returned plan is projected onto
// the exact marginals, and distance is its transport cost <plan, c> without
// the entropy term, so it never undercuts emd_exact.
OTResult sinkhorn(std::span<const double> wa, std::span<const double> wb, const CostMatrix& c,
                  const SinkhornOptions& options);

// epsilon = relative * median(c), falling back to max(c) and then to
// `relative` itself for degenerate all-zero matrices.
double relative_epsilon(const CostMatrix& c, double relative);

double wmd(const textproc::Document& a, const textproc::Document& b, const embeddings::EmbeddingTable& table);

// Word Rotator's Distance: vector norms give mass, 1 - cosine gives cost.
double wrd(const textproc::Document& a, const textproc::Document& b, const embeddings::EmbeddingTable& table);

}  // namespace evidex::transport
