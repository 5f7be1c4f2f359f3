#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gerk/errors.hpp"
#include "gerk/numeric.hpp"
#include "gerk/random.hpp"

namespace gerk {

enum class BlockKind { Row, Column };

enum class ProbabilityRule {
  Uniform,      // p_i = 1 / #blocks
  SquaredNorm,  // p_i proportional to ||A_i||^2
};

/// Partition of the row (or column) indices of a matrix into blocks, with
/// the squared spectral norm of every block and its sampling probability.
///
/// A block is an ordered list of indices; contiguous ranges are the common
/// case but not required. Norms are computed once here and reused by every
/// solver step.
class BlockPartition {
 public:
  using Block = std::vector<Index>;

  template <Field S>
  BlockPartition(const Matrix<S>& A, BlockKind kind, std::vector<Block> blocks,
                 ProbabilityRule rule = ProbabilityRule::Uniform)
      : kind_(kind), blocks_(std::move(blocks)) {
    init_norms(A);
    std::vector<double> p(blocks_.size());
    if (rule == ProbabilityRule::Uniform) {
      std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    } else {
      const double total =
          std::accumulate(sq_norms_.begin(), sq_norms_.end(), 0.0);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = sq_norms_[i] / total;
    }
    set_probabilities(std::move(p));
  }

  template <Field S>
  BlockPartition(const Matrix<S>& A, BlockKind kind, std::vector<Block> blocks,
                 std::vector<double> probabilities)
      : kind_(kind), blocks_(std::move(blocks)) {
    init_norms(A);
    set_probabilities(std::move(probabilities));
  }

  /// One block per row / column.
  template <Field S>
  static BlockPartition singletons(
      const Matrix<S>& A, BlockKind kind,
      ProbabilityRule rule = ProbabilityRule::Uniform) {
    return contiguous(A, kind, 1, rule);
  }

  /// Consecutive blocks of `block_size` indices; the last may be shorter.
  template <Field S>
  static BlockPartition contiguous(
      const Matrix<S>& A, BlockKind kind, Index block_size,
      ProbabilityRule rule = ProbabilityRule::Uniform) {
    if (block_size < 1)
      throw Error(ErrorKind::InvalidArgument, "block size must be >= 1");
    const Index total = kind == BlockKind::Row ? A.rows() : A.cols();
    std::vector<Block> blocks;
    for (Index start = 0; start < total; start += block_size) {
      Block b(static_cast<std::size_t>(std::min(block_size, total - start)));
      std::iota(b.begin(), b.end(), start);
      blocks.push_back(std::move(b));
    }
    return BlockPartition(A, kind, std::move(blocks), rule);
  }

  BlockKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return blocks_.size(); }
  /// Number of indices covered (rows or columns of A).
  Index extent() const noexcept { return extent_; }
  bool all_singletons() const noexcept { return all_singletons_; }

  std::span<const Index> block(std::size_t i) const { return blocks_[i]; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  double sq_norm(std::size_t i) const { return sq_norms_[i]; }
  const std::vector<double>& sq_norms() const noexcept { return sq_norms_; }
  const std::vector<double>& probabilities() const noexcept {
    return probabilities_;
  }

  /// Same draw semantics as sample_index(probabilities(), rng).
  std::size_t sample(RngStream& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) return cdf_.size() - 1;
    return static_cast<std::size_t>(it - cdf_.begin());
  }

 private:
  template <Field S>
  void init_norms(const Matrix<S>& A) {
    extent_ = kind_ == BlockKind::Row ? A.rows() : A.cols();
    const char* what = kind_ == BlockKind::Row ? "row" : "column";
    if (blocks_.empty())
      throw Error(ErrorKind::InvalidArgument,
                  std::string("empty ") + what + " partition");
    std::vector<char> seen(static_cast<std::size_t>(extent_), 0);
    all_singletons_ = true;
    for (const auto& b : blocks_) {
      if (b.empty())
        throw Error(ErrorKind::InvalidArgument,
                    std::string("empty ") + what + " block");
      if (b.size() != 1) all_singletons_ = false;
      for (Index idx : b) {
        if (idx < 0 || idx >= extent_)
          throw Error(ErrorKind::InvalidArgument,
                      std::string(what) + " block index out of range: " +
                          std::to_string(idx));
        if (seen[static_cast<std::size_t>(idx)]++)
          throw Error(ErrorKind::InvalidArgument,
                      std::string(what) + " index in two blocks: " +
                          std::to_string(idx));
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      throw Error(ErrorKind::InvalidArgument,
                  std::string(what) + " partition does not cover all indices");

    sq_norms_.resize(blocks_.size());
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& b = blocks_[i];
      double s;
      if (b.size() == 1) {
        s = kind_ == BlockKind::Row ? A.row(b[0]).squaredNorm()
                                    : A.col(b[0]).squaredNorm();
      } else {
        const Matrix<S> sub = kind_ == BlockKind::Row
                                  ? Matrix<S>(A(b, Eigen::all))
                                  : Matrix<S>(A(Eigen::all, b));
        const double nrm = spectral_norm(sub);
        s = nrm * nrm;
      }
      if (!(s > 0.0))
        throw Error(ErrorKind::ZeroMatrix,
                    std::string("zero ") + what + " block " + std::to_string(i));
      sq_norms_[i] = s;
    }
  }

  void set_probabilities(std::vector<double> p) {
    if (p.size() != blocks_.size())
      throw Error(ErrorKind::DimensionMismatch,
                  "probabilities length != number of blocks");
    double sum = 0.0;
    for (double v : p) {
      if (!(v > 0.0))
        throw Error(ErrorKind::InvalidArgument,
                    "block probabilities must be strictly positive");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw Error(ErrorKind::InvalidArgument,
                  "block probabilities must sum to 1");
    probabilities_ = std::move(p);
    cdf_.resize(probabilities_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities_.size(); ++i) {
      acc += probabilities_[i];
      cdf_[i] = acc;
    }
  }

  BlockKind kind_;
  std::vector<Block> blocks_;
  Index extent_ = 0;
  bool all_singletons_ = true;
  std::vector<double> sq_norms_;
  std::vector<double> probabilities_;
  std::vector<double> cdf_;
};

}  // namespace gerk
