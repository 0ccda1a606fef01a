#pragma once

#include "pide/mesh.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace pide {

class MemoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fully implicit right-rectangle convolution weights
///   omega_{n,i} = K(t_n - t_i),  i = 1..n,
/// so that dt * sum_i omega_{n,i} g(t_i) approximates \int_0^{t_n} K(t_n - s) g(s) ds
/// to first order and omega_{n,n} = K(0) != 0.
class MemoryWeights {
 public:
  MemoryWeights(std::function<double(double)> kernel, double dt);

  /// omega_{n,1}, ..., omega_{n,n}. Also updates the running bound K1.
  std::vector<double> weights_for_step(int n);

  [[nodiscard]] double dt() const { return dt_; }
  /// Largest |omega_{n,i}| handed out so far.
  [[nodiscard]] double bound_K1() const { return bound_K1_; }

 private:
  std::function<double(double)> kernel_;
  double dt_;
  double bound_K1_ = 0.0;
};

/// Where the per-level memory data of a scheme lives.
enum class HistoryMode {
  fine_history,  ///< fine-grid entries may be stored
  coarse_only,   ///< fine-grid entries are rejected
};

enum class Grid { coarse, fine };

/// Append-only list of per-time-level vectors. Entry i (1-based) is the data
/// of time level i and is immutable once written. Tracks current and peak
/// storage so that schemes can be compared by their history footprint.
class MemoryHistory {
 public:
  MemoryHistory(HistoryMode mode, Grid grid);

  void append(Vector entry);
  [[nodiscard]] const Vector& entry(int level) const;
  [[nodiscard]] int size() const { return static_cast<int>(entries_.size()); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] HistoryMode mode() const { return mode_; }
  [[nodiscard]] Grid grid() const { return grid_; }

  [[nodiscard]] std::size_t bytes() const { return bytes_; }
  [[nodiscard]] std::size_t peak_bytes() const { return peak_bytes_; }
  [[nodiscard]] int peak_entries() const { return peak_entries_; }

 private:
  HistoryMode mode_;
  Grid grid_;
  std::vector<Vector> entries_;
  std::size_t bytes_ = 0;
  std::size_t peak_bytes_ = 0;
  int peak_entries_ = 0;
};

/// dt * sum_{i=1}^{upto} weights[i-1] * entry(i). `length` sizes the result
/// when upto = 0.
Vector accumulate_memory(const MemoryHistory& history, std::span<const double> weights, int upto, double dt,
                         Eigen::Index length);

}  // namespace pide
