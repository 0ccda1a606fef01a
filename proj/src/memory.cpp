#include "pide/memory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pide {

MemoryWeights::MemoryWeights(std::function<double(double)> kernel, double dt)
    : kernel_(std::move(kernel)), dt_(dt) {
  if (!kernel_) throw MemoryError("MemoryWeights: kernel not set");
  if (!(dt_ > 0.0)) throw MemoryError("MemoryWeights: time step must be positive");
  if (kernel_(0.0) == 0.0) throw MemoryError("MemoryWeights: K(0) = 0 violates omega_nn != 0");
}

std::vector<double> MemoryWeights::weights_for_step(int n) {
  if (n < 1) throw MemoryError("weights_for_step: step index must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const double v = kernel_((n - i) * dt_);
    w[static_cast<std::size_t>(i - 1)] = v;
    bound_K1_ = std::max(bound_K1_, std::abs(v));
  }
  return w;
}

MemoryHistory::MemoryHistory(HistoryMode mode, Grid grid) : mode_(mode), grid_(grid) {}

void MemoryHistory::append(Vector entry) {
  if (mode_ == HistoryMode::coarse_only && grid_ == Grid::fine) {
    throw MemoryError("MemoryHistory: fine-grid entry rejected in coarse-only mode");
  }
  bytes_ += static_cast<std::size_t>(entry.size()) * sizeof(double);
  entries_.push_back(std::move(entry));
  peak_bytes_ = std::max(peak_bytes_, bytes_);
  peak_entries_ = std::max(peak_entries_, size());
}

const Vector& MemoryHistory::entry(int level) const {
  if (level < 1 || level > size()) {
    throw MemoryError("MemoryHistory: missing entry for time level " + std::to_string(level) + " (have " +
                      std::to_string(size()) + ")");
  }
  return entries_[static_cast<std::size_t>(level - 1)];
}

Vector accumulate_memory(const MemoryHistory& history, std::span<const double> weights, int upto, double dt,
                         Eigen::Index length) {
  if (upto < 0 || static_cast<std::size_t>(upto) > weights.size()) {
    throw MemoryError("accumulate_memory: need " + std::to_string(upto) + " weights, got " +
                      std::to_string(weights.size()));
  }
  if (upto > history.size()) {
    throw MemoryError("accumulate_memory: history gap at time level " + std::to_string(history.size() + 1));
  }
  Vector sum = Vector::Zero(length);
  for (int i = 1; i <= upto; ++i) {
    const Vector& e = history.entry(i);
    if (e.size() != length) throw MemoryError("accumulate_memory: entry length mismatch");
    sum.noalias() += weights[static_cast<std::size_t>(i - 1)] * e;
  }
  sum *= dt;
  return sum;
}

}  // namespace pide
