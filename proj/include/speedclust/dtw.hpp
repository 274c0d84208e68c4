#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "speedclust/core.hpp"

namespace speedclust {

/// Point distance d(x, y) used inside the DTW recurrence.
enum class LocalDistance {
    Absolute, ///< |x - y|
    Squared,  ///< (x - y)^2
};

inline double local_cost(LocalDistance kind, double x, double y) noexcept {
    const double diff = x - y;
    return kind == LocalDistance::Absolute ? (diff < 0 ? -diff : diff) : diff * diff;
}

struct DtwOptions {
    LocalDistance local = LocalDistance::Absolute;
    /// Sakoe-Chiba half-width. Cells with |i - j| > max(window, |n - m|) are not admissible.
    std::optional<std::size_t> window;

    friend bool operator==(const DtwOptions&, const DtwOptions&) = default;
};

/// Accumulated cost table of size (n+1) x (m+1), row-major.
struct AlignmentMatrix {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<double> cost;

    double at(std::size_t i, std::size_t j) const { return cost[i * (m + 1) + j]; }
};

/// 1-based (i, j) pairs from (1, 1) to (n, m).
struct AlignmentPath {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

struct Alignment {
    double distance = 0.0;
    AlignmentPath path;
};

/// DTW distance, two-row DP. Throws EmptySeries if either input is empty.
double dtw_distance(std::span<const double> a, std::span<const double> b, const DtwOptions& opts = {});
double dtw_distance(const ObservedSeries& a, const ObservedSeries& b, const DtwOptions& opts = {});

/// Full accumulated-cost table.
AlignmentMatrix dtw_matrix(std::span<const double> a, std::span<const double> b, const DtwOptions& opts = {});

/// Distance plus the warping path. Backtracking ties prefer diagonal, then left (j-1), then up (i-1).
Alignment dtw_alignment(std::span<const double> a, std::span<const double> b, const DtwOptions& opts = {});
Alignment dtw_alignment(const ObservedSeries& a, const ObservedSeries& b, const DtwOptions& opts = {});

/// Dense row-major distance table.
class DistanceMatrix {
  public:
    DistanceMatrix() = default;
    DistanceMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Symmetric all-pairs DTW table, parallel over pairs. Throws EmptySeries with the offending index.
DistanceMatrix pairwise_distances(std::span<const ObservedSeries> series, const DtwOptions& opts = {});

/// out(i, j) = dtw(rows[i], cols[j]), parallel over cells.
DistanceMatrix cross_distances(std::span<const ObservedSeries> rows, std::span<const ObservedSeries> cols,
                               const DtwOptions& opts = {});

/// Single-threaded versions of the batch kernels. Kept as the reference the parallel kernels are
/// tested and benchmarked against.
namespace reference {
DistanceMatrix pairwise_distances(std::span<const ObservedSeries> series, const DtwOptions& opts = {});
DistanceMatrix cross_distances(std::span<const ObservedSeries> rows, std::span<const ObservedSeries> cols,
                               const DtwOptions& opts = {});
} // namespace reference

} // namespace speedclust
