#include "speedclust/dtw.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>

#include "speedclust/errors.hpp"

namespace speedclust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t band_width(std::size_t n, std::size_t m, const DtwOptions& opts) {
    if (!opts.window) return std::max(n, m);
    const std::size_t diff = n > m ? n - m : m - n;
    return std::max(*opts.window, diff);
}

template <LocalDistance Kind>
double rolling_dtw(std::span<const double> a, std::span<const double> b, std::size_t band) {
    // b is the shorter side; rows run over a.
    const std::size_t m = b.size();
    std::vector<double> prev(m + 1, kInf);
    std::vector<double> cur(m + 1, kInf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        const double ai = a[i - 1];
        const std::size_t lo = i > band ? i - band : 1;
        const std::size_t hi = std::min(m, i + band);
        cur[0] = kInf;
        for (std::size_t j = 1; j < lo; ++j) cur[j] = kInf;
        for (std::size_t j = lo; j <= hi; ++j) {
            const double best = std::min(prev[j - 1], std::min(cur[j - 1], prev[j]));
            cur[j] = local_cost(Kind, ai, b[j - 1]) + best;
        }
        for (std::size_t j = hi + 1; j <= m; ++j) cur[j] = kInf;
        std::swap(prev, cur);
    }
    return prev[m];
}

void require_nonempty(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw EmptySeries();
}

} // namespace

double dtw_distance(std::span<const double> a, std::span<const double> b, const DtwOptions& opts) {
    require_nonempty(a, b);
    if (b.size() > a.size()) std::swap(a, b);
    const std::size_t band = band_width(a.size(), b.size(), opts);
    return opts.local == LocalDistance::Absolute ? rolling_dtw<LocalDistance::Absolute>(a, b, band)
                                                 : rolling_dtw<LocalDistance::Squared>(a, b, band);
}

double dtw_distance(const ObservedSeries& a, const ObservedSeries& b, const DtwOptions& opts) {
    return dtw_distance(std::span<const double>(a.values), std::span<const double>(b.values), opts);
}

AlignmentMatrix dtw_matrix(std::span<const double> a, std::span<const double> b, const DtwOptions& opts) {
    require_nonempty(a, b);
    AlignmentMatrix mat;
    mat.n = a.size();
    mat.m = b.size();
    const std::size_t stride = mat.m + 1;
    mat.cost.assign((mat.n + 1) * stride, kInf);
    mat.cost[0] = 0.0;
    const std::size_t band = band_width(mat.n, mat.m, opts);
    for (std::size_t i = 1; i <= mat.n; ++i) {
        const std::size_t lo = i > band ? i - band : 1;
        const std::size_t hi = std::min(mat.m, i + band);
        double* row = mat.cost.data() + i * stride;
        const double* up = row - stride;
        for (std::size_t j = lo; j <= hi; ++j) {
            const double best = std::min(up[j - 1], std::min(row[j - 1], up[j]));
            row[j] = local_cost(opts.local, a[i - 1], b[j - 1]) + best;
        }
    }
    return mat;
}

Alignment dtw_alignment(std::span<const double> a, std::span<const double> b, const DtwOptions& opts) {
    const AlignmentMatrix mat = dtw_matrix(a, b, opts);
    Alignment out;
    out.distance = mat.at(mat.n, mat.m);
    std::size_t i = mat.n;
    std::size_t j = mat.m;
    out.path.pairs.reserve(mat.n + mat.m);
    out.path.pairs.emplace_back(i, j);
    while (i > 1 || j > 1) {
        if (i == 1) {
            --j;
        } else if (j == 1) {
            --i;
        } else {
            const double diag = mat.at(i - 1, j - 1);
            const double left = mat.at(i, j - 1);
            const double up = mat.at(i - 1, j);
            if (diag <= left && diag <= up) {
                --i;
                --j;
            } else if (left <= up) {
                --j;
            } else {
                --i;
            }
        }
        out.path.pairs.emplace_back(i, j);
    }
    std::reverse(out.path.pairs.begin(), out.path.pairs.end());
    return out;
}

Alignment dtw_alignment(const ObservedSeries& a, const ObservedSeries& b, const DtwOptions& opts) {
    return dtw_alignment(std::span<const double>(a.values), std::span<const double>(b.values), opts);
}

namespace {

void check_batch(std::span<const ObservedSeries> series) {
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].empty()) throw EmptySeries(i);
    }
}

} // namespace

DistanceMatrix pairwise_distances(std::span<const ObservedSeries> series, const DtwOptions& opts) {
    check_batch(series);
    const auto n = static_cast<std::int64_t>(series.size());
    DistanceMatrix out(series.size(), series.size());
    // Row i holds n - i - 1 cells; dynamic scheduling evens out the triangle.
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = i + 1; j < n; ++j) {
            const double d = dtw_distance(series[i], series[j], opts);
            out(i, j) = d;
            out(j, i) = d;
        }
    }
    return out;
}

DistanceMatrix cross_distances(std::span<const ObservedSeries> rows, std::span<const ObservedSeries> cols,
                               const DtwOptions& opts) {
    check_batch(rows);
    check_batch(cols);
    DistanceMatrix out(rows.size(), cols.size());
    const auto cells = static_cast<std::int64_t>(rows.size() * cols.size());
    const std::size_t nc = cols.size();
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t c = 0; c < cells; ++c) {
        const std::size_t i = static_cast<std::size_t>(c) / nc;
        const std::size_t j = static_cast<std::size_t>(c) % nc;
        out(i, j) = dtw_distance(rows[i], cols[j], opts);
    }
    return out;
}

namespace reference {

DistanceMatrix pairwise_distances(std::span<const ObservedSeries> series, const DtwOptions& opts) {
    check_batch(series);
    DistanceMatrix out(series.size(), series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        for (std::size_t j = i + 1; j < series.size(); ++j) {
            const double d = dtw_distance(series[i], series[j], opts);
            out(i, j) = d;
            out(j, i) = d;
        }
    }
    return out;
}

DistanceMatrix cross_distances(std::span<const ObservedSeries> rows, std::span<const ObservedSeries> cols,
                               const DtwOptions& opts) {
    check_batch(rows);
    check_batch(cols);
    DistanceMatrix out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = dtw_distance(rows[i], cols[j], opts);
    }
    return out;
}

} // namespace reference

} // namespace speedclust
