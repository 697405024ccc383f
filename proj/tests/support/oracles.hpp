#pragma once

// Reference implementations used only by tests. Everything here is written
// with plain loops over std::vector so it shares no code path with the
// library routines it checks.

#include "zsr/dataset.hpp"
#include "zsr/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace zsr::oracle {

using Dense = std::vector<std::vector<double>>;  // row-major, [row][col]

inline Dense to_dense(const FeatureMatrix& m) {
    Dense d(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) d[r][c] = m(r, c);
    return d;
}

inline FeatureMatrix from_dense(const Dense& d) {
    const std::size_t rows = d.size(), cols = rows ? d[0].size() : 0;
    std::vector<double> flat;
    for (const auto& row : d) flat.insert(flat.end(), row.begin(), row.end());
    return FeatureMatrix(rows, cols, std::move(flat));
}

inline Dense naive_matmul(const Dense& a, const Dense& b) {
    const std::size_t n = a.size(), k = b.size(), p = k ? b[0].size() : 0;
    Dense out(n, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < k; ++t) s += a[i][t] * b[t][j];
            out[i][j] = s;
        }
    return out;
}

inline Dense transpose(const Dense& a) {
    if (a.empty()) return {};
    Dense t(a[0].size(), std::vector<double>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
    return t;
}

inline double elementwise_frobenius(const Dense& a) {
    double s = 0.0;
    for (const auto& row : a)
        for (double v : row) s += v * v;
    return std::sqrt(s);
}

/// Gaussian elimination with partial pivoting.
inline std::vector<double> gaussian_solve(Dense a, std::vector<double> b) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (a[piv][col] == 0.0) throw std::runtime_error("oracle: singular system");
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

/// Solves L W + W R + M = 0 via (I ⊗ L + Rᵀ ⊗ I) vec(W) = −vec(M),
/// vec stacking columns.
inline Dense kronecker_sylvester(const Dense& l, const Dense& r, const Dense& m) {
    const std::size_t n = l.size(), p = r.size(), N = n * p;
    Dense big(N, std::vector<double>(N, 0.0));
    std::vector<double> rhs(N);
    // Row index of W(i, j) in vec(W) is j * n + i.
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t row = j * n + i;
            rhs[row] = -m[i][j];
            for (std::size_t t = 0; t < n; ++t) big[row][j * n + t] += l[i][t];    // (L W)_ij
            for (std::size_t t = 0; t < p; ++t) big[row][t * n + i] += r[t][j];    // (W R)_ij
        }
    const auto x = gaussian_solve(std::move(big), std::move(rhs));
    Dense w(n, std::vector<double>(p));
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = 0; i < n; ++i) w[i][j] = x[j * n + i];
    return w;
}

inline Dense random_dense(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Dense d(rows, std::vector<double>(cols));
    for (auto& row : d)
        for (auto& v : row) v = nd(rng);
    return d;
}

/// A Aᵀ for a random square A: symmetric PSD, full rank almost surely.
inline Dense random_psd(std::mt19937_64& rng, std::size_t n) {
    const auto a = random_dense(rng, n, n);
    return naive_matmul(a, transpose(a));
}

/// ½‖X − WᵀP‖² + (α/2)‖WX − O‖² + (β/2)‖WX − P‖², entry by entry.
inline double direct_objective(const Dense& w, const Dense& x, const Dense& p, const Dense& o, double alpha,
                               double beta) {
    const std::size_t ds = w.size(), dv = x.size(), m = x[0].size();
    double rec = 0.0, cen = 0.0, con = 0.0;
    for (std::size_t a = 0; a < dv; ++a)
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t b = 0; b < ds; ++b) s += w[b][a] * p[b][i];
            rec += (x[a][i] - s) * (x[a][i] - s);
        }
    for (std::size_t b = 0; b < ds; ++b)
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t a = 0; a < dv; ++a) s += w[b][a] * x[a][i];
            cen += (s - o[b][i]) * (s - o[b][i]);
            con += (s - p[b][i]) * (s - p[b][i]);
        }
    return 0.5 * rec + 0.5 * alpha * cen + 0.5 * beta * con;
}

/// Central finite-difference gradient of direct_objective with respect to W.
inline Dense fd_gradient(Dense w, const Dense& x, const Dense& p, const Dense& o, double alpha, double beta,
                         double h = 1e-6) {
    Dense g(w.size(), std::vector<double>(w[0].size()));
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = 0; j < w[0].size(); ++j) {
            const double keep = w[i][j];
            w[i][j] = keep + h;
            const double up = direct_objective(w, x, p, o, alpha, beta);
            w[i][j] = keep - h;
            const double down = direct_objective(w, x, p, o, alpha, beta);
            w[i][j] = keep;
            g[i][j] = (up - down) / (2.0 * h);
        }
    return g;
}

/// Column i = mean of (W x_j) over all j with labels[j] == labels[i].
inline Dense grouped_mean(const Dense& w, const Dense& x, const std::vector<ClassId>& labels) {
    const Dense wx = naive_matmul(w, x);
    Dense out(wx.size(), std::vector<double>(labels.size(), 0.0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        std::size_t count = 0;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] != labels[i]) continue;
            ++count;
            for (std::size_t r = 0; r < wx.size(); ++r) out[r][i] += wx[r][j];
        }
        for (std::size_t r = 0; r < wx.size(); ++r) out[r][i] /= static_cast<double>(count);
    }
    return out;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return d / std::sqrt(na * nb);
}

/// Every candidate scored, then fully sorted: similarity desc, id asc.
inline std::vector<std::pair<ClassId, double>> full_sort_ranking(
    const std::vector<double>& query, const std::vector<std::pair<ClassId, std::vector<double>>>& candidates) {
    std::vector<std::pair<ClassId, double>> scored;
    for (const auto& [id, v] : candidates) scored.emplace_back(id, cosine(query, v));
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return scored;
}

struct Recount {
    std::map<int, double> hit_at;
    std::vector<std::size_t> top1_counts;  // per unseen candidate, table order
};

/// Brute-force Hit@k and 1-NN in-degree for semantic-space prediction.
inline Recount brute_force_recount(const FeatureMatrix& w, const LabeledDataset& data, const PrototypeTable& table,
                                   const std::vector<int>& ks) {
    std::vector<std::pair<ClassId, std::vector<double>>> cands;
    for (std::size_t c = 0; c < table.size(); ++c)
        if (table.partition()[c] == Partition::Unseen) cands.emplace_back(table.ids()[c], table.vectors().column(c));
    const Dense wd = to_dense(w);
    Recount out;
    out.top1_counts.assign(cands.size(), 0);
    std::map<int, std::size_t> hits;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<double> q(wd.size(), 0.0);
        for (std::size_t r = 0; r < wd.size(); ++r)
            for (std::size_t a = 0; a < wd[0].size(); ++a) q[r] += wd[r][a] * data.features(a, i);
        const auto ranked = full_sort_ranking(q, cands);
        for (std::size_t c = 0; c < cands.size(); ++c)
            if (cands[c].first == ranked.front().first) ++out.top1_counts[c];
        for (int k : ks) {
            for (std::size_t pos = 0; pos < ranked.size() && pos < static_cast<std::size_t>(k); ++pos)
                if (ranked[pos].first == data.labels[i]) ++hits[k];
        }
    }
    for (int k : ks) out.hit_at[k] = static_cast<double>(hits[k]) / static_cast<double>(data.size());
    return out;
}

}  // namespace zsr::oracle
