#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "spill/matrix.hpp"

namespace spill::testing {

using Big = boost::multiprecision::cpp_bin_float_50;

/// Arbitrary-precision NMI straight from the contingency table.
inline double nmi_oracle(const std::vector<int>& t, const std::vector<int>& p) {
    const int kt = *std::max_element(t.begin(), t.end()) + 1;
    const int kp = *std::max_element(p.begin(), p.end()) + 1;
    std::vector<std::vector<int>> table(kt, std::vector<int>(kp, 0));
    std::vector<int> a(kt, 0), b(kp, 0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        ++table[t[i]][p[i]];
        ++a[t[i]];
        ++b[p[i]];
    }
    const Big n = static_cast<int>(t.size());
    Big ht = 0, hp = 0, mi = 0;
    int nt = 0, np = 0;
    for (int x : a) {
        if (x == 0) continue;
        ++nt;
        ht -= Big(x) / n * log(Big(x) / n);
    }
    for (int x : b) {
        if (x == 0) continue;
        ++np;
        hp -= Big(x) / n * log(Big(x) / n);
    }
    for (int i = 0; i < kt; ++i) {
        for (int j = 0; j < kp; ++j) {
            if (table[i][j] == 0) continue;
            const Big v = table[i][j];
            mi += v / n * log(n * v / (Big(a[i]) * Big(b[j])));
        }
    }
    if (nt == 1 && np == 1) return 1.0;
    if (mi <= Big("1e-40")) return 0.0;
    return static_cast<double>(mi / ((ht + hp) / 2));
}

/// Exhaustive best matching over all injections of predicted clusters into labels.
inline double acc_oracle(const std::vector<int>& t, const std::vector<int>& p) {
    const int kt = *std::max_element(t.begin(), t.end()) + 1;
    const int kp = *std::max_element(p.begin(), p.end()) + 1;
    const int k = std::max(kt, kp);
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    int best = 0;
    do {
        int hits = 0;
        for (std::size_t i = 0; i < t.size(); ++i) hits += perm[p[i]] == t[i];
        best = std::max(best, hits);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(t.size());
}

/// Lowest within-cluster SSE over every labeling into at most m clusters.
/// Point 0 is pinned to cluster 0, which loses nothing by symmetry.
inline double kmeans_bruteforce_sse(const Matrix& x, std::size_t m) {
    const std::size_t n = x.rows, d = x.cols;
    std::vector<int> label(n, 0);
    std::vector<double> sum(m * d);
    std::vector<std::size_t> count(m);
    double sq_total = 0.0;
    for (double v : x.data) sq_total += v * v;
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(count.begin(), count.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++count[label[i]];
            for (std::size_t h = 0; h < d; ++h) sum[label[i] * d + h] += x.data[i * d + h];
        }
        double between = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            if (count[c] == 0) continue;
            double s2 = 0.0;
            for (std::size_t h = 0; h < d; ++h) s2 += sum[c * d + h] * sum[c * d + h];
            between += s2 / static_cast<double>(count[c]);
        }
        best = std::min(best, sq_total - between);
        // next labeling in base m, point 0 fixed
        std::size_t i = 1;
        while (i < n && label[i] == static_cast<int>(m) - 1) label[i++] = 0;
        if (i == n) break;
        ++label[i];
    }
    return best;
}

}  // namespace spill::testing
