#include "spill/clusteval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "spill/error.hpp"
#include "spill/hungarian.hpp"
#include "spill/kernels.hpp"

namespace spill {

namespace {

void distances_to(const Matrix& x, std::span<const double> q, std::span<double> out, bool parallel) {
    if (parallel) {
        kernels::parallel::squared_distances_to(x, q, out);
    } else {
        kernels::serial::squared_distances_to(x, q, out);
    }
}

// Index drawn with probability proportional to weight; zero weights are never drawn.
std::size_t weighted_pick(std::span<const double> weight, double total, Rng& rng) {
    const std::size_t n = weight.size();
    if (!(total > 0.0)) return static_cast<std::size_t>(rng.below(n));  // every point sits on a center
    const double target = rng.uniform() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (weight[i] <= 0.0) continue;
        cum += weight[i];
        if (cum > target) return i;
    }
    // rounding left target past the last positive weight
    for (std::size_t i = n; i-- > 0;) {
        if (weight[i] > 0.0) return i;
    }
    return 0;
}

std::size_t resolve_trials(std::size_t local_trials, std::size_t m) {
    if (local_trials > 0) return local_trials;
    return 2 + static_cast<std::size_t>(std::log(static_cast<double>(m)));
}

std::vector<std::size_t> seeds_impl(const Matrix& x, std::size_t m, Rng& rng, bool parallel, std::size_t trials) {
    const std::size_t n = x.rows;
    std::vector<std::size_t> chosen;
    chosen.reserve(m);
    chosen.push_back(static_cast<std::size_t>(rng.below(n)));

    std::vector<double> mindist(n), d(n), best_d(n);
    distances_to(x, x.row(chosen[0]), mindist, parallel);
    while (chosen.size() < m) {
        const double total = std::accumulate(mindist.begin(), mindist.end(), 0.0);
        std::size_t pick = 0;
        double best_potential = std::numeric_limits<double>::infinity();
        // greedy variant: keep the candidate that lowers the potential most
        for (std::size_t t = 0; t < trials; ++t) {
            const std::size_t cand = weighted_pick(mindist, total, rng);
            distances_to(x, x.row(cand), d, parallel);
            double potential = 0.0;
            for (std::size_t i = 0; i < n; ++i) potential += std::min(mindist[i], d[i]);
            if (potential < best_potential) {
                best_potential = potential;
                pick = cand;
                best_d.swap(d);
            }
        }
        chosen.push_back(pick);
        for (std::size_t i = 0; i < n; ++i) mindist[i] = std::min(mindist[i], best_d[i]);
    }
    return chosen;
}

Matrix cluster_means(const Matrix& x, std::span<const int> labels, std::size_t m, std::vector<std::size_t>& counts) {
    Matrix c(m, x.cols);
    counts.assign(m, 0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto l = static_cast<std::size_t>(labels[i]);
        ++counts[l];
        auto row = c.row(l);
        auto xi = x.row(i);
        for (std::size_t h = 0; h < x.cols; ++h) row[h] += xi[h];
    }
    for (std::size_t l = 0; l < m; ++l) {
        if (counts[l] == 0) continue;
        const double inv = 1.0 / static_cast<double>(counts[l]);
        for (double& v : c.row(l)) v *= inv;
    }
    return c;
}

/// Moves the farthest point (from a cluster with more than one member) into each empty cluster.
void repair_empty(std::span<int> labels, std::span<double> dist, std::size_t m) {
    std::vector<std::size_t> counts(m, 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < m; ++c) {
        if (counts[c] != 0) continue;
        std::size_t far = labels.size();
        double far_d = -1.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (counts[static_cast<std::size_t>(labels[i])] > 1 && dist[i] > far_d) {
                far_d = dist[i];
                far = i;
            }
        }
        if (far == labels.size()) break;
        --counts[static_cast<std::size_t>(labels[far])];
        labels[far] = static_cast<int>(c);
        dist[far] = 0.0;
        counts[c] = 1;
    }
}

// Single-point moves after Lloyd: x leaves cluster a for b when
// n_b/(n_b+1) |x-c_b|^2 < n_a/(n_a-1) |x-c_a|^2, which strictly lowers the SSE.
// Returns true if anything moved.
bool hartigan_moves(const Matrix& x, std::vector<int>& labels, Matrix& centroids, std::vector<std::size_t>& counts,
                    std::size_t max_passes) {
    const std::size_t n = x.rows, d = x.cols, m = centroids.rows;
    bool any = false;
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
        bool moved = false;
        for (std::size_t i = 0; i < n; ++i) {
            const auto a = static_cast<std::size_t>(labels[i]);
            if (counts[a] <= 1) continue;
            const auto xi = x.row(i);
            const double na = static_cast<double>(counts[a]);
            const double leave = na / (na - 1.0) * kernels::squared_distance(xi, centroids.row(a));
            std::size_t best = a;
            double best_cost = leave;
            for (std::size_t b = 0; b < m; ++b) {
                if (b == a) continue;
                const double nb = static_cast<double>(counts[b]);
                const double join = nb / (nb + 1.0) * kernels::squared_distance(xi, centroids.row(b));
                if (join < best_cost) {
                    best_cost = join;
                    best = b;
                }
            }
            // ignore gains at rounding level
            if (best == a || best_cost >= leave * (1.0 - 1e-12)) continue;
            auto ca = centroids.row(a);
            auto cb = centroids.row(best);
            const double nb = static_cast<double>(counts[best]);
            for (std::size_t h = 0; h < d; ++h) {
                ca[h] = (na * ca[h] - xi[h]) / (na - 1.0);
                cb[h] = (nb * cb[h] + xi[h]) / (nb + 1.0);
            }
            --counts[a];
            ++counts[best];
            labels[i] = static_cast<int>(best);
            moved = any = true;
        }
        if (!moved) break;
    }
    return any;
}

ClusterAssignment lloyd(const Matrix& x, std::size_t m, Rng& rng, const KMeansOptions& opts) {
    const std::size_t n = x.rows;
    const auto seeds = seeds_impl(x, m, rng, opts.parallel, resolve_trials(opts.local_trials, m));
    Matrix centroids(m, x.cols);
    for (std::size_t c = 0; c < m; ++c) {
        std::copy_n(x.row(seeds[c]).begin(), x.cols, centroids.row(c).begin());
    }

    ClusterAssignment out;
    std::vector<int> labels(n, -1), next(n);
    std::vector<double> dist(n);
    std::vector<std::size_t> counts;
    for (std::size_t it = 0; it < opts.max_iters; ++it) {
        if (opts.parallel) {
            kernels::parallel::assign_nearest(x, centroids, next, dist);
        } else {
            kernels::serial::assign_nearest(x, centroids, next, dist);
        }
        out.inertia_trace.push_back(std::accumulate(dist.begin(), dist.end(), 0.0));
        repair_empty(next, dist, m);
        const bool changed = next != labels;
        labels = next;

        Matrix updated = cluster_means(x, labels, m, counts);
        double shift = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            shift = std::max(shift, std::sqrt(kernels::squared_distance(updated.row(c), centroids.row(c))));
        }
        centroids = std::move(updated);
        out.iterations = it + 1;
        if (!changed || shift < opts.tol) break;
    }

    if (opts.hartigan && hartigan_moves(x, labels, centroids, counts, opts.max_iters)) {
        centroids = cluster_means(x, labels, m, counts);
    }

    out.labels = std::move(labels);
    out.centroids = std::move(centroids);
    out.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.inertia += kernels::squared_distance(x.row(i), out.centroids.row(static_cast<std::size_t>(out.labels[i])));
    }
    return out;
}

std::vector<int> dense_codes(std::span<const int> labels, std::size_t& count) {
    std::map<int, int> code;
    for (int l : labels) code.emplace(l, 0);
    int next = 0;
    for (auto& [_, c] : code) c = next++;
    count = code.size();
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) out.push_back(code[l]);
    return out;
}

void check_pair(std::span<const int> truth, std::span<const int> pred) {
    if (truth.size() != pred.size()) {
        throw ValidationError("label length mismatch: " + std::to_string(truth.size()) + " vs " +
                              std::to_string(pred.size()));
    }
    if (truth.empty()) throw ValidationError("empty labelings");
}

}  // namespace

std::vector<std::size_t> kmeanspp_seeds(const Matrix& x, std::size_t num_clusters, Rng& rng, std::size_t local_trials) {
    if (num_clusters == 0 || num_clusters > x.rows) throw ValidationError("kmeans++: need 1 <= M <= N");
    return seeds_impl(x, num_clusters, rng, false, resolve_trials(local_trials, num_clusters));
}

ClusterAssignment kmeans(const Matrix& x, std::size_t num_clusters, Rng& rng, const KMeansOptions& opts) {
    if (num_clusters == 0) throw ValidationError("kmeans: cluster count must be positive");
    if (num_clusters > x.rows) {
        throw ValidationError("kmeans: cluster count " + std::to_string(num_clusters) + " exceeds " +
                              std::to_string(x.rows) + " points");
    }
    const std::size_t restarts = std::max<std::size_t>(1, opts.restarts);
    ClusterAssignment best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng stream = rng.child(r);
        auto result = lloyd(x, num_clusters, stream, opts);
        if (result.inertia < best.inertia) best = std::move(result);
    }
    rng();
    return best;
}

double clustering_sse(const Matrix& x, std::span<const int> labels, std::size_t num_clusters) {
    std::vector<std::size_t> counts;
    const Matrix c = cluster_means(x, labels, num_clusters, counts);
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        s += kernels::squared_distance(x.row(i), c.row(static_cast<std::size_t>(labels[i])));
    }
    return s;
}

double nmi(std::span<const int> truth, std::span<const int> pred) {
    check_pair(truth, pred);
    std::size_t rows = 0, cols = 0;
    const auto t = dense_codes(truth, rows);
    const auto p = dense_codes(pred, cols);
    if (rows == 1 && cols == 1) return 1.0;

    std::vector<std::size_t> table(rows * cols, 0), row_sum(rows, 0), col_sum(cols, 0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        ++table[static_cast<std::size_t>(t[i]) * cols + static_cast<std::size_t>(p[i])];
        ++row_sum[static_cast<std::size_t>(t[i])];
        ++col_sum[static_cast<std::size_t>(p[i])];
    }

    if (rows == cols) {
        bool same = true;
        for (std::size_t r = 0; r < rows && same; ++r) {
            std::size_t nonzero = 0;
            for (std::size_t c = 0; c < cols; ++c) nonzero += table[r * cols + c] != 0;
            same = nonzero == 1;
        }
        if (same) return 1.0;  // rows == cols and one cell per row forces a bijection
    }

    const double n = static_cast<double>(t.size());
    auto entropy = [n](const std::vector<std::size_t>& counts) {
        double h = 0.0;
        for (auto c : counts) {
            if (c == 0) continue;
            const double q = static_cast<double>(c) / n;
            h -= q * std::log(q);
        }
        return h;
    };
    double mi = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const auto nij = table[r * cols + c];
            if (nij == 0) continue;
            const double v = static_cast<double>(nij);
            mi += v / n * std::log(n * v / (static_cast<double>(row_sum[r]) * static_cast<double>(col_sum[c])));
        }
    }
    const double norm = 0.5 * (entropy(row_sum) + entropy(col_sum));
    if (!(mi > 0.0) || !(norm > 0.0)) return 0.0;
    return std::clamp(mi / norm, 0.0, 1.0);
}

double accuracy_hungarian(std::span<const int> truth, std::span<const int> pred) {
    check_pair(truth, pred);
    std::size_t rows = 0, cols = 0;
    const auto t = dense_codes(truth, rows);
    const auto p = dense_codes(pred, cols);
    const std::size_t k = std::max(rows, cols);
    std::vector<std::vector<std::int64_t>> w(k, std::vector<std::int64_t>(k, 0));
    for (std::size_t i = 0; i < t.size(); ++i) ++w[static_cast<std::size_t>(p[i])][static_cast<std::size_t>(t[i])];
    const auto match = hungarian_max(w);
    std::int64_t hits = 0;
    for (std::size_t r = 0; r < k; ++r) hits += w[r][static_cast<std::size_t>(match[r])];
    return static_cast<double>(hits) / static_cast<double>(t.size());
}

std::vector<std::optional<double>> variance_report(const Matrix& x, std::span<const int> labels) {
    if (labels.size() != x.rows) throw ValidationError("variance_report: one label per row required");
    int top = -1;
    for (int l : labels) {
        if (l < 0) throw ValidationError("variance_report: negative label");
        top = std::max(top, l);
    }
    const auto m = static_cast<std::size_t>(top + 1);
    // Welford accumulators per cluster and dimension.
    std::vector<std::size_t> count(m, 0);
    Matrix mean(m, x.cols), m2(m, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        const double n = static_cast<double>(++count[c]);
        auto mu = mean.row(c);
        auto s = m2.row(c);
        auto xi = x.row(i);
        for (std::size_t h = 0; h < x.cols; ++h) {
            const double delta = xi[h] - mu[h];
            mu[h] += delta / n;
            s[h] += delta * (xi[h] - mu[h]);
        }
    }
    std::vector<std::optional<double>> out(m);
    for (std::size_t c = 0; c < m; ++c) {
        if (count[c] < 2 || x.cols == 0) continue;
        double sum = 0.0;
        for (double v : m2.row(c)) sum += v / static_cast<double>(count[c] - 1);
        out[c] = sum / static_cast<double>(x.cols);
    }
    return out;
}

MeanStd mean_std(std::span<const double> values) {
    MeanStd r;
    if (values.empty()) return r;
    const double n = static_cast<double>(values.size());
    r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = values.size() > 1 ? std::sqrt(ss / n) : 0.0;
    return r;
}

EvalReport evaluate(const Matrix& x, std::span<const int> truth, std::size_t num_clusters, std::size_t runs,
                    std::uint64_t seed, const KMeansOptions& opts) {
    if (truth.size() != x.rows) throw ValidationError("evaluate: one label per row required");
    if (runs == 0) throw ValidationError("evaluate: runs must be positive");
    EvalReport report;
    report.runs = runs;
    std::vector<double> nmis, accs;
    for (std::size_t r = 0; r < runs; ++r) {
        Rng rng(derive_seed(seed, {r}));
        const auto a = kmeans(x, num_clusters, rng, opts);
        const RunScore s{100.0 * nmi(truth, a.labels), 100.0 * accuracy_hungarian(truth, a.labels)};
        report.per_run.push_back(s);
        nmis.push_back(s.nmi);
        accs.push_back(s.acc);
    }
    const auto n = mean_std(nmis);
    const auto a = mean_std(accs);
    report.nmi_mean = n.mean;
    report.nmi_std = n.std;
    report.acc_mean = a.mean;
    report.acc_std = a.std;
    return report;
}

}  // namespace spill
