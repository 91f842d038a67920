#include "spill/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "spill/error.hpp"
#include "spill/kernels.hpp"

namespace spill {

namespace {

void check_interval(const Interval& iv, const char* name) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
        throw ValidationError(std::string(name) + " must have finite bounds");
    }
    if (iv.lo > iv.hi) {
        throw ValidationError(std::string(name) + " is degenerate: lower bound " + std::to_string(iv.lo) +
                              " exceeds upper bound " + std::to_string(iv.hi));
    }
}

}  // namespace

void SimulationSpec::validate() const {
    if (num_clusters == 0) throw ValidationError("num_clusters must be positive");
    if (dim == 0) throw ValidationError("dim must be positive");
    if (runs == 0) throw ValidationError("runs must be positive");
    if (size_range.lo == 0 || size_range.lo > size_range.hi) {
        throw ValidationError("size_range must satisfy 1 <= lo <= hi");
    }
    check_interval(mu_range, "mu_range");
    check_interval(var_range, "var_range");
    if (var_range.lo < 0.0) throw ValidationError("var_range must be non-negative");
    // i.i.d. draws with replacement can exceed the cluster size; distinct partners cannot
    const bool distinct = replacement == Replacement::Without || strategy == Strategy::TopK;
    if (distinct && size_range.lo <= k) {
        throw ValidationError("pooling count k=" + std::to_string(k) +
                              " needs every cluster to have more than k points " + "(size_range lower bound is " +
                              std::to_string(size_range.lo) + ")");
    }
}

SimulationSpec SimulationSpec::table1(Distribution d) {
    SimulationSpec s;
    s.distribution = d;
    if (d == Distribution::LogNormal) s.var_range = {1.5, 2.0};
    return s;
}

nlohmann::json to_json(const SimulationSpec& s) {
    return {{"num_clusters", s.num_clusters},
            {"dim", s.dim},
            {"size_range", {s.size_range.lo, s.size_range.hi}},
            {"distribution", to_string(s.distribution)},
            {"mu_range", {s.mu_range.lo, s.mu_range.hi}},
            {"var_range", {s.var_range.lo, s.var_range.hi}},
            {"k", s.k},
            {"strategy", to_string(s.strategy)},
            {"replacement", to_string(s.replacement)},
            {"runs", s.runs},
            {"rng_seed", s.rng_seed},
            {"kmeans",
             {{"restarts", s.kmeans.restarts},
              {"max_iters", s.kmeans.max_iters},
              {"tol", s.kmeans.tol},
              {"local_trials", s.kmeans.local_trials}}}};
}

std::vector<ClusterSample> gen_clusters(const SimulationSpec& spec, Rng& rng) {
    check_interval(spec.mu_range, "mu_range");
    check_interval(spec.var_range, "var_range");
    if (spec.size_range.lo > spec.size_range.hi) throw ValidationError("size_range is degenerate");

    std::vector<ClusterSample> clusters;
    clusters.reserve(spec.num_clusters);
    for (std::size_t c = 0; c < spec.num_clusters; ++c) {
        ClusterSample s;
        s.cluster_id = static_cast<int>(c);
        const std::size_t n = spec.size_range.lo + rng.below(spec.size_range.hi - spec.size_range.lo + 1);
        s.mean_params.resize(spec.dim);
        s.var_params.resize(spec.dim);
        for (std::size_t h = 0; h < spec.dim; ++h) {
            s.mean_params[h] = rng.uniform(spec.mu_range.lo, spec.mu_range.hi);
            s.var_params[h] = rng.uniform(spec.var_range.lo, spec.var_range.hi);
        }
        s.points = Matrix(n, spec.dim);
        for (std::size_t i = 0; i < n; ++i) {
            auto row = s.points.row(i);
            for (std::size_t h = 0; h < spec.dim; ++h) {
                const double z = rng.normal(s.mean_params[h], std::sqrt(s.var_params[h]));
                row[h] = spec.distribution == Distribution::LogNormal ? std::exp(z) : z;
            }
        }
        clusters.push_back(std::move(s));
    }
    return clusters;
}

std::vector<std::vector<std::size_t>> random_partners(std::size_t n, std::size_t k, Replacement replacement, Rng& rng) {
    std::vector<std::vector<std::size_t>> partners(n);
    if (k == 0) return partners;
    if (replacement == Replacement::Without && k >= n) {
        throw ValidationError("cannot draw " + std::to_string(k) + " distinct partners from a cluster of " +
                              std::to_string(n));
    }
    std::vector<std::size_t> pool;
    for (std::size_t seed = 0; seed < n; ++seed) {
        auto& out = partners[seed];
        out.reserve(k);
        if (replacement == Replacement::With) {
            for (std::size_t j = 0; j < k; ++j) out.push_back(static_cast<std::size_t>(rng.below(n)));
            continue;
        }
        pool.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (i != seed) pool.push_back(i);
        }
        // Partial Fisher-Yates: the first k slots become a uniform k-subset.
        for (std::size_t j = 0; j < k; ++j) {
            const auto pick = j + static_cast<std::size_t>(rng.below(pool.size() - j));
            std::swap(pool[j], pool[pick]);
            out.push_back(pool[j]);
        }
    }
    return partners;
}

std::vector<std::vector<std::size_t>> topk_partners(const Matrix& points, std::size_t k) {
    const std::size_t n = points.rows;
    std::vector<std::vector<std::size_t>> partners(n);
    if (k == 0) return partners;
    if (k >= n) {
        throw ValidationError("cannot take " + std::to_string(k) + " nearest partners in a cluster of " +
                              std::to_string(n));
    }
    const Matrix d = kernels::parallel::pairwise_squared_distances(points);
    std::vector<std::size_t> order;
    for (std::size_t seed = 0; seed < n; ++seed) {
        order.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (i != seed) order.push_back(i);
        }
        auto row = d.row(seed);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                          [&](std::size_t a, std::size_t b) { return row[a] < row[b] || (row[a] == row[b] && a < b); });
        partners[seed].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return partners;
}

std::vector<double> pool_random(const ClusterSample& cluster, std::size_t seed_index, std::size_t k,
                                Replacement replacement, Rng& rng) {
    const std::size_t n = cluster.points.rows;
    if (seed_index >= n) throw ValidationError("seed index out of range");
    if (replacement == Replacement::Without && k >= n) {
        throw ValidationError("k=" + std::to_string(k) + " must be smaller than the cluster size " + std::to_string(n));
    }
    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    if (replacement == Replacement::With) {
        for (std::size_t j = 0; j < k; ++j) chosen.push_back(static_cast<std::size_t>(rng.below(n)));
    } else {
        std::vector<std::size_t> pool;
        pool.reserve(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (i != seed_index) pool.push_back(i);
        }
        for (std::size_t j = 0; j < k; ++j) {
            const auto pick = j + static_cast<std::size_t>(rng.below(pool.size() - j));
            std::swap(pool[j], pool[pick]);
            chosen.push_back(pool[j]);
        }
    }
    std::vector<double> out(cluster.points.cols);
    kernels::mean_pool_rows(cluster.points, cluster.points.row(seed_index), chosen, out);
    return out;
}

std::vector<double> pool_topk(const ClusterSample& cluster, std::size_t seed_index, std::size_t k) {
    const Matrix& x = cluster.points;
    if (seed_index >= x.rows) throw ValidationError("seed index out of range");
    if (k >= x.rows) {
        throw ValidationError("k=" + std::to_string(k) + " must be smaller than the cluster size " +
                              std::to_string(x.rows));
    }
    std::vector<double> d(x.rows);
    kernels::serial::squared_distances_to(x, x.row(seed_index), d);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < x.rows; ++i) {
        if (i != seed_index) order.push_back(i);
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
    order.resize(k);
    std::vector<double> out(x.cols);
    kernels::mean_pool_rows(x, x.row(seed_index), order, out);
    return out;
}

Matrix pool_cluster(const ClusterSample& cluster, std::size_t k, Strategy strategy, Replacement replacement, Rng& rng) {
    if (k == 0) return cluster.points;
    const auto partners = strategy == Strategy::Rd ? random_partners(cluster.points.rows, k, replacement, rng)
                                                   : topk_partners(cluster.points, k);
    return kernels::parallel::pool_rows(cluster.points, partners);
}

TrialResult run_trial(const SimulationSpec& spec, Rng& rng) {
    spec.validate();
    Rng data_rng = rng.child(0);
    Rng pool_rng = rng.child(1);
    Rng cluster_rng = rng.child(2);

    const auto clusters = gen_clusters(spec, data_rng);
    std::size_t total = 0;
    for (const auto& c : clusters) total += c.points.rows;

    Matrix pooled(total, spec.dim);
    std::vector<int> truth;
    truth.reserve(total);
    std::size_t offset = 0;
    for (const auto& c : clusters) {
        const Matrix p = pool_cluster(c, spec.k, spec.strategy, spec.replacement, pool_rng);
        std::copy(p.data.begin(), p.data.end(), pooled.data.begin() + static_cast<std::ptrdiff_t>(offset * spec.dim));
        truth.insert(truth.end(), p.rows, c.cluster_id);
        offset += p.rows;
    }

    TrialResult r;
    r.k = spec.k;
    r.dim = spec.dim;
    r.strategy = spec.strategy;
    r.distribution = spec.distribution;
    for (const auto& v : variance_report(pooled, truth)) r.est_variance_per_cluster.push_back(v.value_or(0.0));

    const auto assignment = kmeans(pooled, spec.num_clusters, cluster_rng, spec.kmeans);
    r.nmi = nmi(truth, assignment.labels);
    r.acc = accuracy_hungarian(truth, assignment.labels);
    rng();
    return r;
}

TrialResult run_trial(const SimulationSpec& spec, std::size_t run) {
    Rng rng(derive_seed(spec.rng_seed, {run}));
    return run_trial(spec, rng);
}

SweepPoint summarize(const std::vector<TrialResult>& trials, double axis_value) {
    SweepPoint p;
    p.axis_value = axis_value;
    if (!trials.empty()) {
        p.strategy = trials.front().strategy;
        p.distribution = trials.front().distribution;
        p.k = trials.front().k;
        p.dim = trials.front().dim;
    }
    std::vector<double> var, nmis, accs;
    for (const auto& t : trials) {
        var.push_back(t.variance());
        nmis.push_back(100.0 * t.nmi);
        accs.push_back(100.0 * t.acc);
    }
    const auto v = mean_std(var);
    const auto n = mean_std(nmis);
    const auto a = mean_std(accs);
    p.var_mean = v.mean;
    p.var_std = v.std;
    p.nmi_mean = n.mean;
    p.nmi_std = n.std;
    p.acc_mean = a.mean;
    p.acc_std = a.std;
    p.trials = trials;
    return p;
}

SweepReport run_sweep(const SimulationSpec& base, SweepAxis axis, std::span<const std::size_t> values) {
    if (values.empty()) throw ValidationError("sweep needs at least one axis value");
    std::vector<SimulationSpec> specs;
    for (std::size_t v : values) {
        SimulationSpec s = base;
        (axis == SweepAxis::K ? s.k : s.dim) = v;
        s.validate();
        specs.push_back(s);
    }

    const std::size_t runs = base.runs;
    std::vector<TrialResult> results(specs.size() * runs);
    const auto jobs = static_cast<std::int64_t>(results.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t job = 0; job < jobs; ++job) {
        const auto j = static_cast<std::size_t>(job);
        results[j] = run_trial(specs[j / runs], j % runs);
    }

    SweepReport report;
    report.axis = axis;
    report.base_spec = to_json(base);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        std::vector<TrialResult> trials(results.begin() + static_cast<std::ptrdiff_t>(i * runs),
                                        results.begin() + static_cast<std::ptrdiff_t>((i + 1) * runs));
        report.points.push_back(summarize(trials, static_cast<double>(values[i])));
    }
    return report;
}

VarianceLawResult measure_variance_law(const ClusterSample& cluster, std::size_t k, std::size_t samples, Rng& rng) {
    const Matrix& x = cluster.points;
    const std::size_t n = x.rows;
    const std::size_t d = x.cols;
    if (n == 0 || samples < 2) throw ValidationError("variance law needs a non-empty cluster and >= 2 samples");

    std::vector<double> mu(d, 0.0), pop_var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = x.row(i);
        for (std::size_t h = 0; h < d; ++h) mu[h] += r[h];
    }
    for (double& m : mu) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = x.row(i);
        for (std::size_t h = 0; h < d; ++h) pop_var[h] += (r[h] - mu[h]) * (r[h] - mu[h]);
    }
    for (double& v : pop_var) v /= static_cast<double>(n);

    std::vector<double> mean(d, 0.0), m2(d, 0.0), pooled(d);
    std::vector<std::size_t> partners(k);
    for (std::size_t s = 0; s < samples; ++s) {
        const auto seed = static_cast<std::size_t>(rng.below(n));
        for (auto& p : partners) p = static_cast<std::size_t>(rng.below(n));
        kernels::mean_pool_rows(x, x.row(seed), partners, pooled);
        const double cnt = static_cast<double>(s + 1);
        for (std::size_t h = 0; h < d; ++h) {
            const double delta = pooled[h] - mean[h];
            mean[h] += delta / cnt;
            m2[h] += delta * (pooled[h] - mean[h]);
        }
    }

    VarianceLawResult out;
    out.samples = samples;
    double ratio_sum = 0.0;
    for (std::size_t h = 0; h < d; ++h) {
        const double var = m2[h] / static_cast<double>(samples - 1);
        ratio_sum += var / pop_var[h];
        const double se = std::sqrt(pop_var[h] / static_cast<double>(k + 1) / static_cast<double>(samples));
        out.max_mean_z = std::max(out.max_mean_z, std::abs(mean[h] - mu[h]) / se);
    }
    out.mean_ratio = ratio_sum / static_cast<double>(d);
    return out;
}

}  // namespace spill
