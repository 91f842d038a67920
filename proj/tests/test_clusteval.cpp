#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "spill/clusteval.hpp"
#include "spill/error.hpp"
#include "spill/hungarian.hpp"

using namespace spill;
using spill::testing::acc_oracle;
using spill::testing::nmi_oracle;

namespace {

Matrix blobs(Rng& rng, std::size_t per, const std::vector<std::pair<double, double>>& centers, double spread,
             std::vector<int>& truth) {
    Matrix x(per * centers.size(), 2);
    truth.clear();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (std::size_t i = 0; i < per; ++i) {
            auto r = x.row(c * per + i);
            r[0] = rng.normal(centers[c].first, spread);
            r[1] = rng.normal(centers[c].second, spread);
            truth.push_back(static_cast<int>(c));
        }
    }
    return x;
}

}  // namespace

TEST_CASE("nmi fixed cases") {
    CHECK(nmi(std::vector{0, 0, 1, 1}, std::vector{1, 1, 0, 0}) == 1.0);
    CHECK(nmi(std::vector{0, 0, 1, 1}, std::vector{0, 0, 0, 0}) == 0.0);
    // 50-digit contingency evaluation: 0.34371101848545083159...
    CHECK(nmi(std::vector{0, 0, 1, 1}, std::vector{0, 1, 1, 1}) == doctest::Approx(0.34371101848545083).epsilon(1e-14));
    CHECK(nmi(std::vector{3, 3, 3}, std::vector{7, 7, 7}) == 1.0);
    CHECK(nmi(std::vector{0}, std::vector{5}) == 1.0);
    CHECK_THROWS_AS(nmi(std::vector{0, 1}, std::vector{0}), ValidationError);
}

TEST_CASE("nmi matches the arbitrary-precision oracle and is symmetric") {
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.below(40);
        const int kt = 1 + static_cast<int>(rng.below(6));
        const int kp = 1 + static_cast<int>(rng.below(6));
        std::vector<int> t(n), p(n);
        for (auto& v : t) v = static_cast<int>(rng.below(kt));
        for (auto& v : p) v = static_cast<int>(rng.below(kp));
        const double got = nmi(t, p);
        CHECK(got == doctest::Approx(nmi_oracle(t, p)).epsilon(1e-9));
        CHECK(got == doctest::Approx(nmi(p, t)).epsilon(1e-12));
        // relabel with an arbitrary bijection
        std::vector<int> relabeled(n);
        for (std::size_t i = 0; i < n; ++i) relabeled[i] = 100 - 3 * p[i];
        CHECK(nmi(t, relabeled) == doctest::Approx(got).epsilon(1e-12));
    }
}

TEST_CASE("accuracy_hungarian") {
    CHECK(accuracy_hungarian(std::vector{0, 1, 2, 2}, std::vector{0, 1, 2, 2}) == 1.0);
    CHECK(accuracy_hungarian(std::vector{0, 0, 1, 1}, std::vector{0, 1, 1, 1}) == 0.75);
    CHECK(accuracy_hungarian(std::vector{0, 0, 1, 1}, std::vector{1, 1, 0, 0}) == 1.0);
    CHECK_THROWS_AS(accuracy_hungarian(std::vector{0}, std::vector{0, 1}), ValidationError);

    Rng rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.below(8);
        const int kt = 1 + static_cast<int>(rng.below(5));
        const int kp = 1 + static_cast<int>(rng.below(5));
        std::vector<int> t(n), p(n);
        for (auto& v : t) v = static_cast<int>(rng.below(kt));
        for (auto& v : p) v = static_cast<int>(rng.below(kp));
        const double acc = accuracy_hungarian(t, p);
        CHECK(acc == acc_oracle(t, p));
        // at least the largest contingency cell is always matched
        std::vector<int> cells(kt * kp, 0);
        for (std::size_t i = 0; i < n; ++i) ++cells[t[i] * kp + p[i]];
        CHECK(acc >= static_cast<double>(*std::max_element(cells.begin(), cells.end())) / n);
    }
}

TEST_CASE("hungarian_max on a known matrix") {
    const std::vector<std::vector<std::int64_t>> w{{7, 53, 183}, {497, 383, 563}, {79, 258, 96}};
    const auto a = hungarian_max(w);
    std::int64_t total = 0;
    for (std::size_t i = 0; i < 3; ++i) total += w[i][a[i]];
    CHECK(total == 183 + 497 + 258);
}

TEST_CASE("kmeans with one cluster returns the global mean") {
    Rng rng(1);
    Matrix x(20, 3);
    for (double& v : x.data) v = rng.normal();
    Rng km(5);
    const auto a = kmeans(x, 1, km);
    std::vector<double> mean(3, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t h = 0; h < 3; ++h) mean[h] += x.row(i)[h] / 20.0;
    }
    double ss = 0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t h = 0; h < 3; ++h) ss += (x.row(i)[h] - mean[h]) * (x.row(i)[h] - mean[h]);
    }
    for (std::size_t h = 0; h < 3; ++h) CHECK(a.centroids.row(0)[h] == doctest::Approx(mean[h]).epsilon(1e-12));
    CHECK(a.inertia == doctest::Approx(ss).epsilon(1e-12));
}

TEST_CASE("kmeans recovers well separated blobs on every restart") {
    Rng rng(8);
    std::vector<int> truth;
    const Matrix x = blobs(rng, 30, {{0, 0}, {100, 100}}, 1.0, truth);
    for (std::uint64_t s = 0; s < 10; ++s) {
        Rng km(s);
        KMeansOptions opts;
        opts.restarts = 1;
        const auto a = kmeans(x, 2, km, opts);
        CHECK(accuracy_hungarian(truth, a.labels) == 1.0);
    }
    Rng km(0);
    CHECK_THROWS_AS(kmeans(x, 61, km), ValidationError);
    CHECK_THROWS_AS(kmeans(x, 0, km), ValidationError);
}

TEST_CASE("kmeans inertia never increases across Lloyd iterations") {
    Rng rng(12);
    std::vector<int> truth;
    const Matrix x = blobs(rng, 40, {{0, 0}, {3, 0}, {0, 3}, {3, 3}}, 1.5, truth);
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng km(s);
        KMeansOptions opts;
        opts.restarts = 1;
        opts.tol = 0.0;
        const auto a = kmeans(x, 4, km, opts);
        for (std::size_t i = 1; i < a.inertia_trace.size(); ++i) {
            CHECK(a.inertia_trace[i] <= a.inertia_trace[i - 1] * (1 + 1e-12));
        }
        CHECK(a.inertia <= a.inertia_trace.back() * (1 + 1e-12));
        CHECK(a.inertia == doctest::Approx(clustering_sse(x, a.labels, 4)).epsilon(1e-12));
    }
}

TEST_CASE("kmeans reaches the brute-force optimum on tiny instances") {
    Rng rng(123);
    int hits = 0;
    const int instances = 40;
    for (int inst = 0; inst < instances; ++inst) {
        Matrix x(12, 2);
        for (double& v : x.data) v = rng.normal(0.0, 1.0);
        Rng km(rng());
        const double got = kmeans(x, 3, km).inertia;
        const double best = spill::testing::kmeans_bruteforce_sse(x, 3);
        CHECK(got >= best * (1 - 1e-9));
        hits += got <= best * (1 + 1e-9);
    }
    CHECK(hits >= 38);
}

TEST_CASE("kmeans repairs empty clusters from duplicate seeds") {
    Matrix x(6, 1);
    x.data = {0, 0, 0, 0, 0, 10};
    Rng km(3);
    const auto a = kmeans(x, 3, km);
    std::vector<int> counts(3, 0);
    for (int l : a.labels) ++counts[l];
    for (int c : counts) CHECK(c > 0);
}

TEST_CASE("kmeans parallel and serial paths agree") {
    Rng rng(21);
    std::vector<int> truth;
    const Matrix x = blobs(rng, 50, {{0, 0}, {4, 1}, {1, 5}}, 1.2, truth);
    KMeansOptions par, ser;
    ser.parallel = false;
    Rng a(9), b(9);
    const auto ra = kmeans(x, 3, a, par);
    const auto rb = kmeans(x, 3, b, ser);
    CHECK(ra.labels == rb.labels);
    CHECK(ra.inertia == rb.inertia);
}

TEST_CASE("variance_report") {
    Matrix x(2, 2);
    x.data = {0, 0, 2, 2};
    auto v = variance_report(x, std::vector{0, 0});
    REQUIRE(v.size() == 1);
    CHECK(*v[0] == doctest::Approx(2.0));

    Matrix same(3, 4, 1.5);
    CHECK(*variance_report(same, std::vector{0, 0, 0})[0] == 0.0);

    Matrix single(3, 1);
    single.data = {1, 2, 3};
    const auto s = variance_report(single, std::vector{0, 0, 1});
    CHECK(s[0].has_value());
    CHECK_FALSE(s[1].has_value());

    Rng rng(44);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.below(60);
        const std::size_t d = 1 + rng.below(16);
        Matrix r(n, d);
        for (double& val : r.data) val = rng.normal(5.0, 2.0);
        // two-pass reference
        double total = 0;
        for (std::size_t h = 0; h < d; ++h) {
            double mu = 0;
            for (std::size_t i = 0; i < n; ++i) mu += r.row(i)[h];
            mu /= n;
            double ss = 0;
            for (std::size_t i = 0; i < n; ++i) ss += (r.row(i)[h] - mu) * (r.row(i)[h] - mu);
            total += ss / (n - 1);
        }
        const auto got = variance_report(r, std::vector<int>(n, 0));
        CHECK(std::abs(*got[0] - total / d) <= 1e-12 * std::max(1.0, total / d));
    }
}

TEST_CASE("evaluate aggregates runs deterministically") {
    Rng rng(31);
    std::vector<int> truth;
    const Matrix x = blobs(rng, 25, {{0, 0}, {50, 0}, {0, 50}}, 1.0, truth);
    const auto one = evaluate(x, truth, 3, 1, 99);
    CHECK(one.nmi_std == 0.0);
    CHECK(one.acc_std == 0.0);
    const auto five = evaluate(x, truth, 3, 5, 99);
    CHECK(five.nmi_mean == 100.0);
    CHECK(five.acc_mean == 100.0);
    CHECK(five.nmi_std == 0.0);
    CHECK(five.per_run.size() == 5);
    CHECK(evaluate(x, truth, 3, 5, 99) == five);

    const Matrix y = blobs(rng, 25, {{0, 0}, {2, 0}, {0, 2}}, 1.5, truth);
    CHECK(evaluate(y, truth, 3, 4, 5) == evaluate(y, truth, 3, 4, 5));
}
