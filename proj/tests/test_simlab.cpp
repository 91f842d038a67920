#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "spill/error.hpp"
#include "spill/simlab.hpp"

using namespace spill;

namespace {

ClusterSample tiny_cluster() {
    ClusterSample c;
    c.points = Matrix(4, 2);
    c.points.data = {0, 0, 1, 0, 0, 1, 10, 10};
    return c;
}

double cluster_variance(const ClusterSample& c) {
    return *variance_report(c.points, std::vector<int>(c.points.rows, 0))[0];
}

}  // namespace

TEST_CASE("gen_clusters reproduces the reference variance levels") {
    SUBCASE("normal") {
        auto spec = SimulationSpec::table1(Distribution::Normal);
        double total = 0;
        int count = 0;
        for (std::uint64_t s = 0; s < 5; ++s) {
            Rng rng(s);
            const auto clusters = gen_clusters(spec, rng);
            REQUIRE(clusters.size() == 3);
            for (const auto& c : clusters) {
                CHECK(c.points.cols == 128);
                CHECK(c.points.rows >= 50);
                CHECK(c.points.rows <= 250);
                total += cluster_variance(c);
                ++count;
            }
        }
        CHECK(total / count == doctest::Approx(39.76).epsilon(0.15));
    }
    SUBCASE("lognormal") {
        auto spec = SimulationSpec::table1(Distribution::LogNormal);
        double total = 0;
        int count = 0;
        for (std::uint64_t s = 0; s < 10; ++s) {
            Rng rng(s);
            for (const auto& c : gen_clusters(spec, rng)) {
                CHECK(std::all_of(c.points.data.begin(), c.points.data.end(), [](double v) { return v > 0.0; }));
                total += cluster_variance(c);
                ++count;
            }
        }
        CHECK(total / count == doctest::Approx(28.12).epsilon(0.20));
    }
}

TEST_CASE("spec validation") {
    SimulationSpec s;
    CHECK_NOTHROW(s.validate());
    s.var_range = {5, 3};
    CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("degenerate"), ValidationError);
    s = SimulationSpec{};
    s.k = 50;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s.k = 49;
    CHECK_NOTHROW(s.validate());
    s.k = 80;
    s.replacement = Replacement::With;
    CHECK_NOTHROW(s.validate());
    s.strategy = Strategy::TopK;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = SimulationSpec{};
    s.num_clusters = 0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = SimulationSpec{};
    s.runs = 0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("pooling examples") {
    const auto c = tiny_cluster();
    Rng rng(1);
    CHECK(pool_random(c, 0, 0, Replacement::Without, rng) == std::vector<double>{0, 0});
    CHECK(pool_topk(c, 0, 0) == std::vector<double>{0, 0});
    // nearest two of (0,0) are (1,0) and (0,1)
    const auto top = pool_topk(c, 0, 2);
    CHECK(top[0] == doctest::Approx(1.0 / 3.0));
    CHECK(top[1] == doctest::Approx(1.0 / 3.0));
    // without replacement and k = n-1 every other point is used exactly once
    const auto all = pool_random(c, 0, 3, Replacement::Without, rng);
    CHECK(all[0] == doctest::Approx(11.0 / 4.0));
    CHECK(all[1] == doctest::Approx(11.0 / 4.0));
}

TEST_CASE("random partners respect the replacement mode") {
    Rng rng(4);
    const auto without = random_partners(30, 7, Replacement::Without, rng);
    for (std::size_t i = 0; i < without.size(); ++i) {
        const std::set<std::size_t> uniq(without[i].begin(), without[i].end());
        CHECK(uniq.size() == 7);
        CHECK(uniq.count(i) == 0);
        for (auto p : without[i]) CHECK(p < 30);
    }
    CHECK_THROWS_AS(random_partners(5, 5, Replacement::Without, rng), ValidationError);
    const auto with = random_partners(5, 20, Replacement::With, rng);
    for (const auto& p : with) CHECK(p.size() == 20);
}

TEST_CASE("pooling with replacement divides variance by 1+k") {
    SimulationSpec spec;
    spec.dim = 32;
    spec.size_range = {400, 400};
    spec.num_clusters = 1;
    Rng rng(10);
    const auto cluster = gen_clusters(spec, rng)[0];
    for (std::size_t k : {1u, 5u, 10u}) {
        const auto r = measure_variance_law(cluster, k, 20000, rng);
        CHECK(r.mean_ratio * (1.0 + k) == doctest::Approx(1.0).epsilon(0.10));
        CHECK(r.max_mean_z < 5.0);
    }
}

TEST_CASE("pooling preserves the cluster mean") {
    SimulationSpec spec;
    spec.dim = 8;
    spec.num_clusters = 1;
    spec.size_range = {200, 200};
    Rng rng(2);
    const auto c = gen_clusters(spec, rng)[0];
    for (Strategy s : {Strategy::Rd, Strategy::TopK}) {
        const auto pooled = pool_cluster(c, 10, s, Replacement::Without, rng);
        for (std::size_t h = 0; h < spec.dim; ++h) {
            double a = 0, b = 0, sd = 0;
            for (std::size_t i = 0; i < c.points.rows; ++i) {
                a += c.points.row(i)[h];
                b += pooled.row(i)[h];
            }
            a /= c.points.rows;
            b /= c.points.rows;
            for (std::size_t i = 0; i < c.points.rows; ++i) sd += std::pow(c.points.row(i)[h] - a, 2);
            sd = std::sqrt(sd / c.points.rows);
            CHECK(std::abs(a - b) < 0.5 * sd);
        }
    }
}

TEST_CASE("pooling reduces variance and improves clustering") {
    auto spec = SimulationSpec::table1(Distribution::Normal);
    std::vector<TrialResult> base, rd, topk;
    for (std::size_t run = 0; run < 4; ++run) {
        spec.k = 0;
        base.push_back(run_trial(spec, run));
        spec.k = 10;
        spec.strategy = Strategy::Rd;
        rd.push_back(run_trial(spec, run));
        spec.strategy = Strategy::TopK;
        topk.push_back(run_trial(spec, run));
    }
    const auto p0 = summarize(base, 0), pr = summarize(rd, 10), pt = summarize(topk, 10);
    CHECK(pr.var_mean < p0.var_mean / 5);
    CHECK(pt.var_mean < p0.var_mean);
    CHECK(pr.acc_mean > p0.acc_mean);
    CHECK(pr.nmi_mean > p0.nmi_mean);
    CHECK(pr.acc_mean > 75.0);
}

TEST_CASE("trials and sweeps are deterministic") {
    auto spec = SimulationSpec::table1(Distribution::LogNormal);
    spec.dim = 16;
    spec.runs = 3;
    spec.k = 5;
    const auto a = run_trial(spec, 2);
    const auto b = run_trial(spec, 2);
    CHECK(a == b);
    const std::vector<std::size_t> values{0, 2, 4};
    const auto s1 = run_sweep(spec, SweepAxis::K, values);
    const auto s2 = run_sweep(spec, SweepAxis::K, values);
    CHECK(s1.points == s2.points);
    REQUIRE(s1.points.size() == 3);
    CHECK(s1.points[1].k == 2);
    CHECK(s1.points[2].trials.size() == 3);
    CHECK_THROWS_AS(run_sweep(spec, SweepAxis::K, std::vector<std::size_t>{}), ValidationError);

    const std::vector<std::size_t> dims{4, 8};
    const auto sd = run_sweep(spec, SweepAxis::Dim, dims);
    CHECK(sd.points[1].dim == 8);
    CHECK(sd.points[1].trials[0].dim == 8);
}
