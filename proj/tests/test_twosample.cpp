#include <doctest.h>

#include <cmath>

#include "cfgan/twosample.hpp"

using namespace cfgan;

namespace {

TestConfig quick_config(std::uint64_t seed) {
    TestConfig cfg;
    cfg.permutations = 100;
    cfg.opt_steps = 20;
    cfg.opt_batch = 100;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("statistic names round trip") {
    for (auto s : {TestStatistic::Ecfd, TestStatistic::EcfdSmooth, TestStatistic::Oecfd,
                   TestStatistic::OecfdSmooth, TestStatistic::Mmd})
        CHECK(test_statistic_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(test_statistic_from_string("nope"), std::invalid_argument);
}

TEST_CASE("config validation") {
    TestConfig cfg;
    cfg.alpha = 0.05;
    cfg.permutations = 10;  // cannot resolve p <= 0.05 with 10 permutations
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.permutations = 200;
    CHECK_NOTHROW(cfg.validate());
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("identical samples are never rejected") {
    Rng rng(1);
    const Mat X = rng.normal_matrix(60, 2);
    for (auto s : {TestStatistic::Ecfd, TestStatistic::EcfdSmooth, TestStatistic::Mmd}) {
        Rng trial_rng(2);
        const TwoSampleResult r = run_test(X, X, s, quick_config(3), trial_rng);
        CHECK(!r.reject);
        CHECK(r.p_value == doctest::Approx(1.0));
    }
}

TEST_CASE("permutation p-value definition on a constant statistic") {
    Rng rng(4);
    const Mat X = rng.normal_matrix(10, 1), Y = rng.normal_matrix(10, 1);
    const TwoSampleResult r = permutation_test(
        X, Y, [](const Mat&, const Mat&) { return 1.0; }, 99, 0.05, rng);
    // every permuted value ties the observed one: p = (1 + 99) / (99 + 1) = 1
    CHECK(r.p_value == doctest::Approx(1.0));
    CHECK(!r.reject);
}

TEST_CASE("well separated samples are always rejected") {
    Rng rng(5);
    const Mat X = rng.normal_matrix(100, 1);
    Mat Y = rng.normal_matrix(100, 1);
    Y.array() += 10.0;
    for (auto s : {TestStatistic::Ecfd, TestStatistic::Oecfd, TestStatistic::Mmd}) {
        Rng trial_rng(6);
        const TwoSampleResult r = run_test(X, Y, s, quick_config(7), trial_rng);
        CHECK(r.reject);
        CHECK(r.p_value <= 0.05);
    }
}

TEST_CASE("null rejection rate stays near alpha") {
    PowerExperimentConfig cfg;
    cfg.dims = {1};
    cfg.statistics = {TestStatistic::Ecfd};
    cfg.n = 100;
    cfg.trials = 100;
    cfg.mean_gap = 0.0;
    cfg.jobs = 4;
    cfg.test = quick_config(11);
    const PowerExperimentResult res = power_experiment(cfg);
    REQUIRE(res.summary.size() == 1);
    // 3-sigma band around 0.05 for 100 Bernoulli trials
    CHECK(res.summary[0].power <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 100.0));
}

TEST_CASE("zero optimization steps returns the initialization") {
    Rng rng(8);
    const Mat X = rng.normal_matrix(50, 3), Y = rng.normal_matrix(50, 3);
    TestConfig cfg = quick_config(9);
    cfg.opt_steps = 0;
    cfg.sigma0 = 1.7;
    Rng opt_rng(10);
    const WeightingDistribution d =
        optimize_sigma(X, Y, WeightingDistribution(cfg.family, Vec::Constant(3, cfg.sigma0)),
                       cfg, opt_rng);
    CHECK(d.sigma().isApprox(Vec::Constant(3, 1.7), 1e-14));
}

TEST_CASE("optimized sigma grows along a separated dimension") {
    // P and Q differ only through a small shift in coordinate 0; ascent of the
    // normalized objective should favor that coordinate.
    Rng rng(12);
    const Eigen::Index n = 400;
    const Mat X = rng.normal_matrix(n, 2);
    Mat Y = rng.normal_matrix(n, 2);
    Y.col(0).array() += 1.0;
    TestConfig cfg = quick_config(13);
    cfg.opt_steps = 100;
    cfg.opt_batch = 200;
    Rng opt_rng(14);
    const WeightingDistribution d =
        optimize_sigma(X, Y, WeightingDistribution(cfg.family, Vec::Ones(2)), cfg, opt_rng);
    CHECK(d.sigma()(0) > d.sigma()(1));
}

TEST_CASE("run_test is deterministic for a fixed trial rng seed") {
    Rng data_rng(15);
    const Mat X = data_rng.normal_matrix(80, 2);
    Mat Y = data_rng.normal_matrix(80, 2);
    Y.array() += 0.3;
    auto once = [&](TestStatistic s) {
        Rng trial_rng(16);
        return run_test(X, Y, s, quick_config(17), trial_rng);
    };
    for (auto s : {TestStatistic::Ecfd, TestStatistic::Oecfd, TestStatistic::OecfdSmooth}) {
        const TwoSampleResult a = once(s), b = once(s);
        CHECK(a.statistic == b.statistic);
        CHECK(a.p_value == b.p_value);
        CHECK(a.sigma_norm == b.sigma_norm);
    }
}

TEST_CASE("power experiment output is jobs invariant") {
    PowerExperimentConfig cfg;
    cfg.dims = {1, 2};
    cfg.statistics = {TestStatistic::Ecfd, TestStatistic::Mmd};
    cfg.n = 60;
    cfg.trials = 10;
    cfg.mean_gap = 0.5;
    cfg.test = quick_config(18);
    cfg.jobs = 1;
    const PowerExperimentResult a = power_experiment(cfg);
    cfg.jobs = 5;
    const PowerExperimentResult b = power_experiment(cfg);
    REQUIRE(a.trials.size() == b.trials.size());
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        CHECK(a.trials[i].dim == b.trials[i].dim);
        CHECK(a.trials[i].statistic == b.trials[i].statistic);
        CHECK(a.trials[i].trial == b.trials[i].trial);
        CHECK(a.trials[i].result.statistic == b.trials[i].result.statistic);
        CHECK(a.trials[i].result.p_value == b.trials[i].result.p_value);
    }
    for (std::size_t i = 0; i < a.summary.size(); ++i)
        CHECK(a.summary[i].power == b.summary[i].power);
}

TEST_CASE("sigma_norm is reported for optimized statistics") {
    Rng rng(19);
    const Mat X = rng.normal_matrix(60, 2);
    Mat Y = rng.normal_matrix(60, 2);
    Y.array() += 0.5;
    Rng trial_rng(20);
    const TwoSampleResult r = run_test(X, Y, TestStatistic::Oecfd, quick_config(21), trial_rng);
    CHECK(r.sigma_norm > 0.0);
    Rng trial_rng2(20);
    const TwoSampleResult m = run_test(X, Y, TestStatistic::Mmd, quick_config(21), trial_rng2);
    CHECK(m.sigma_norm == 0.0);
}
