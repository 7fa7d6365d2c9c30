#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cfgan/estimators.hpp"

namespace cfgan {

enum class TestStatistic { Ecfd, EcfdSmooth, Oecfd, OecfdSmooth, Mmd };

std::string to_string(TestStatistic s);
TestStatistic test_statistic_from_string(const std::string& s);
bool is_optimized(TestStatistic s);
bool is_smoothed(TestStatistic s);

struct TestConfig {
    Eigen::Index k = 3;              // frequencies per test
    double alpha = 0.05;             // significance level
    int permutations = 200;          // calibration permutations P
    int opt_steps = 100;             // Adam ascent steps S for sigma
    Eigen::Index opt_batch = 1000;   // minibatch size B during optimization
    double opt_lr = 0.05;            // Adam step on log(sigma)
    double smoothing_scale = 1.0;    // for the smoothed variants
    WeightFamily family = WeightFamily::Gaussian;
    double sigma0 = 1.0;             // initial per-dimension scale
    std::uint64_t seed = 0;

    void validate() const;
};

struct TwoSampleResult {
    double statistic = 0.0;
    double threshold = 0.0;  // smallest permuted value at which we would still reject
    double p_value = 1.0;
    bool reject = false;
    double sigma_norm = 0.0;  // ||sigma|| used by the statistic (0 for MMD)
};

/// Adam ascent of ecfd_normalized on minibatches; returns the distribution
/// with the optimized scale. S = 0 returns the initialization.
WeightingDistribution optimize_sigma(const Mat& x_train, const Mat& y_train,
                                     const WeightingDistribution& init, const TestConfig& cfg,
                                     Rng& rng);

/// Permutation test with p = (1 + #{permuted >= observed}) / (P + 1).
TwoSampleResult permutation_test(const Mat& X, const Mat& Y,
                                 const std::function<double(const Mat&, const Mat&)>& statistic,
                                 int permutations, double alpha, Rng& rng);

/// One complete trial of the given statistic on (X, Y): optimized variants
/// split 50/50 into an optimization half and an evaluation half; all
/// variants are evaluated on the same evaluation half.
TwoSampleResult run_test(const Mat& X, const Mat& Y, TestStatistic stat, const TestConfig& cfg,
                         Rng& rng);

struct TrialRecord {
    int dim = 0;
    TestStatistic statistic = TestStatistic::Ecfd;
    int trial = 0;
    TwoSampleResult result;
};

struct PowerRow {
    int dim = 0;
    TestStatistic statistic = TestStatistic::Ecfd;
    double power = 0.0;
    double stderr_ = 0.0;
};

struct PowerExperimentConfig {
    std::vector<int> dims;
    std::vector<TestStatistic> statistics;
    Eigen::Index n = 10000;  // samples per distribution per trial
    int trials = 100;
    double mean_gap = 1.0;  // 0 gives the null-acceptance experiment
    int jobs = 1;
    TestConfig test;
};

struct PowerExperimentResult {
    std::vector<TrialRecord> trials;
    std::vector<PowerRow> summary;
};

/// Gaussian mean-shift experiment: P = N(0, I_d), Q = N(mean_gap * e_1, I_d).
/// Trials are independent jobs seeded by (seed, job index); results are
/// merged by trial index so the output is --jobs invariant.
PowerExperimentResult power_experiment(const PowerExperimentConfig& cfg);

}  // namespace cfgan
