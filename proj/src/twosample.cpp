#include "cfgan/twosample.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "cfgan/optim.hpp"

namespace cfgan {

std::string to_string(TestStatistic s) {
    switch (s) {
        case TestStatistic::Ecfd: return "ecfd";
        case TestStatistic::EcfdSmooth: return "ecfd-smooth";
        case TestStatistic::Oecfd: return "oecfd";
        case TestStatistic::OecfdSmooth: return "oecfd-smooth";
        case TestStatistic::Mmd: return "mmd";
    }
    return "?";
}

TestStatistic test_statistic_from_string(const std::string& s) {
    if (s == "ecfd") return TestStatistic::Ecfd;
    if (s == "ecfd-smooth") return TestStatistic::EcfdSmooth;
    if (s == "oecfd") return TestStatistic::Oecfd;
    if (s == "oecfd-smooth") return TestStatistic::OecfdSmooth;
    if (s == "mmd") return TestStatistic::Mmd;
    throw std::invalid_argument("unknown statistic: " + s);
}

bool is_optimized(TestStatistic s) {
    return s == TestStatistic::Oecfd || s == TestStatistic::OecfdSmooth;
}
bool is_smoothed(TestStatistic s) {
    return s == TestStatistic::EcfdSmooth || s == TestStatistic::OecfdSmooth;
}

void TestConfig::validate() const {
    if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("TestConfig: need 0 < alpha < 1");
    if (permutations + 1 < static_cast<int>(std::ceil(1.0 / alpha)))
        throw std::invalid_argument(
            "TestConfig: permutation count too small for alpha (need P >= 1/alpha - 1)");
    if (k < 1) throw std::invalid_argument("TestConfig: k must be >= 1");
    if (smoothing_scale <= 0.0) throw std::invalid_argument("TestConfig: smoothing_scale must be positive");
}

WeightingDistribution optimize_sigma(const Mat& x_train, const Mat& y_train,
                                     const WeightingDistribution& init, const TestConfig& cfg,
                                     Rng& rng) {
    if (x_train.cols() != y_train.cols())
        throw std::invalid_argument("optimize_sigma: dimension mismatch");
    Mat log_sigma = init.log_sigma().transpose();  // 1 x m parameter row
    Adam adam(cfg.opt_lr);
    const Eigen::Index bx = std::min<Eigen::Index>(cfg.opt_batch, x_train.rows());
    const Eigen::Index by = std::min<Eigen::Index>(cfg.opt_batch, y_train.rows());
    for (int step = 0; step < cfg.opt_steps; ++step) {
        Mat xb(bx, x_train.cols()), yb(by, y_train.cols());
        for (Eigen::Index i = 0; i < bx; ++i) xb.row(i) = x_train.row(rng.index(x_train.rows()));
        for (Eigen::Index i = 0; i < by; ++i) yb.row(i) = y_train.row(rng.index(y_train.rows()));

        Tape tape;
        Tensor ls = tape.leaf(log_sigma, true);
        FrequencyBatch fb = sample_frequencies(ls, init.family(), rng, cfg.k, init.student_dof());
        Tensor obj = ecfd_normalized_t(tape.constant(xb), tape.constant(yb), fb.t, ls);
        Tensor neg_obj = neg(obj);  // ascend the normalized ECFD
        if (!std::isfinite(neg_obj.scalar()))
            throw std::runtime_error("optimize_sigma: non-finite loss at iteration " +
                                     std::to_string(step));
        tape.backward(neg_obj);
        adam.step({&log_sigma}, {ls.grad()});
    }
    return init.with_log_sigma(log_sigma.transpose());
}

TwoSampleResult permutation_test(const Mat& X, const Mat& Y,
                                 const std::function<double(const Mat&, const Mat&)>& statistic,
                                 int permutations, double alpha, Rng& rng) {
    if (X.rows() < 1 || Y.rows() < 1)
        throw std::invalid_argument("permutation_test: empty sample set");
    if (X.cols() != Y.cols()) throw std::invalid_argument("permutation_test: dimension mismatch");
    const double observed = statistic(X, Y);
    Mat pool(X.rows() + Y.rows(), X.cols());
    pool << X, Y;
    std::vector<double> permuted(permutations);
    Mat xp(X.rows(), X.cols()), yp(Y.rows(), Y.cols());
    int count_ge = 0;
    for (int p = 0; p < permutations; ++p) {
        const auto idx = rng.permutation(static_cast<std::size_t>(pool.rows()));
        for (Eigen::Index i = 0; i < X.rows(); ++i) xp.row(i) = pool.row(idx[i]);
        for (Eigen::Index i = 0; i < Y.rows(); ++i) yp.row(i) = pool.row(idx[X.rows() + i]);
        permuted[p] = statistic(xp, yp);
        if (permuted[p] >= observed) ++count_ge;
    }
    TwoSampleResult res;
    res.statistic = observed;
    res.p_value = (1.0 + count_ge) / (permutations + 1.0);
    res.reject = res.p_value <= alpha;
    // informational rejection threshold: the c-th largest permuted value where
    // c = floor(alpha * (P + 1)) - 1 is the largest admissible exceedance count
    std::sort(permuted.begin(), permuted.end(), std::greater<>());
    const int c = static_cast<int>(std::floor(alpha * (permutations + 1))) - 1;
    res.threshold = (c >= 0 && c < permutations) ? permuted[c]
                                                 : std::numeric_limits<double>::infinity();
    return res;
}

namespace {

double median_pairwise_distance(const Mat& X, const Mat& Y, Rng& rng) {
    std::vector<double> d;
    const int probes = 200;
    for (int i = 0; i < probes; ++i) {
        const auto a = rng.index(static_cast<std::size_t>(X.rows()));
        const auto b = rng.index(static_cast<std::size_t>(Y.rows()));
        d.push_back((X.row(static_cast<Eigen::Index>(a)) - Y.row(static_cast<Eigen::Index>(b))).norm());
    }
    std::nth_element(d.begin(), d.begin() + probes / 2, d.end());
    const double m = d[probes / 2];
    return m > 0.0 ? m : 1.0;
}

}  // namespace

TwoSampleResult run_test(const Mat& X, const Mat& Y, TestStatistic stat, const TestConfig& cfg,
                         Rng& rng) {
    cfg.validate();
    const Eigen::Index m = X.cols();
    // Every variant is evaluated on the second half so that powers are
    // comparable; the first half is reserved for sigma optimization.
    const Eigen::Index nx = X.rows() / 2, ny = Y.rows() / 2;
    const Mat x_opt = X.topRows(nx), x_eval = X.bottomRows(X.rows() - nx);
    const Mat y_opt = Y.topRows(ny), y_eval = Y.bottomRows(Y.rows() - ny);

    if (stat == TestStatistic::Mmd) {
        const double gamma = 1.0 / median_pairwise_distance(x_eval, y_eval, rng);
        KernelSpec kernel{KernelFamily::RBF, {gamma}};
        auto fn = [&](const Mat& A, const Mat& B) { return mmd2(A, B, kernel, true); };
        return permutation_test(x_eval, y_eval, fn, cfg.permutations, cfg.alpha, rng);
    }

    WeightingDistribution dist(cfg.family, Vec::Constant(m, cfg.sigma0));
    if (is_optimized(stat)) dist = optimize_sigma(x_opt, y_opt, dist, cfg, rng);
    const Mat T = dist.sample(rng, cfg.k);  // frozen across permutations
    const bool smooth = is_smoothed(stat);
    auto fn = [&](const Mat& A, const Mat& B) {
        return smooth ? ecfd_smoothed(A, B, T, cfg.smoothing_scale) : ecfd(A, B, T);
    };
    TwoSampleResult res = permutation_test(x_eval, y_eval, fn, cfg.permutations, cfg.alpha, rng);
    res.sigma_norm = dist.sigma_norm();
    return res;
}

PowerExperimentResult power_experiment(const PowerExperimentConfig& cfg) {
    PowerExperimentResult out;
    if (cfg.trials < 1 || cfg.dims.empty() || cfg.statistics.empty()) return out;
    const std::size_t per_trial = cfg.statistics.size();
    const std::size_t n_tasks = cfg.dims.size() * static_cast<std::size_t>(cfg.trials);
    out.trials.resize(n_tasks * per_trial);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= n_tasks) return;
            const std::size_t di = task / cfg.trials;
            const int trial = static_cast<int>(task % cfg.trials);
            const int d = cfg.dims[di];
            Rng rng(Rng::derive_seed(cfg.test.seed, task));
            Mat X = rng.normal_matrix(cfg.n, d);
            Mat Y = rng.normal_matrix(cfg.n, d);
            Y.col(0).array() += cfg.mean_gap;
            for (std::size_t si = 0; si < per_trial; ++si) {
                TrialRecord rec;
                rec.dim = d;
                rec.statistic = cfg.statistics[si];
                rec.trial = trial;
                rec.result = run_test(X, Y, cfg.statistics[si], cfg.test, rng);
                out.trials[task * per_trial + si] = rec;
            }
        }
    };
    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t di = 0; di < cfg.dims.size(); ++di) {
        for (std::size_t si = 0; si < per_trial; ++si) {
            int rejects = 0;
            for (int t = 0; t < cfg.trials; ++t) {
                const auto& rec = out.trials[(di * cfg.trials + t) * per_trial + si];
                rejects += rec.result.reject ? 1 : 0;
            }
            PowerRow row;
            row.dim = cfg.dims[di];
            row.statistic = cfg.statistics[si];
            row.power = static_cast<double>(rejects) / cfg.trials;
            row.stderr_ = std::sqrt(row.power * (1.0 - row.power) / cfg.trials);
            out.summary.push_back(row);
        }
    }
    return out;
}

}  // namespace cfgan
