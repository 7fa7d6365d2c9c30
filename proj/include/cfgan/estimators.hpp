#pragma once

#include <vector>

#include "cfgan/weighting.hpp"

namespace cfgan {

/// Re/Im of the empirical characteristic function at each frequency.
struct EcfValue {
    Vec re;  // length k
    Vec im;
};

enum class KernelFamily { RBF, RQ, Poly3 };

/// Kernel mixture for MMD. The RBF parameter list holds frequency-domain
/// scales gamma: kappa_gamma(x,y) = exp(-0.5 * gamma^2 * ||x-y||^2), the
/// Fourier dual of a Gaussian weighting with sigma = gamma. RQ uses
/// kappa_alpha(x,y) = (1 + ||x-y||^2 / (2 alpha))^(-alpha). Poly3 uses
/// kappa(x,y) = ((1/m)<x,y> + 1)^3 and ignores the parameter list.
struct KernelSpec {
    KernelFamily family = KernelFamily::RBF;
    std::vector<double> params = {1.0, 2.0, 4.0, 8.0, 16.0};

    static KernelSpec rbf_mixture() { return {KernelFamily::RBF, {1, 2, 4, 8, 16}}; }
    static KernelSpec rq_mixture() { return {KernelFamily::RQ, {0.2, 0.5, 1, 2, 5}}; }
    static KernelSpec poly3() { return {KernelFamily::Poly3, {}}; }
    void validate() const;
};

// ---- plain (value-only) estimators, used by the test/benchmark harness ----

EcfValue ecf(const Mat& X, const Mat& T);
double ecfd(const Mat& X, const Mat& Y, const Mat& T);
double ecfd_smoothed(const Mat& X, const Mat& Y, const Mat& T, double smoothing_scale);
double mmd2(const Mat& X, const Mat& Y, const KernelSpec& kernel, bool biased);

/// Biased MMD^2 under the Fourier dual of a Gaussian weighting with
/// per-dimension scales sigma: kappa(x,y) = exp(-0.5 sum_d sigma_d^2 (x_d-y_d)^2).
double mmd2_rbf_dual(const Mat& X, const Mat& Y, const Vec& sigma, bool biased);

/// Monte-Carlo CFD: mean of ecfd over reps independent frequency batches.
double cfd_mc(const Mat& X, const Mat& Y, const WeightingDistribution& dist, Rng& rng,
              Eigen::Index k, int reps);

/// As cfd_mc, also reporting the standard error of the mean across reps.
struct McEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    int reps = 0;
};
McEstimate cfd_mc_with_se(const Mat& X, const Mat& Y, const WeightingDistribution& dist, Rng& rng,
                          Eigen::Index k, int reps);

// ---- tape (differentiable) estimators, used for sigma/network training ----

struct EcfTensors {
    Tensor re;  // 1 x k
    Tensor im;
};

EcfTensors ecf_t(const Tensor& X, const Tensor& T);
Tensor ecfd_t(const Tensor& X, const Tensor& Y, const Tensor& T);
Tensor ecfd_smoothed_t(const Tensor& X, const Tensor& Y, const Tensor& T, double smoothing_scale);

/// ecfd divided by ||sigma||_2; log_sigma is the 1 x m parameter row behind T.
Tensor ecfd_normalized_t(const Tensor& X, const Tensor& Y, const Tensor& T,
                         const Tensor& log_sigma);

Tensor mmd2_t(const Tensor& X, const Tensor& Y, const KernelSpec& kernel, bool biased);

}  // namespace cfgan
