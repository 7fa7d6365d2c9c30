#pragma once

#include <stdexcept>
#include <string>

#include "cfgan/rng.hpp"
#include "cfgan/tape.hpp"

namespace cfgan {

enum class WeightFamily { Gaussian, StudentT, Laplace, Uniform };

std::string to_string(WeightFamily f);
WeightFamily weight_family_from_string(const std::string& s);

/// Frequency weighting distribution omega(t; sigma): a base family scaled
/// per-dimension by sigma > 0. Stored as log(sigma) so unconstrained gradient
/// steps keep every coordinate positive. Immutable after construction.
class WeightingDistribution {
public:
    WeightingDistribution(WeightFamily family, Vec sigma, double student_dof = 2.0);

    WeightFamily family() const { return family_; }
    Eigen::Index dim() const { return log_sigma_.size(); }
    double student_dof() const { return student_dof_; }
    const Vec& log_sigma() const { return log_sigma_; }
    Vec sigma() const { return log_sigma_.array().exp(); }
    double sigma_norm() const { return sigma().norm(); }

    WeightingDistribution with_log_sigma(Vec log_sigma) const;

    /// k x m draws from the unit-scale base family.
    static Mat sample_base(Rng& rng, WeightFamily family, Eigen::Index k, Eigen::Index m,
                           double student_dof = 2.0);

    /// k x m frequency draws t = sigma (.) eps (plain values, no graph).
    Mat sample(Rng& rng, Eigen::Index k) const;

private:
    WeightFamily family_;
    Vec log_sigma_;
    double student_dof_;
};

/// Frequency batch attached to a tape: t = exp(log_sigma) (.) eps, so that
/// d(loss)/d(log_sigma) is defined whenever log_sigma requires grad.
struct FrequencyBatch {
    Tensor t;    // k x m
    Mat eps;     // the base draws behind t
    Eigen::Index k() const { return t.rows(); }
};

/// Attach a fresh frequency batch to the tape owning log_sigma (a 1 x m row).
FrequencyBatch sample_frequencies(const Tensor& log_sigma, WeightFamily family, Rng& rng,
                                  Eigen::Index k, double student_dof = 2.0);

/// As above with base draws supplied by the caller (reparameterization check).
FrequencyBatch frequencies_from_base(const Tensor& log_sigma, const Mat& eps);

}  // namespace cfgan
