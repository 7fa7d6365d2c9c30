#include "cfgan/weighting.hpp"

namespace cfgan {

std::string to_string(WeightFamily f) {
    switch (f) {
        case WeightFamily::Gaussian: return "gaussian";
        case WeightFamily::StudentT: return "student-t";
        case WeightFamily::Laplace: return "laplace";
        case WeightFamily::Uniform: return "uniform";
    }
    return "?";
}

WeightFamily weight_family_from_string(const std::string& s) {
    if (s == "gaussian") return WeightFamily::Gaussian;
    if (s == "student-t" || s == "studentt" || s == "student_t") return WeightFamily::StudentT;
    if (s == "laplace") return WeightFamily::Laplace;
    if (s == "uniform") return WeightFamily::Uniform;
    throw std::invalid_argument("unknown weighting family: " + s);
}

WeightingDistribution::WeightingDistribution(WeightFamily family, Vec sigma, double student_dof)
    : family_(family), student_dof_(student_dof) {
    if (sigma.size() == 0) throw std::invalid_argument("WeightingDistribution: empty sigma");
    if ((sigma.array() <= 0.0).any())
        throw std::invalid_argument("WeightingDistribution: sigma must be strictly positive");
    if (family == WeightFamily::StudentT && student_dof <= 0.0)
        throw std::invalid_argument("WeightingDistribution: StudentT dof must be positive");
    log_sigma_ = sigma.array().log();
}

WeightingDistribution WeightingDistribution::with_log_sigma(Vec log_sigma) const {
    WeightingDistribution d = *this;
    if (log_sigma.size() != log_sigma_.size())
        throw std::invalid_argument("with_log_sigma: dimension mismatch");
    d.log_sigma_ = std::move(log_sigma);
    return d;
}

Mat WeightingDistribution::sample_base(Rng& rng, WeightFamily family, Eigen::Index k,
                                       Eigen::Index m, double student_dof) {
    if (k < 1 || m < 1) throw std::invalid_argument("sample_base: need k >= 1 and m >= 1");
    Mat eps(k, m);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            switch (family) {
                case WeightFamily::Gaussian: eps(i, j) = rng.normal(); break;
                case WeightFamily::StudentT: eps(i, j) = rng.student_t(student_dof); break;
                case WeightFamily::Laplace: eps(i, j) = rng.laplace(); break;
                case WeightFamily::Uniform: eps(i, j) = rng.uniform(-1.0, 1.0); break;
            }
        }
    }
    return eps;
}

Mat WeightingDistribution::sample(Rng& rng, Eigen::Index k) const {
    Mat eps = sample_base(rng, family_, k, dim(), student_dof_);
    return eps.array().rowwise() * sigma().transpose().array();
}

FrequencyBatch sample_frequencies(const Tensor& log_sigma, WeightFamily family, Rng& rng,
                                  Eigen::Index k, double student_dof) {
    Mat eps = WeightingDistribution::sample_base(rng, family, k, log_sigma.cols(), student_dof);
    return frequencies_from_base(log_sigma, eps);
}

FrequencyBatch frequencies_from_base(const Tensor& log_sigma, const Mat& eps) {
    if (log_sigma.rows() != 1 || log_sigma.cols() != eps.cols())
        throw std::invalid_argument("frequencies_from_base: log_sigma must be 1 x m, got " +
                                    log_sigma.shape_str());
    Tape* tape = log_sigma.tape();
    Tensor sig_rows = broadcast_row(exp(log_sigma), eps.rows());
    Tensor t = mul(sig_rows, tape->constant(eps));
    return FrequencyBatch{t, eps};
}

}  // namespace cfgan
