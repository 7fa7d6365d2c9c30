#include "cfgan/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace cfgan {

namespace {

void check_dims(const Mat& X, const Mat& Y, const char* op) {
    if (X.cols() != Y.cols())
        throw std::invalid_argument(std::string(op) + ": dimension mismatch " +
                                    std::to_string(X.cols()) + " vs " + std::to_string(Y.cols()));
    if (X.rows() < 1 || Y.rows() < 1)
        throw std::invalid_argument(std::string(op) + ": empty sample set");
}

constexpr Eigen::Index kBlock = 512;

double kernel_scalar(const KernelSpec& spec, double d2_or_dot, Eigen::Index m) {
    double acc = 0.0;
    switch (spec.family) {
        case KernelFamily::RBF:
            for (double g : spec.params) acc += std::exp(-0.5 * g * g * d2_or_dot);
            break;
        case KernelFamily::RQ:
            for (double a : spec.params) acc += std::pow(1.0 + d2_or_dot / (2.0 * a), -a);
            break;
        case KernelFamily::Poly3: {
            const double b = d2_or_dot / static_cast<double>(m) + 1.0;
            acc = b * b * b;
            break;
        }
    }
    return acc;
}

// Sum of kernel values over all pairs (A_i, B_j); optionally skips the
// diagonal (valid only when A and B are the same sample set).
double kernel_pair_sum(const Mat& A, const Mat& B, const KernelSpec& spec, bool skip_diag) {
    const bool use_dot = spec.family == KernelFamily::Poly3;
    const Vec sqA = A.rowwise().squaredNorm();
    const Vec sqB = B.rowwise().squaredNorm();
    double total = 0.0;
    for (Eigen::Index i0 = 0; i0 < A.rows(); i0 += kBlock) {
        const Eigen::Index bi = std::min(kBlock, A.rows() - i0);
        for (Eigen::Index j0 = 0; j0 < B.rows(); j0 += kBlock) {
            const Eigen::Index bj = std::min(kBlock, B.rows() - j0);
            Mat G = A.middleRows(i0, bi) * B.middleRows(j0, bj).transpose();
            for (Eigen::Index i = 0; i < bi; ++i) {
                for (Eigen::Index j = 0; j < bj; ++j) {
                    if (skip_diag && i0 + i == j0 + j) continue;
                    const double arg = use_dot
                                           ? G(i, j)
                                           : sqA(i0 + i) + sqB(j0 + j) - 2.0 * G(i, j);
                    total += kernel_scalar(spec, std::max(arg, use_dot ? arg : 0.0), A.cols());
                }
            }
        }
    }
    return total;
}

}  // namespace

void KernelSpec::validate() const {
    if (family != KernelFamily::Poly3) {
        if (params.empty()) throw std::invalid_argument("KernelSpec: empty parameter list");
        for (double p : params)
            if (p <= 0.0) throw std::invalid_argument("KernelSpec: parameters must be positive");
    }
}

EcfValue ecf(const Mat& X, const Mat& T) {
    check_dims(X, T, "ecf");
    const Mat P = X * T.transpose();  // n x k phase matrix
    EcfValue out;
    out.re = P.array().cos().colwise().mean().transpose();
    out.im = P.array().sin().colwise().mean().transpose();
    return out;
}

double ecfd(const Mat& X, const Mat& Y, const Mat& T) {
    check_dims(X, Y, "ecfd");
    const EcfValue fx = ecf(X, T);
    const EcfValue fy = ecf(Y, T);
    return ((fx.re - fy.re).array().square() + (fx.im - fy.im).array().square()).mean();
}

double ecfd_smoothed(const Mat& X, const Mat& Y, const Mat& T, double smoothing_scale) {
    check_dims(X, Y, "ecfd_smoothed");
    if (smoothing_scale <= 0.0)
        throw std::invalid_argument("ecfd_smoothed: smoothing_scale must be positive");
    const double inv2s2 = 1.0 / (2.0 * smoothing_scale * smoothing_scale);
    auto damped_ecf = [&](const Mat& S) {
        const Vec w = (-S.rowwise().squaredNorm() * inv2s2).array().exp();
        const Mat P = S * T.transpose();
        const double inv_n = 1.0 / static_cast<double>(S.rows());
        EcfValue v;
        v.re = (P.array().cos().colwise() * w.array()).colwise().sum().transpose() * inv_n;
        v.im = (P.array().sin().colwise() * w.array()).colwise().sum().transpose() * inv_n;
        return v;
    };
    const EcfValue fx = damped_ecf(X);
    const EcfValue fy = damped_ecf(Y);
    return ((fx.re - fy.re).array().square() + (fx.im - fy.im).array().square()).mean();
}

double mmd2(const Mat& X, const Mat& Y, const KernelSpec& kernel, bool biased) {
    check_dims(X, Y, "mmd2");
    kernel.validate();
    const auto n = static_cast<double>(X.rows());
    const auto ny = static_cast<double>(Y.rows());
    if (!biased && (X.rows() < 2 || Y.rows() < 2))
        throw std::invalid_argument("mmd2: unbiased estimator needs at least 2 samples per set");
    double sxx, syy;
    if (biased) {
        sxx = kernel_pair_sum(X, X, kernel, false) / (n * n);
        syy = kernel_pair_sum(Y, Y, kernel, false) / (ny * ny);
    } else {
        sxx = kernel_pair_sum(X, X, kernel, true) / (n * (n - 1.0));
        syy = kernel_pair_sum(Y, Y, kernel, true) / (ny * (ny - 1.0));
    }
    const double sxy = kernel_pair_sum(X, Y, kernel, false) / (n * ny);
    return sxx + syy - 2.0 * sxy;
}

double mmd2_rbf_dual(const Mat& X, const Mat& Y, const Vec& sigma, bool biased) {
    if (sigma.size() != X.cols())
        throw std::invalid_argument("mmd2_rbf_dual: sigma length " + std::to_string(sigma.size()) +
                                    " vs dimension " + std::to_string(X.cols()));
    // Scaling coordinates by sigma turns the anisotropic dual kernel into a
    // unit-scale RBF.
    const Mat Xs = X.array().rowwise() * sigma.transpose().array();
    const Mat Ys = Y.array().rowwise() * sigma.transpose().array();
    return mmd2(Xs, Ys, KernelSpec{KernelFamily::RBF, {1.0}}, biased);
}

McEstimate cfd_mc_with_se(const Mat& X, const Mat& Y, const WeightingDistribution& dist, Rng& rng,
                          Eigen::Index k, int reps) {
    if (reps < 1) throw std::invalid_argument("cfd_mc: reps must be >= 1");
    double sum = 0.0, sumsq = 0.0;
    for (int r = 0; r < reps; ++r) {
        const Mat T = dist.sample(rng, k);
        const double v = ecfd(X, Y, T);
        sum += v;
        sumsq += v * v;
    }
    McEstimate e;
    e.reps = reps;
    e.value = sum / reps;
    if (reps > 1) {
        const double var = (sumsq - sum * sum / reps) / (reps - 1.0);
        e.stderr_ = std::sqrt(std::max(var, 0.0) / reps);
    }
    return e;
}

double cfd_mc(const Mat& X, const Mat& Y, const WeightingDistribution& dist, Rng& rng,
              Eigen::Index k, int reps) {
    return cfd_mc_with_se(X, Y, dist, rng, k, reps).value;
}

// ---- tape versions ----

namespace {

Tensor row_sumsq(const Tensor& X) {
    Tensor ones = X.tape()->constant(Mat::Ones(X.cols(), 1));
    return matmul(square(X), ones);  // n x 1
}

Tensor cube(const Tensor& a) { return mul(mul(a, a), a); }

// n x n' matrix of squared distances between rows of X and Y.
Tensor pairwise_sqdist(const Tensor& X, const Tensor& Y) {
    Tape* tape = X.tape();
    Tensor sx = row_sumsq(X);
    Tensor sy = row_sumsq(Y);
    Tensor a = matmul(sx, tape->constant(Mat::Ones(1, Y.rows())));
    Tensor b = matmul(tape->constant(Mat::Ones(X.rows(), 1)), transpose(sy));
    return add(add(a, b), scale(matmul(X, transpose(Y)), -2.0));
}

Tensor kernel_matrix(const Tensor& X, const Tensor& Y, const KernelSpec& spec) {
    if (spec.family == KernelFamily::Poly3) {
        Tensor dot = matmul(X, transpose(Y));
        return cube(add_const(scale(dot, 1.0 / static_cast<double>(X.cols())), 1.0));
    }
    Tensor d2 = pairwise_sqdist(X, Y);
    Tensor acc;
    for (double p : spec.params) {
        // RQ as exp(-alpha * log1p(d2 / (2 alpha))) to stay within tape ops.
        Tensor term = spec.family == KernelFamily::RBF
                          ? exp(scale(d2, -0.5 * p * p))
                          : exp(scale(log(add_const(scale(d2, 1.0 / (2.0 * p)), 1.0)), -p));
        acc = acc.valid() ? add(acc, term) : term;
    }
    return acc;
}

}  // namespace

EcfTensors ecf_t(const Tensor& X, const Tensor& T) {
    if (X.cols() != T.cols())
        throw std::invalid_argument("ecf: dimension mismatch " + X.shape_str() + " vs " +
                                    T.shape_str());
    Tensor proj = matmul(X, transpose(T));  // n x k
    return EcfTensors{col_mean(cos(proj)), col_mean(sin(proj))};
}

Tensor ecfd_t(const Tensor& X, const Tensor& Y, const Tensor& T) {
    EcfTensors fx = ecf_t(X, T);
    EcfTensors fy = ecf_t(Y, T);
    return mean(add(square(sub(fx.re, fy.re)), square(sub(fx.im, fy.im))));
}

Tensor ecfd_smoothed_t(const Tensor& X, const Tensor& Y, const Tensor& T,
                       double smoothing_scale) {
    if (smoothing_scale <= 0.0)
        throw std::invalid_argument("ecfd_smoothed: smoothing_scale must be positive");
    const double c = -1.0 / (2.0 * smoothing_scale * smoothing_scale);
    auto damped = [&](const Tensor& S) {
        Tensor w = exp(scale(row_sumsq(S), c));  // n x 1
        Tensor proj = matmul(S, transpose(T));
        const double inv_n = 1.0 / static_cast<double>(S.rows());
        return EcfTensors{scale(matmul(transpose(w), cos(proj)), inv_n),
                          scale(matmul(transpose(w), sin(proj)), inv_n)};
    };
    EcfTensors fx = damped(X);
    EcfTensors fy = damped(Y);
    return mean(add(square(sub(fx.re, fy.re)), square(sub(fx.im, fy.im))));
}

Tensor ecfd_normalized_t(const Tensor& X, const Tensor& Y, const Tensor& T,
                         const Tensor& log_sigma) {
    return div_by(ecfd_t(X, Y, T), norm_l2(exp(log_sigma)));
}

Tensor mmd2_t(const Tensor& X, const Tensor& Y, const KernelSpec& kernel, bool biased) {
    kernel.validate();
    if (X.cols() != Y.cols())
        throw std::invalid_argument("mmd2: dimension mismatch " + X.shape_str() + " vs " +
                                    Y.shape_str());
    const auto n = static_cast<double>(X.rows());
    const auto ny = static_cast<double>(Y.rows());
    if (!biased && (n < 2 || ny < 2))
        throw std::invalid_argument("mmd2: unbiased estimator needs at least 2 samples per set");
    Tensor kxx = kernel_matrix(X, X, kernel);
    Tensor kyy = kernel_matrix(Y, Y, kernel);
    Tensor kxy = kernel_matrix(X, Y, kernel);
    auto within = [&](const Tensor& K, const Tensor& S, double cnt) {
        if (biased) return mean(K);
        // Unbiased: drop the diagonal. For RBF/RQ the diagonal is the mixture
        // size; for Poly3 it depends on the sample norms.
        Tensor diag_sum;
        if (kernel.family == KernelFamily::Poly3) {
            Tensor sq = row_sumsq(S);
            diag_sum = sum(cube(add_const(scale(sq, 1.0 / static_cast<double>(S.cols())), 1.0)));
        } else {
            diag_sum = S.tape()->scalar_const(cnt * static_cast<double>(kernel.params.size()));
        }
        return scale(sub(sum(K), diag_sum), 1.0 / (cnt * (cnt - 1.0)));
    };
    Tensor res = add(within(kxx, X, n), within(kyy, Y, ny));
    return sub(res, scale(mean(kxy), 2.0));
}

}  // namespace cfgan
