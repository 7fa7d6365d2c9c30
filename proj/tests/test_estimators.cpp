#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "cfgan/estimators.hpp"

using namespace cfgan;

namespace {

// Independent oracle: ECF via std::complex, no shared code with the library.
std::complex<double> ecf_oracle(const Mat& X, const Vec& t) {
    std::complex<double> acc{0.0, 0.0};
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double phase = X.row(i).dot(t.transpose());
        acc += std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return acc / static_cast<double>(X.rows());
}

double ecfd_oracle(const Mat& X, const Mat& Y, const Mat& T) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < T.rows(); ++j) {
        const Vec t = T.row(j).transpose();
        acc += std::norm(ecf_oracle(X, t) - ecf_oracle(Y, t));
    }
    return acc / static_cast<double>(T.rows());
}

double ecfd_smoothed_oracle(const Mat& X, const Mat& Y, const Mat& T, double s) {
    auto damped = [s](const Mat& S, const Vec& t) {
        std::complex<double> acc{0.0, 0.0};
        for (Eigen::Index i = 0; i < S.rows(); ++i) {
            const double w = std::exp(-S.row(i).squaredNorm() / (2.0 * s * s));
            const double phase = S.row(i).dot(t.transpose());
            acc += w * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        return acc / static_cast<double>(S.rows());
    };
    double acc = 0.0;
    for (Eigen::Index j = 0; j < T.rows(); ++j) {
        const Vec t = T.row(j).transpose();
        acc += std::norm(damped(X, t) - damped(Y, t));
    }
    return acc / static_cast<double>(T.rows());
}

double mmd2_oracle(const Mat& X, const Mat& Y, const KernelSpec& spec, bool biased) {
    auto kappa = [&](const Vec& a, const Vec& b) {
        double v = 0.0;
        if (spec.family == KernelFamily::Poly3) {
            const double base = a.dot(b) / static_cast<double>(a.size()) + 1.0;
            return base * base * base;
        }
        const double d2 = (a - b).squaredNorm();
        for (double p : spec.params)
            v += spec.family == KernelFamily::RBF ? std::exp(-0.5 * p * p * d2)
                                                  : std::pow(1.0 + d2 / (2.0 * p), -p);
        return v;
    };
    const double n = X.rows(), m = Y.rows();
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.rows(); ++j)
            if (biased || i != j) sxx += kappa(X.row(i), X.row(j));
    for (Eigen::Index i = 0; i < Y.rows(); ++i)
        for (Eigen::Index j = 0; j < Y.rows(); ++j)
            if (biased || i != j) syy += kappa(Y.row(i), Y.row(j));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < Y.rows(); ++j) sxy += kappa(X.row(i), Y.row(j));
    sxx /= biased ? n * n : n * (n - 1);
    syy /= biased ? m * m : m * (m - 1);
    return sxx + syy - 2.0 * sxy / (n * m);
}

}  // namespace

TEST_CASE("ecf of a single point is (cos<t,a>, sin<t,a>)") {
    Mat X(1, 2);
    X << 0.7, -1.2;
    Mat T(1, 2);
    T << 2.0, 0.5;
    const EcfValue v = ecf(X, T);
    const double phase = 0.7 * 2.0 + (-1.2) * 0.5;
    CHECK(v.re(0) == doctest::Approx(std::cos(phase)).epsilon(1e-14));
    CHECK(v.im(0) == doctest::Approx(std::sin(phase)).epsilon(1e-14));
}

TEST_CASE("ecf at t = 0 is (1, 0)") {
    Rng rng(1);
    const Mat X = rng.normal_matrix(50, 3);
    const EcfValue v = ecf(X, Mat::Zero(1, 3));
    CHECK(v.re(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(v.im(0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("ecf of 1e6 standard normals matches exp(-t^2/2)") {
    Rng rng(2);
    const Mat X = rng.normal_matrix(1000000, 1);
    const EcfValue v = ecf(X, Mat::Ones(1, 1));
    CHECK(std::abs(v.re(0) - std::exp(-0.5)) < 0.005);
    CHECK(std::abs(v.im(0)) < 0.005);
}

TEST_CASE("|ecf| is at most 1") {
    Rng rng(3);
    const Mat X = rng.normal_matrix(37, 2) * 3.0;
    const Mat T = rng.normal_matrix(11, 2);
    const EcfValue v = ecf(X, T);
    for (Eigen::Index j = 0; j < 11; ++j)
        CHECK(v.re(j) * v.re(j) + v.im(j) * v.im(j) <= 1.0 + 1e-12);
}

TEST_CASE("ecfd of identical samples is exactly zero") {
    Rng rng(4);
    const Mat X = rng.normal_matrix(20, 2);
    const Mat T = rng.normal_matrix(5, 2);
    CHECK(ecfd(X, X, T) == 0.0);
}

TEST_CASE("ecfd of delta_0 vs delta_pi at t = 1 is 4") {
    Mat X = Mat::Zero(1, 1);
    Mat Y = Mat::Constant(1, 1, std::numbers::pi);
    CHECK(ecfd(X, Y, Mat::Ones(1, 1)) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("ecfd matches the complex-arithmetic oracle on the two-point case") {
    Mat X(2, 1), Y(2, 1);
    X << 0, 2;
    Y << 1, 3;
    const Mat T = Mat::Ones(1, 1);
    CHECK(ecfd(X, Y, T) == doctest::Approx(ecfd_oracle(X, Y, T)).epsilon(1e-12));
}

TEST_CASE("randomized estimator vs brute-force oracles") {
    Rng rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::Index n = 1 + rng.index(8), ny = 1 + rng.index(8);
        const Eigen::Index m = 1 + rng.index(3), k = 1 + rng.index(4);
        const Mat X = rng.normal_matrix(n, m);
        const Mat Y = rng.normal_matrix(ny, m);
        const Mat T = rng.normal_matrix(k, m) * 1.5;
        CHECK(ecfd(X, Y, T) == doctest::Approx(ecfd_oracle(X, Y, T)).epsilon(1e-11));
        CHECK(ecfd_smoothed(X, Y, T, 1.3) ==
              doctest::Approx(ecfd_smoothed_oracle(X, Y, T, 1.3)).epsilon(1e-11));
        for (auto spec : {KernelSpec::rbf_mixture(), KernelSpec::rq_mixture(), KernelSpec::poly3()}) {
            CHECK(mmd2(X, Y, spec, true) ==
                  doctest::Approx(mmd2_oracle(X, Y, spec, true)).epsilon(1e-11));
            if (n >= 2 && ny >= 2)
                CHECK(mmd2(X, Y, spec, false) ==
                      doctest::Approx(mmd2_oracle(X, Y, spec, false)).epsilon(1e-11));
        }
    }
}

TEST_CASE("ecfd symmetry, non-negativity, and upper bound 4") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat X = rng.normal_matrix(6, 2) * 4.0;
        const Mat Y = rng.normal_matrix(9, 2) * 4.0;
        const Mat T = rng.normal_matrix(3, 2) * 2.0;
        const double d = ecfd(X, Y, T);
        CHECK(d >= 0.0);
        CHECK(d <= 4.0);
        CHECK(d == doctest::Approx(ecfd(Y, X, T)).epsilon(1e-14));
    }
}

TEST_CASE("chord bound |e^{ia} - e^{ib}| <= |a - b|") {
    Rng rng(12);
    for (int i = 0; i < 1000; ++i) {
        const double a = rng.uniform(-10, 10), b = rng.uniform(-10, 10);
        const double chord = std::hypot(std::cos(a) - std::cos(b), std::sin(a) - std::sin(b));
        CHECK(chord <= std::abs(a - b) + 1e-12);
    }
}

TEST_CASE("smoothed ecfd recovers ecfd as the smoothing scale grows") {
    Rng rng(5);
    const Mat X = rng.normal_matrix(12, 2);
    const Mat Y = rng.normal_matrix(15, 2);
    const Mat T = rng.normal_matrix(4, 2);
    CHECK(std::abs(ecfd_smoothed(X, Y, T, 1e6) - ecfd(X, Y, T)) < 1e-6);
    CHECK(ecfd_smoothed(X, X, T, 2.0) == 0.0);
    CHECK_THROWS_AS(ecfd_smoothed(X, Y, T, 0.0), std::invalid_argument);
}

TEST_CASE("normalized ecfd divides by ||sigma||") {
    Rng rng(6);
    const Mat X = rng.normal_matrix(10, 3);
    const Mat Y = rng.normal_matrix(10, 3);
    const Mat eps = rng.normal_matrix(4, 3);
    Tape tape;
    Tensor ls = tape.leaf(Mat::Zero(1, 3));  // sigma = 1
    FrequencyBatch fb = frequencies_from_base(ls, eps);
    const double plain = ecfd_t(tape.constant(X), tape.constant(Y), fb.t).value()(0, 0);
    const double normed =
        ecfd_normalized_t(tape.constant(X), tape.constant(Y), fb.t, ls).value()(0, 0);
    CHECK(normed == doctest::Approx(plain / std::sqrt(3.0)).epsilon(1e-12));
    // doubling sigma with frozen eps: T doubles and the divisor doubles
    Tape tape2;
    Tensor ls2 = tape2.leaf(Mat::Constant(1, 3, std::log(2.0)));
    FrequencyBatch fb2 = frequencies_from_base(ls2, eps);
    const double normed2 =
        ecfd_normalized_t(tape2.constant(X), tape2.constant(Y), fb2.t, ls2).value()(0, 0);
    CHECK(normed2 == doctest::Approx(ecfd(X, Y, 2.0 * eps) / (2.0 * std::sqrt(3.0))).epsilon(1e-12));
}

TEST_CASE("mmd2 of identical samples is zero (biased)") {
    Rng rng(8);
    const Mat X = rng.normal_matrix(10, 2);
    CHECK(mmd2(X, X, KernelSpec::rbf_mixture(), true) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("single RBF closed form on {0} vs {1}") {
    Mat X = Mat::Zero(1, 1), Y = Mat::Ones(1, 1);
    const double v = mmd2(X, Y, KernelSpec{KernelFamily::RBF, {1.0}}, true);
    CHECK(v == doctest::Approx(2.0 - 2.0 * std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("poly3 kernel at the origin is 1") {
    Mat X = Mat::Zero(1, 3), Y = Mat::Zero(1, 3);
    // kappa(0,0) = 1 for all three terms, so biased MMD^2 = 1 + 1 - 2 = 0
    CHECK(mmd2(X, Y, KernelSpec::poly3(), true) == doctest::Approx(0.0));
    const double self = mmd2_oracle(X, X, KernelSpec::poly3(), true);
    CHECK(self == doctest::Approx(0.0));
}

TEST_CASE("unbiased mmd2 contract violations") {
    Mat X = Mat::Zero(1, 1), Y = Mat::Ones(3, 1);
    CHECK_THROWS_AS(mmd2(X, Y, KernelSpec::rbf_mixture(), false), std::invalid_argument);
    CHECK_THROWS_AS(ecfd(X, Mat::Zero(2, 2), Mat::Zero(1, 1)), std::invalid_argument);
}

TEST_CASE("cfd_mc matches the analytic CF for one-point distributions") {
    // X = {0}, Y = {a}: CFD = 2 - 2 E[cos(t a)] = 2 - 2 exp(-sigma^2 a^2 / 2)
    const double a = 0.8, sigma = 1.3;
    Mat X = Mat::Zero(1, 1), Y = Mat::Constant(1, 1, a);
    WeightingDistribution dist(WeightFamily::Gaussian, Vec::Constant(1, sigma));
    Rng rng(21);
    const McEstimate est = cfd_mc_with_se(X, Y, dist, rng, 50, 2000);
    const double oracle = 2.0 - 2.0 * std::exp(-0.5 * sigma * sigma * a * a);
    CHECK(std::abs(est.value - oracle) < 3.0 * est.stderr_ + 1e-9);
}

TEST_CASE("cfd_mc equals the dual-kernel mmd2 within Monte-Carlo error") {
    Rng rng(31);
    const Mat X = rng.normal_matrix(40, 2);
    Mat Y = rng.normal_matrix(40, 2);
    Y.array() += 0.6;
    Vec sigma(2);
    sigma << 0.8, 1.7;
    WeightingDistribution dist(WeightFamily::Gaussian, sigma);
    const McEstimate est = cfd_mc_with_se(X, Y, dist, rng, 100, 500);
    const double dual = mmd2_rbf_dual(X, Y, sigma, true);
    CHECK(std::abs(est.value - dual) <= 3.0 * est.stderr_);
}

TEST_CASE("tape estimators agree with the plain path") {
    Rng rng(14);
    const Mat X = rng.normal_matrix(9, 3);
    const Mat Y = rng.normal_matrix(7, 3);
    const Mat T = rng.normal_matrix(4, 3);
    Tape tape;
    Tensor tx = tape.constant(X), ty = tape.constant(Y), tt = tape.constant(T);
    CHECK(ecfd_t(tx, ty, tt).value()(0, 0) == doctest::Approx(ecfd(X, Y, T)).epsilon(1e-13));
    CHECK(ecfd_smoothed_t(tx, ty, tt, 0.9).value()(0, 0) ==
          doctest::Approx(ecfd_smoothed(X, Y, T, 0.9)).epsilon(1e-13));
    for (auto spec : {KernelSpec::rbf_mixture(), KernelSpec::rq_mixture(), KernelSpec::poly3()}) {
        CHECK(mmd2_t(tx, ty, spec, true).value()(0, 0) ==
              doctest::Approx(mmd2(X, Y, spec, true)).epsilon(1e-12));
        CHECK(mmd2_t(tx, ty, spec, false).value()(0, 0) ==
              doctest::Approx(mmd2(X, Y, spec, false)).epsilon(1e-12));
    }
}

TEST_CASE("ecfd gradient in the samples matches finite differences") {
    Rng rng(15);
    const Mat X0 = rng.normal_matrix(5, 2);
    const Mat Y = rng.normal_matrix(6, 2);
    const Mat T = rng.normal_matrix(3, 2);
    Tape tape;
    Tensor x = tape.leaf(X0, true);
    tape.backward(ecfd_t(x, tape.constant(Y), tape.constant(T)));
    const Mat g = x.grad();
    for (Eigen::Index i = 0; i < X0.rows(); ++i)
        for (Eigen::Index j = 0; j < X0.cols(); ++j) {
            Mat xp = X0, xm = X0;
            xp(i, j) += 1e-5;
            xm(i, j) -= 1e-5;
            const double num = (ecfd(xp, Y, T) - ecfd(xm, Y, T)) / 2e-5;
            CHECK(std::abs(g(i, j) - num) <= 1e-4 * (1.0 + std::abs(num)));
        }
}
