#include <doctest.h>

#include <cmath>

#include "cfgan/rng.hpp"
#include "cfgan/tape.hpp"

using namespace cfgan;

namespace {

// central finite difference of a scalar-valued function of one leaf entry
template <typename F>
double fd(F&& f, Mat x, Eigen::Index i, Eigen::Index j, double h = 1e-5) {
    Mat xp = x, xm = x;
    xp(i, j) += h;
    xm(i, j) -= h;
    return (f(xp) - f(xm)) / (2.0 * h);
}

}  // namespace

TEST_CASE("matmul identity") {
    Tape tape;
    Mat a(2, 2);
    a << 1, 2, 3, 4;
    Tensor x = tape.leaf(a);
    Tensor y = matmul(x, tape.constant(Mat::Identity(2, 2)));
    CHECK(y.value().isApprox(a));
}

TEST_CASE("elu closed form") {
    Tape tape;
    Tensor x = tape.leaf(Mat::Constant(1, 1, -1.0));
    CHECK(elu(x).value()(0, 0) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-12));
}

TEST_CASE("product rule: d/dx sin(x) cos(x) at 0.3 is cos(0.6)") {
    Tape tape;
    Tensor x = tape.leaf(Mat::Constant(1, 1, 0.3), true);
    Tensor loss = mul(sin(x), cos(x));
    tape.backward(loss);
    CHECK(x.grad()(0, 0) == doctest::Approx(std::cos(0.6)).epsilon(1e-9));
    // and against the finite-difference oracle
    auto f = [](const Mat& v) { return std::sin(v(0, 0)) * std::cos(v(0, 0)); };
    CHECK(x.grad()(0, 0) == doctest::Approx(fd(f, Mat::Constant(1, 1, 0.3), 0, 0)).epsilon(1e-6));
}

TEST_CASE("backward of mean(x^2)") {
    Tape tape;
    Mat v(1, 3);
    v << 1, 2, 3;
    Tensor x = tape.leaf(v, true);
    tape.backward(mean(square(x)));
    Mat expected(1, 3);
    expected << 2.0 / 3, 4.0 / 3, 2.0;
    CHECK(x.grad().isApprox(expected, 1e-12));
}

TEST_CASE("constant loss gives zero grads") {
    Tape tape;
    Tensor x = tape.leaf(Mat::Random(2, 2), true);
    Tensor c = tape.constant(Mat::Constant(1, 1, 5.0));
    tape.backward(c);
    CHECK(x.grad().isZero());
}

TEST_CASE("grads accumulate additively across backward calls") {
    Tape tape;
    Tensor x = tape.leaf(Mat::Constant(1, 1, 2.0), true);
    Tensor loss = square(x);
    tape.backward(loss);
    const double g1 = x.grad()(0, 0);
    tape.backward(loss);
    CHECK(x.grad()(0, 0) == doctest::Approx(2.0 * g1));
    x.zero_grad();
    tape.backward(loss);
    CHECK(x.grad()(0, 0) == doctest::Approx(g1));
}

TEST_CASE("non-scalar loss rejected") {
    Tape tape;
    Tensor x = tape.leaf(Mat::Zero(2, 2), true);
    CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
}

TEST_CASE("shape mismatch names both shapes") {
    Tape tape;
    Tensor a = tape.leaf(Mat::Zero(2, 3));
    Tensor b = tape.leaf(Mat::Zero(3, 3));
    try {
        add(a, b);
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
        CHECK(msg.find("3x3") != std::string::npos);
    }
}

TEST_CASE("fan-out accumulates gradient") {
    Tape tape;
    Tensor x = tape.leaf(Mat::Constant(1, 1, 1.5), true);
    // f = x^2 + 3x, f' = 2x + 3
    tape.backward(add(square(x), scale(x, 3.0)));
    CHECK(x.grad()(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("finite-difference sweep over every op") {
    Rng rng(42);
    const double tol = 1e-4;
    auto check_grad = [&](auto&& build, const Mat& x0) {
        Tape tape;
        Tensor x = tape.leaf(x0, true);
        Tensor loss = sum(build(tape, x));
        tape.backward(loss);
        const Mat g = x.grad();
        auto value_at = [&](const Mat& v) {
            Tape t2;
            Tensor xx = t2.leaf(v);
            return sum(build(t2, xx)).value()(0, 0);
        };
        for (Eigen::Index i = 0; i < x0.rows(); ++i)
            for (Eigen::Index j = 0; j < x0.cols(); ++j) {
                const double num = fd(value_at, x0, i, j);
                CHECK(std::abs(g(i, j) - num) <= tol * (1.0 + std::abs(num)));
            }
    };
    auto rand_mat = [&](Eigen::Index r, Eigen::Index c, double lo = -2.0, double hi = 2.0) {
        Mat m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) {
                double v;
                do {
                    v = rng.uniform(lo, hi);
                } while (std::abs(v) < 1e-3);  // keep clear of relu/elu kinks
                m(i, j) = v;
            }
        return m;
    };

    Mat x0 = rand_mat(3, 2);
    Mat other = rand_mat(3, 2);
    Mat sq = rand_mat(2, 2);
    Mat pos = rand_mat(3, 2, 0.1, 2.0);
    check_grad([&](Tape& t, Tensor x) { return add(x, t.constant(other)); }, x0);
    check_grad([&](Tape& t, Tensor x) { return sub(t.constant(other), x); }, x0);
    check_grad([&](Tape& t, Tensor x) { return mul(x, t.constant(other)); }, x0);
    check_grad([&](Tape& t, Tensor x) { return matmul(x, t.constant(sq.transpose())); }, x0);
    check_grad([&](Tape& t, Tensor x) { return matmul(t.constant(sq), transpose(x)); }, x0);
    check_grad([&](Tape&, Tensor x) { return scale(x, -1.7); }, x0);
    check_grad([&](Tape&, Tensor x) { return add_const(x, 0.3); }, x0);
    check_grad([&](Tape&, Tensor x) { return mean(x); }, x0);
    check_grad([&](Tape&, Tensor x) { return neg(x); }, x0);
    check_grad([&](Tape&, Tensor x) { return square(x); }, x0);
    check_grad([&](Tape&, Tensor x) { return sqrt(x); }, pos);
    check_grad([&](Tape&, Tensor x) { return exp(x); }, x0);
    check_grad([&](Tape&, Tensor x) { return log(x); }, pos);
    check_grad([&](Tape&, Tensor x) { return tanh(x); }, x0);
    check_grad([&](Tape&, Tensor x) { return sin(x); }, x0);
    check_grad([&](Tape&, Tensor x) { return cos(x); }, x0);
    check_grad([&](Tape&, Tensor x) { return relu(x); }, x0);
    check_grad([&](Tape&, Tensor x) { return leaky_relu(x, 0.2); }, x0);
    check_grad([&](Tape&, Tensor x) { return elu(x); }, x0);
    check_grad([&](Tape&, Tensor x) { return min_scalar(x, 0.5); }, x0);
    check_grad([&](Tape&, Tensor x) { return norm_l2(x); }, pos);
    check_grad([&](Tape&, Tensor x) { return col_mean(x); }, x0);
    check_grad([&](Tape& t, Tensor x) { return scale_by(t.constant(other), sum(x)); }, x0);
    check_grad([&](Tape& t, Tensor x) { return div_by(t.constant(other), norm_l2(x)); }, pos);
    check_grad([&](Tape& t, Tensor x) { return concat_cols(x, t.constant(other)); }, x0);

    Mat row = rand_mat(1, 4);
    check_grad([&](Tape&, Tensor x) { return broadcast_row(x, 5); }, row);
}

TEST_CASE("replay of a seeded computation is bit-identical") {
    auto run = [] {
        Rng rng(7);
        Tape tape;
        Tensor x = tape.leaf(rng.normal_matrix(4, 3), true);
        Tensor loss = mean(square(tanh(matmul(x, transpose(x)))));
        tape.backward(loss);
        return std::pair{loss.value()(0, 0), Mat(x.grad())};
    };
    const auto [v1, g1] = run();
    const auto [v2, g2] = run();
    CHECK(v1 == v2);
    CHECK(g1 == g2);
}

TEST_CASE("backward grads are finite for finite inputs") {
    Rng rng(3);
    Tape tape;
    Tensor x = tape.leaf(rng.normal_matrix(5, 4), true);
    Tensor h = elu(matmul(x, tape.constant(rng.normal_matrix(4, 3))));
    tape.backward(mean(square(h)));
    CHECK(x.grad().allFinite());
}
