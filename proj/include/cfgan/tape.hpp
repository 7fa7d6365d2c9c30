#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfgan {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

class Tape;

namespace detail {

struct Node {
    Mat value;
    Mat grad;  // empty until first accumulation
    bool requires_grad = false;
    bool is_leaf = true;
    std::size_t idx = 0;
    Tape* tape = nullptr;
    // propagates this->grad into the parents' grads
    std::function<void(const Node&)> backward;

    Mat& ensure_grad() {
        if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
        return grad;
    }
};

}  // namespace detail

/// Handle to a matrix-valued node on a Tape. Cheap to copy.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

    bool valid() const { return node_ != nullptr; }
    const Mat& value() const { return node_->value; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }

    /// Gradient accumulated by the last backward() pass (zero matrix if untouched).
    Mat grad() const {
        if (node_->grad.size() == 0) return Mat::Zero(rows(), cols());
        return node_->grad;
    }
    bool requires_grad() const { return node_->requires_grad; }
    void zero_grad() { node_->grad.setZero(); }

    double scalar() const {
        if (rows() != 1 || cols() != 1)
            throw std::invalid_argument("Tensor::scalar: shape is " + shape_str() + ", expected 1x1");
        return node_->value(0, 0);
    }
    std::string shape_str() const {
        return std::to_string(rows()) + "x" + std::to_string(cols());
    }

    detail::Node* node() const { return node_.get(); }
    Tape* tape() const { return node_->tape; }

private:
    std::shared_ptr<detail::Node> node_;
};

/// Record-replay reverse-mode differentiation over dense real matrices.
/// A Tape and its Tensors belong to one thread; distinct tapes are independent.
class Tape {
public:
    /// New leaf holding a copy of v. Leaves keep their grads across backward()
    /// calls (accumulation is additive); call zero_grad() explicitly.
    Tensor leaf(Mat v, bool requires_grad = false) {
        auto n = std::make_shared<detail::Node>();
        n->value = std::move(v);
        n->requires_grad = requires_grad;
        n->is_leaf = true;
        return record(std::move(n));
    }
    Tensor constant(Mat v) { return leaf(std::move(v), false); }
    Tensor scalar_const(double x) { return constant(Mat::Constant(1, 1, x)); }

    Tensor record(std::shared_ptr<detail::Node> n) {
        n->tape = this;
        n->idx = nodes_.size();
        nodes_.push_back(n);
        return Tensor(std::move(n));
    }

    /// Reverse replay from a scalar loss. Leaf grads accumulate (+=);
    /// intermediate grads are reset on every call.
    void backward(const Tensor& loss) {
        if (loss.rows() != 1 || loss.cols() != 1)
            throw std::invalid_argument("backward: loss must be 1x1, got " + loss.shape_str());
        if (loss.tape() != this)
            throw std::invalid_argument("backward: loss recorded on a different tape");
        const std::size_t last = loss.node()->idx;
        for (std::size_t i = 0; i <= last; ++i) {
            auto& n = *nodes_[i];
            if (!n.is_leaf && n.grad.size() != 0) n.grad.setZero();
        }
        loss.node()->ensure_grad()(0, 0) += 1.0;
        for (std::size_t i = last + 1; i-- > 0;) {
            auto& n = *nodes_[i];
            if (n.is_leaf || !n.requires_grad || !n.backward) continue;
            if (n.grad.size() == 0) continue;  // not reached from the loss
            n.backward(n);
        }
    }

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    std::vector<std::shared_ptr<detail::Node>> nodes_;
};

namespace detail {

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    if (a.tape() != b.tape())
        throw std::invalid_argument(std::string(op) + ": operands on different tapes");
}

inline void accum(Node* p, const Mat& g) {
    if (p->requires_grad) p->ensure_grad() += g;
}

// Builds the output node for an op with one or two parents.
inline Tensor make_node(Tape* tape, Mat value, std::vector<Node*> parents,
                        std::function<void(const Node&)> bw) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->is_leaf = false;
    for (auto* p : parents)
        if (p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->backward = std::move(bw);
    return tape->record(std::move(n));
}

}  // namespace detail

// ---- elementwise binary ----

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::check_same_shape(a, b, "add");
    detail::Node *pa = a.node(), *pb = b.node();
    return detail::make_node(a.tape(), a.value() + b.value(), {pa, pb},
                             [pa, pb](const detail::Node& n) {
                                 detail::accum(pa, n.grad);
                                 detail::accum(pb, n.grad);
                             });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::check_same_shape(a, b, "sub");
    detail::Node *pa = a.node(), *pb = b.node();
    return detail::make_node(a.tape(), a.value() - b.value(), {pa, pb},
                             [pa, pb](const detail::Node& n) {
                                 detail::accum(pa, n.grad);
                                 detail::accum(pb, -n.grad);
                             });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::check_same_shape(a, b, "mul");
    detail::Node *pa = a.node(), *pb = b.node();
    Mat av = a.value(), bv = b.value();
    return detail::make_node(a.tape(), av.cwiseProduct(bv), {pa, pb},
                             [pa, pb, av, bv](const detail::Node& n) {
                                 detail::accum(pa, n.grad.cwiseProduct(bv));
                                 detail::accum(pb, n.grad.cwiseProduct(av));
                             });
}

// ---- matrix ----

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: shape mismatch " + a.shape_str() + " vs " +
                                    b.shape_str());
    if (a.tape() != b.tape()) throw std::invalid_argument("matmul: operands on different tapes");
    detail::Node *pa = a.node(), *pb = b.node();
    Mat av = a.value(), bv = b.value();
    return detail::make_node(a.tape(), av * bv, {pa, pb},
                             [pa, pb, av, bv](const detail::Node& n) {
                                 detail::accum(pa, n.grad * bv.transpose());
                                 detail::accum(pb, av.transpose() * n.grad);
                             });
}

inline Tensor transpose(const Tensor& a) {
    detail::Node* pa = a.node();
    return detail::make_node(a.tape(), a.value().transpose(), {pa},
                             [pa](const detail::Node& n) { detail::accum(pa, n.grad.transpose()); });
}

/// Replicates a 1xC row n times.
inline Tensor broadcast_row(const Tensor& a, Eigen::Index n) {
    if (a.rows() != 1)
        throw std::invalid_argument("broadcast_row: expected 1xC input, got " + a.shape_str());
    detail::Node* pa = a.node();
    Mat out = a.value().replicate(n, 1);
    return detail::make_node(a.tape(), std::move(out), {pa}, [pa](const detail::Node& n) {
        detail::accum(pa, n.grad.colwise().sum());
    });
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows())
        throw std::invalid_argument("concat_cols: row mismatch " + a.shape_str() + " vs " +
                                    b.shape_str());
    if (a.tape() != b.tape())
        throw std::invalid_argument("concat_cols: operands on different tapes");
    detail::Node *pa = a.node(), *pb = b.node();
    Mat out(a.rows(), a.cols() + b.cols());
    out << a.value(), b.value();
    const Eigen::Index ca = a.cols(), cb = b.cols();
    return detail::make_node(a.tape(), std::move(out), {pa, pb},
                             [pa, pb, ca, cb](const detail::Node& n) {
                                 detail::accum(pa, n.grad.leftCols(ca));
                                 detail::accum(pb, n.grad.rightCols(cb));
                             });
}

// ---- scalar-parameter ops ----

inline Tensor scale(const Tensor& a, double c) {
    detail::Node* pa = a.node();
    return detail::make_node(a.tape(), a.value() * c, {pa},
                             [pa, c](const detail::Node& n) { detail::accum(pa, n.grad * c); });
}

inline Tensor add_const(const Tensor& a, double c) {
    detail::Node* pa = a.node();
    return detail::make_node(a.tape(), a.value().array() + c, {pa},
                             [pa](const detail::Node& n) { detail::accum(pa, n.grad); });
}

/// Multiply every entry of a by the 1x1 tensor s (gradient flows into both).
inline Tensor scale_by(const Tensor& a, const Tensor& s) {
    if (s.rows() != 1 || s.cols() != 1)
        throw std::invalid_argument("scale_by: scale must be 1x1, got " + s.shape_str());
    detail::Node *pa = a.node(), *ps = s.node();
    Mat av = a.value();
    const double sv = s.value()(0, 0);
    return detail::make_node(a.tape(), av * sv, {pa, ps},
                             [pa, ps, av, sv](const detail::Node& n) {
                                 detail::accum(pa, n.grad * sv);
                                 detail::accum(ps, Mat::Constant(1, 1, n.grad.cwiseProduct(av).sum()));
                             });
}

/// Divide every entry of a by the 1x1 tensor s.
inline Tensor div_by(const Tensor& a, const Tensor& s) {
    if (s.rows() != 1 || s.cols() != 1)
        throw std::invalid_argument("div_by: divisor must be 1x1, got " + s.shape_str());
    detail::Node *pa = a.node(), *ps = s.node();
    Mat av = a.value();
    const double sv = s.value()(0, 0);
    return detail::make_node(a.tape(), av / sv, {pa, ps},
                             [pa, ps, av, sv](const detail::Node& n) {
                                 detail::accum(pa, n.grad / sv);
                                 detail::accum(ps, Mat::Constant(1, 1, -n.grad.cwiseProduct(av).sum() / (sv * sv)));
                             });
}

// ---- reductions ----

inline Tensor sum(const Tensor& a) {
    detail::Node* pa = a.node();
    const Eigen::Index r = a.rows(), c = a.cols();
    return detail::make_node(a.tape(), Mat::Constant(1, 1, a.value().sum()), {pa},
                             [pa, r, c](const detail::Node& n) {
                                 detail::accum(pa, Mat::Constant(r, c, n.grad(0, 0)));
                             });
}

inline Tensor mean(const Tensor& a) {
    detail::Node* pa = a.node();
    const Eigen::Index r = a.rows(), c = a.cols();
    const double inv = 1.0 / static_cast<double>(r * c);
    return detail::make_node(a.tape(), Mat::Constant(1, 1, a.value().mean()), {pa},
                             [pa, r, c, inv](const detail::Node& n) {
                                 detail::accum(pa, Mat::Constant(r, c, n.grad(0, 0) * inv));
                             });
}

// ---- elementwise unary ----

namespace detail {
// out = f(a); bw_factor = f'(a) evaluated elementwise
template <typename F, typename DF>
Tensor unary(const Tensor& a, F&& f, DF&& df) {
    Node* pa = a.node();
    Eigen::ArrayXXd av = a.value().array();
    Mat out = f(av).matrix();
    Mat d = df(av).matrix();
    return make_node(a.tape(), std::move(out), {pa}, [pa, d](const Node& n) {
        accum(pa, n.grad.cwiseProduct(d));
    });
}
}  // namespace detail

inline Tensor neg(const Tensor& a) { return scale(a, -1.0); }

inline Tensor square(const Tensor& a) {
    return detail::unary(a, [](auto x) { return x.square(); }, [](auto x) { return 2.0 * x; });
}

inline Tensor sqrt(const Tensor& a) {
    return detail::unary(a, [](auto x) { return x.sqrt(); },
                         [](auto x) { return 0.5 / x.sqrt(); });
}

inline Tensor exp(const Tensor& a) {
    return detail::unary(a, [](auto x) { return x.exp(); }, [](auto x) { return x.exp(); });
}

inline Tensor log(const Tensor& a) {
    return detail::unary(a, [](auto x) { return x.log(); }, [](auto x) { return x.inverse(); });
}

inline Tensor tanh(const Tensor& a) {
    return detail::unary(a, [](auto x) { return x.tanh(); },
                         [](auto x) { return 1.0 - x.tanh().square(); });
}

inline Tensor sin(const Tensor& a) {
    return detail::unary(a, [](auto x) { return x.sin(); }, [](auto x) { return x.cos(); });
}

inline Tensor cos(const Tensor& a) {
    return detail::unary(a, [](auto x) { return x.cos(); }, [](auto x) { return -x.sin(); });
}

// Kinks use the subgradient 0 convention: the passing branch is strict.

inline Tensor relu(const Tensor& a) {
    return detail::unary(a, [](auto x) { return x.max(0.0); },
                         [](auto x) { return (x > 0.0).template cast<double>(); });
}

inline Tensor leaky_relu(const Tensor& a, double slope) {
    using Arr = Eigen::ArrayXXd;
    return detail::unary(a,
                         [slope](const Arr& x) -> Arr { return (x > 0.0).select(x, slope * x); },
                         [slope](const Arr& x) -> Arr {
                             return (x > 0.0).select(Arr::Ones(x.rows(), x.cols()),
                                                     Arr::Constant(x.rows(), x.cols(), slope));
                         });
}

/// ELU with alpha = 1.
inline Tensor elu(const Tensor& a) {
    using Arr = Eigen::ArrayXXd;
    return detail::unary(a,
                         [](const Arr& x) -> Arr { return (x > 0.0).select(x, x.exp() - 1.0); },
                         [](const Arr& x) -> Arr {
                             return (x > 0.0).select(Arr::Ones(x.rows(), x.cols()), x.exp());
                         });
}

/// Elementwise min(a, c). Gradient passes only where a < c.
inline Tensor min_scalar(const Tensor& a, double c) {
    return detail::unary(a, [c](auto x) { return x.min(c); },
                         [c](auto x) { return (x < c).template cast<double>(); });
}

// ---- composites ----

/// sqrt(sum of squares); inputs must not be identically zero when grads are needed.
inline Tensor norm_l2(const Tensor& a) { return sqrt(sum(square(a))); }

/// Column means as a 1xC row (gradient flows through).
inline Tensor col_mean(const Tensor& a) {
    Tensor ones = a.tape()->constant(Mat::Constant(1, a.rows(), 1.0 / static_cast<double>(a.rows())));
    return matmul(ones, a);
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator*(const Tensor& a, double c) { return scale(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }

}  // namespace cfgan
