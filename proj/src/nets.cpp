#include "cfgan/nets.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cfgan {

namespace {
constexpr char kMagic[8] = {'C', 'F', 'G', 'A', 'N', 'N', 'E', 'T'};

Tensor apply_activation(const Tensor& z, const Mlp& arch) {
    switch (arch.hidden_act) {
        case Activation::Elu: return elu(z);
        case Activation::Relu: return relu(z);
        case Activation::LeakyRelu: return leaky_relu(z, arch.leaky_slope);
        case Activation::Tanh: return tanh(z);
        case Activation::None: return z;
    }
    throw std::logic_error("unknown activation");
}

// Activation derivative expressed in tape ops (keeps the forward-mode sweep
// differentiable in the parameters).
Tensor activation_derivative(const Tensor& z, const Mlp& arch) {
    switch (arch.hidden_act) {
        case Activation::Elu:
            // elu'(z) = 1 for z > 0, exp(z) otherwise = min(exp(z), 1).
            return min_scalar(exp(z), 1.0);
        case Activation::Tanh: {
            Tensor t = tanh(z);
            return add_const(neg(square(t)), 1.0);
        }
        case Activation::None:
            return z.tape()->constant(Mat::Ones(z.rows(), z.cols()));
        default:
            throw std::invalid_argument(
                "forward_input_partial: activation derivative available only for elu/tanh/none");
    }
}

}  // namespace

Mlp Mlp::create(std::vector<Eigen::Index> sizes, Activation act, Rng& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("Mlp::create: need at least one layer");
    Mlp m;
    m.sizes = std::move(sizes);
    m.hidden_act = act;
    for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
        const Eigen::Index in = m.sizes[l], out = m.sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        Mat w(in, out);
        for (Eigen::Index i = 0; i < in; ++i)
            for (Eigen::Index j = 0; j < out; ++j) w(i, j) = rng.uniform(-bound, bound);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Mat::Zero(1, out));
    }
    return m;
}

void clip_weights(Mlp& mlp, const ClipSpec& spec) {
    if (spec.bound <= 0.0) throw std::invalid_argument("clip_weights: bound must be positive");
    for (auto& w : mlp.weights) w = w.cwiseMax(-spec.bound).cwiseMin(spec.bound);
    for (auto& b : mlp.biases) b = b.cwiseMax(-spec.bound).cwiseMin(spec.bound);
}

std::vector<Tensor> MlpBinding::all_params() const {
    std::vector<Tensor> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(weights[l]);
        out.push_back(biases[l]);
    }
    return out;
}

std::vector<Mat> MlpBinding::grads() const {
    std::vector<Mat> out;
    for (const auto& p : all_params()) out.push_back(p.grad());
    return out;
}

MlpBinding attach(Tape& tape, const Mlp& mlp, bool requires_grad) {
    MlpBinding b;
    b.arch = &mlp;
    for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
        b.weights.push_back(tape.leaf(mlp.weights[l], requires_grad));
        b.biases.push_back(tape.leaf(mlp.biases[l], requires_grad));
    }
    return b;
}

Tensor forward(const MlpBinding& net, const Tensor& input) {
    const Mlp& arch = *net.arch;
    if (input.cols() != arch.in_dim())
        throw std::invalid_argument("Mlp forward: input width " + std::to_string(input.cols()) +
                                    " vs expected " + std::to_string(arch.in_dim()));
    Tensor h = input;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        Tensor z = add(matmul(h, net.weights[l]), broadcast_row(net.biases[l], input.rows()));
        h = (l + 1 < net.weights.size()) ? apply_activation(z, arch) : z;
    }
    return h;
}

Mat forward_values(const Mlp& mlp, const Mat& input) {
    Tape tape;
    MlpBinding b = attach(tape, mlp, false);
    return forward(b, tape.constant(input)).value();
}

Tensor forward_input_partial(const MlpBinding& net, const Tensor& input, Eigen::Index j) {
    const Mlp& arch = *net.arch;
    if (arch.out_dim() != 1)
        throw std::invalid_argument("forward_input_partial: scalar-output networks only");
    if (j < 0 || j >= arch.in_dim())
        throw std::invalid_argument("forward_input_partial: coordinate out of range");
    Tape* tape = input.tape();
    Mat seed = Mat::Zero(input.rows(), arch.in_dim());
    seed.col(j).setOnes();
    Tensor h = input;
    Tensor d = tape->constant(seed);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        Tensor z = add(matmul(h, net.weights[l]), broadcast_row(net.biases[l], input.rows()));
        Tensor dz = matmul(d, net.weights[l]);
        if (l + 1 < net.weights.size()) {
            h = apply_activation(z, arch);
            d = mul(dz, activation_derivative(z, arch));
        } else {
            h = z;
            d = dz;
        }
    }
    return d;  // n x 1
}

Tensor gradient_penalty(const MlpBinding& critic, const Mat& x_real, const Mat& x_fake,
                        Rng& rng) {
    if (x_real.rows() != x_fake.rows() || x_real.cols() != x_fake.cols())
        throw std::invalid_argument("gradient_penalty: batch shape mismatch " +
                                    std::to_string(x_real.rows()) + "x" +
                                    std::to_string(x_real.cols()) + " vs " +
                                    std::to_string(x_fake.rows()) + "x" +
                                    std::to_string(x_fake.cols()));
    Tape* tape = critic.weights.front().tape();
    Mat xhat(x_real.rows(), x_real.cols());
    for (Eigen::Index i = 0; i < x_real.rows(); ++i) {
        const double u = rng.uniform01();
        xhat.row(i) = u * x_real.row(i) + (1.0 - u) * x_fake.row(i);
    }
    Tensor xin = tape->constant(xhat);
    Tensor sumsq;
    for (Eigen::Index j = 0; j < x_real.cols(); ++j) {
        Tensor pj = forward_input_partial(critic, xin, j);
        sumsq = sumsq.valid() ? add(sumsq, square(pj)) : square(pj);
    }
    Tensor gnorm = sqrt(add_const(sumsq, 1e-12));
    return mean(square(add_const(gnorm, -1.0)));
}

void Mlp::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("Mlp::save: cannot open " + path);
    f.write(kMagic, 8);
    const std::uint32_t version = 1;
    const std::uint8_t act = static_cast<std::uint8_t>(hidden_act);
    const std::uint32_t nsizes = static_cast<std::uint32_t>(sizes.size());
    f.write(reinterpret_cast<const char*>(&version), 4);
    f.write(reinterpret_cast<const char*>(&act), 1);
    f.write(reinterpret_cast<const char*>(&nsizes), 4);
    for (auto s : sizes) {
        const std::uint32_t v = static_cast<std::uint32_t>(s);
        f.write(reinterpret_cast<const char*>(&v), 4);
    }
    auto write_mat = [&](const Mat& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                const double v = m(i, j);
                f.write(reinterpret_cast<const char*>(&v), 8);
            }
    };
    for (std::size_t l = 0; l < num_layers(); ++l) {
        write_mat(weights[l]);
        write_mat(biases[l]);
    }
    if (!f) throw std::runtime_error("Mlp::save: write failed for " + path);
}

Mlp Mlp::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("Mlp::load: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("Mlp::load: bad magic in " + path);
    std::uint32_t version = 0, nsizes = 0;
    std::uint8_t act = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&act), 1);
    f.read(reinterpret_cast<char*>(&nsizes), 4);
    if (!f || version != 1 || nsizes < 2)
        throw std::runtime_error("Mlp::load: bad header in " + path);
    Mlp m;
    m.hidden_act = static_cast<Activation>(act);
    for (std::uint32_t i = 0; i < nsizes; ++i) {
        std::uint32_t s = 0;
        f.read(reinterpret_cast<char*>(&s), 4);
        m.sizes.push_back(static_cast<Eigen::Index>(s));
    }
    auto read_mat = [&](Eigen::Index r, Eigen::Index c) {
        Mat mat(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) f.read(reinterpret_cast<char*>(&mat(i, j)), 8);
        return mat;
    };
    for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
        m.weights.push_back(read_mat(m.sizes[l], m.sizes[l + 1]));
        m.biases.push_back(read_mat(1, m.sizes[l + 1]));
    }
    if (!f) throw std::runtime_error("Mlp::load: truncated file " + path);
    return m;
}

}  // namespace cfgan
