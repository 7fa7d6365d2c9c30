#pragma once

#include <string>
#include <vector>

#include "cfgan/rng.hpp"
#include "cfgan/tape.hpp"

namespace cfgan {

enum class Activation { Elu, Relu, LeakyRelu, Tanh, None };

/// Fully connected network: batches are rows, layer l maps via x W_l + b_l
/// with the hidden activation between layers and a linear output layer.
struct Mlp {
    std::vector<Eigen::Index> sizes;  // e.g. {1, 7, 13, 7, 1}
    Activation hidden_act = Activation::Elu;
    double leaky_slope = 0.2;
    std::vector<Mat> weights;  // in x out
    std::vector<Mat> biases;   // 1 x out

    std::size_t num_layers() const { return weights.size(); }
    Eigen::Index in_dim() const { return sizes.front(); }
    Eigen::Index out_dim() const { return sizes.back(); }

    /// Weights ~ Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
    static Mlp create(std::vector<Eigen::Index> sizes, Activation act, Rng& rng);

    /// Generator of the 1-D synthetic experiments: 1 -> 7 -> 13 -> 7 -> 1, ELU.
    static Mlp synthetic_generator(Rng& rng) { return create({1, 7, 13, 7, 1}, Activation::Elu, rng); }
    /// Critic of the 1-D synthetic experiments: 1 -> 11 -> 29 -> 11 -> 1, ELU.
    static Mlp synthetic_critic(Rng& rng) { return create({1, 11, 29, 11, 1}, Activation::Elu, rng); }

    void save(const std::string& path) const;
    static Mlp load(const std::string& path);
};

struct ClipSpec {
    double bound;
};

/// Clamp every weight and bias into [-c, c].
void clip_weights(Mlp& mlp, const ClipSpec& spec);

/// Parameter tensors of an Mlp placed as leaves on a tape. After backward(),
/// grads are read off the leaves; apply() is not provided here -- training
/// code reads grads and updates the plain Mlp matrices.
struct MlpBinding {
    const Mlp* arch = nullptr;
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;

    std::vector<Tensor> all_params() const;
    std::vector<Mat> grads() const;
};

MlpBinding attach(Tape& tape, const Mlp& mlp, bool requires_grad);

/// Forward pass; input is n x in_dim.
Tensor forward(const MlpBinding& net, const Tensor& input);

/// Convenience: evaluate on plain values without gradients.
Mat forward_values(const Mlp& mlp, const Mat& input);

/// Forward pass carrying the derivative of the scalar output with respect to
/// input coordinate j (a forward-mode sweep built from tape ops, so the
/// result stays differentiable in the parameters). Output n x 1.
Tensor forward_input_partial(const MlpBinding& net, const Tensor& input, Eigen::Index j);

/// Mean over the batch of (||grad_x f(xhat)|| - 1)^2 with xhat a per-row
/// random interpolate of the real and fake batches. Requires out_dim == 1.
Tensor gradient_penalty(const MlpBinding& critic, const Mat& x_real, const Mat& x_fake,
                        Rng& rng);

}  // namespace cfgan
