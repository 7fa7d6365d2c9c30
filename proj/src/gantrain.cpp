#include "cfgan/gantrain.hpp"

#include <cmath>
#include <stdexcept>

namespace cfgan {

std::string to_string(GanModel m) {
    switch (m) {
        case GanModel::CfGan: return "cfgan";
        case GanModel::OcfGan: return "ocfgan";
        case GanModel::OcfGanGp: return "ocfgan-gp";
        case GanModel::Wgan: return "wgan";
        case GanModel::WganGp: return "wgan-gp";
        case GanModel::MmdGan: return "mmdgan";
        case GanModel::MmdGanGp: return "mmdgan-gp";
    }
    return "?";
}

GanModel gan_model_from_string(const std::string& s) {
    if (s == "cfgan") return GanModel::CfGan;
    if (s == "ocfgan") return GanModel::OcfGan;
    if (s == "ocfgan-gp") return GanModel::OcfGanGp;
    if (s == "wgan") return GanModel::Wgan;
    if (s == "wgan-gp") return GanModel::WganGp;
    if (s == "mmdgan") return GanModel::MmdGan;
    if (s == "mmdgan-gp") return GanModel::MmdGanGp;
    throw std::invalid_argument(
        "unknown model: " + s +
        " (valid: cfgan, ocfgan, ocfgan-gp, wgan, wgan-gp, mmdgan, mmdgan-gp)");
}

std::string to_string(DatasetTag d) { return d == DatasetTag::D1 ? "d1" : "d2"; }

DatasetTag dataset_from_string(const std::string& s) {
    if (s == "d1") return DatasetTag::D1;
    if (s == "d2") return DatasetTag::D2;
    throw std::invalid_argument("unknown dataset: " + s + " (valid: d1, d2)");
}

bool model_optimizes_sigma(GanModel m) {
    return m == GanModel::OcfGan || m == GanModel::OcfGanGp;
}
bool model_uses_gp(GanModel m) {
    return m == GanModel::OcfGanGp || m == GanModel::WganGp || m == GanModel::MmdGanGp;
}
bool model_uses_clip(GanModel m) { return !model_uses_gp(m); }

namespace {
bool is_cf(GanModel m) {
    return m == GanModel::CfGan || m == GanModel::OcfGan || m == GanModel::OcfGanGp;
}
bool is_mmd(GanModel m) { return m == GanModel::MmdGan || m == GanModel::MmdGanGp; }
bool is_wgan(GanModel m) { return m == GanModel::Wgan || m == GanModel::WganGp; }

// D1: mu + sigma z with mu = -10, sigma = 1/5.
// D2: alpha z + beta tanh(gamma alpha z) with alpha = 1/5, beta = 10, gamma = 100.
constexpr double kD1Mu = -10.0, kD1Sigma = 0.2;
constexpr double kD2Alpha = 0.2, kD2Beta = 10.0, kD2Gamma = 100.0;
}  // namespace

double SyntheticDataset::h(double z) const {
    if (tag == DatasetTag::D1) return kD1Mu + kD1Sigma * z;
    return kD2Alpha * z + kD2Beta * std::tanh(kD2Gamma * kD2Alpha * z);
}

double SyntheticDataset::mirror(double z) const {
    if (tag == DatasetTag::D1) return kD1Mu - kD1Sigma * z;
    return -kD2Alpha * z + kD2Beta * std::tanh(-kD2Gamma * kD2Alpha * z);
}

Mat SyntheticDataset::sample(Rng& rng, Eigen::Index n) const {
    Mat out(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) out(i, 0) = h(rng.normal());
    return out;
}

TrainConfig TrainConfig::resolved() const {
    TrainConfig c = *this;
    if (c.iterations < 0) c.iterations = c.dataset == DatasetTag::D1 ? 10000 : 20000;
    if (c.clip < 0.0) c.clip = c.dataset == DatasetTag::D1 ? 0.01 : 0.1;
    if (c.lambda_gp < 0.0)
        c.lambda_gp = (c.model == GanModel::WganGp && c.dataset == DatasetTag::D1) ? 1.0 : 10.0;
    return c;
}

TrainState::TrainState(const TrainConfig& cfg)
    : config(cfg.resolved()),
      generator(Mlp{}),
      critic(Mlp{}),
      critic_opt(config.lr),
      gen_opt(config.lr),
      rng(cfg.seed) {
    generator = Mlp::synthetic_generator(rng);
    critic = Mlp::synthetic_critic(rng);
    log_sigma = Mat::Constant(1, 1, std::log(config.sigma0));
}

namespace {

void check_finite(double v, const char* what, long iter) {
    if (!std::isfinite(v))
        throw std::runtime_error(std::string("training aborted: non-finite ") + what +
                                 " at generator iteration " + std::to_string(iter));
}

// distance term shared by the critic and generator objectives
Tensor distance_term(TrainState& state, Tape& tape, const Tensor& fr, const Tensor& ff,
                     const Tensor& log_sigma, bool normalize_by_sigma) {
    const TrainConfig& cfg = state.config;
    if (is_cf(cfg.model)) {
        FrequencyBatch fb = sample_frequencies(log_sigma, cfg.family, state.rng, cfg.k);
        return normalize_by_sigma ? ecfd_normalized_t(fr, ff, fb.t, log_sigma)
                                  : ecfd_t(fr, ff, fb.t);
    }
    if (is_mmd(cfg.model)) {
        const KernelSpec kernel = cfg.model == GanModel::MmdGan ? KernelSpec::rbf_mixture()
                                                                : KernelSpec::rq_mixture();
        return mmd2_t(fr, ff, kernel, false);
    }
    return sub(mean(fr), mean(ff));  // WGAN
}

}  // namespace

double critic_step(TrainState& state, const Mat& real_batch, const Mat& z_batch) {
    const TrainConfig& cfg = state.config;
    if (real_batch.rows() != z_batch.rows())
        throw std::invalid_argument("critic_step: batch size mismatch");
    const bool opt_sigma = model_optimizes_sigma(cfg.model);

    Tape tape;
    MlpBinding critic_b = attach(tape, state.critic, true);
    MlpBinding gen_b = attach(tape, state.generator, false);
    Tensor ls = tape.leaf(state.log_sigma, opt_sigma);

    Tensor fake = forward(gen_b, tape.constant(z_batch));
    Tensor fr = forward(critic_b, tape.constant(real_batch));
    Tensor ff = forward(critic_b, fake);

    Tensor obj = distance_term(state, tape, fr, ff, ls, opt_sigma);
    if (model_uses_clip(cfg.model) && !is_wgan(cfg.model) && cfg.lambda_feasible != 0.0) {
        Tensor margin = sub(mean(fr), mean(ff));
        obj = add(obj, scale(min_scalar(margin, 0.0), cfg.lambda_feasible));
    }
    if (model_uses_gp(cfg.model)) {
        Tensor gp = gradient_penalty(critic_b, real_batch, fake.value(), state.rng);
        obj = sub(obj, scale(gp, cfg.lambda_gp));
    }
    const double obj_value = obj.scalar();
    check_finite(obj_value, "critic objective", state.iter);

    Tensor loss = neg(obj);
    tape.backward(loss);

    std::vector<Mat*> params;
    std::vector<Mat> grads;
    for (std::size_t l = 0; l < state.critic.num_layers(); ++l) {
        params.push_back(&state.critic.weights[l]);
        grads.push_back(critic_b.weights[l].grad());
        params.push_back(&state.critic.biases[l]);
        grads.push_back(critic_b.biases[l].grad());
    }
    if (opt_sigma) {
        params.push_back(&state.log_sigma);
        grads.push_back(ls.grad());
    }
    state.critic_opt.step(params, grads);
    if (model_uses_clip(cfg.model)) clip_weights(state.critic, ClipSpec{cfg.clip});
    return obj_value;
}

double generator_step(TrainState& state, const Mat& z_batch, const Mat& real_batch) {
    const TrainConfig& cfg = state.config;
    if (real_batch.rows() != z_batch.rows())
        throw std::invalid_argument("generator_step: batch size mismatch");

    Tape tape;
    MlpBinding critic_b = attach(tape, state.critic, false);
    MlpBinding gen_b = attach(tape, state.generator, true);
    Tensor ls = tape.leaf(state.log_sigma, false);  // sigma frozen for the generator

    Tensor fake = forward(gen_b, tape.constant(z_batch));
    Tensor fr = forward(critic_b, tape.constant(real_batch));
    Tensor ff = forward(critic_b, fake);

    Tensor loss = distance_term(state, tape, fr, ff, ls, false);
    const double loss_value = loss.scalar();
    check_finite(loss_value, "generator loss", state.iter);
    tape.backward(loss);

    std::vector<Mat*> params;
    std::vector<Mat> grads;
    for (std::size_t l = 0; l < state.generator.num_layers(); ++l) {
        params.push_back(&state.generator.weights[l]);
        grads.push_back(gen_b.weights[l].grad());
        params.push_back(&state.generator.biases[l]);
        grads.push_back(gen_b.biases[l].grad());
    }
    state.gen_opt.step(params, grads);
    return loss_value;
}

double mae(const Mlp& generator, const SyntheticDataset& dataset, Eigen::Index n_eval, Rng& rng) {
    if (n_eval < 1) throw std::invalid_argument("mae: n_eval must be >= 1");
    Mat z(n_eval, 1);
    for (Eigen::Index i = 0; i < n_eval; ++i) z(i, 0) = rng.normal();
    const Mat hhat = forward_values(generator, z);
    double e_h = 0.0, e_g = 0.0;
    for (Eigen::Index i = 0; i < n_eval; ++i) {
        e_h += std::abs(dataset.h(z(i, 0)) - hhat(i, 0));
        e_g += std::abs(dataset.mirror(z(i, 0)) - hhat(i, 0));
    }
    e_h /= static_cast<double>(n_eval);
    e_g /= static_cast<double>(n_eval);
    return std::min(e_h, e_g);
}

TrainResult train(const TrainConfig& config) {
    TrainResult result{TrainState(config), {}};
    TrainState& st = result.state;
    const TrainConfig& cfg = st.config;
    const SyntheticDataset data{cfg.dataset};

    double last_closs = 0.0, last_gloss = 0.0;
    for (long it = 1; it <= cfg.iterations; ++it) {
        st.iter = it;
        for (int c = 0; c < cfg.critic_iters; ++c) {
            const Mat real = data.sample(st.rng, cfg.batch);
            const Mat z = st.rng.normal_matrix(cfg.batch, 1);
            last_closs = critic_step(st, real, z);
        }
        const Mat real = data.sample(st.rng, cfg.batch);
        const Mat z = st.rng.normal_matrix(cfg.batch, 1);
        last_gloss = generator_step(st, z, real);

        if (it % cfg.log_every == 0 || it == cfg.iterations) {
            Rng eval_rng(Rng::derive_seed(cfg.seed, 0x6d6165ULL + static_cast<std::uint64_t>(it)));
            MetricsRow row;
            row.iter = it;
            row.mae = mae(st.generator, data, cfg.mae_samples, eval_rng);
            row.critic_loss = last_closs;
            row.gen_loss = last_gloss;
            row.sigma_norm = st.sigma().norm();
            result.log.push_back(row);
        }
    }
    return result;
}

}  // namespace cfgan
