#pragma once

#include <string>
#include <vector>

#include "cfgan/estimators.hpp"
#include "cfgan/nets.hpp"
#include "cfgan/optim.hpp"

namespace cfgan {

enum class GanModel { CfGan, OcfGan, OcfGanGp, Wgan, WganGp, MmdGan, MmdGanGp };
enum class DatasetTag { D1, D2 };

std::string to_string(GanModel m);
GanModel gan_model_from_string(const std::string& s);
std::string to_string(DatasetTag d);
DatasetTag dataset_from_string(const std::string& s);

bool model_optimizes_sigma(GanModel m);
bool model_uses_gp(GanModel m);
bool model_uses_clip(GanModel m);

/// 1-D synthetic target: x = h(z), z ~ N(0,1). Each dataset admits two
/// correct transformations h and its mirror g.
struct SyntheticDataset {
    DatasetTag tag = DatasetTag::D1;

    double h(double z) const;
    double mirror(double z) const;
    Mat sample(Rng& rng, Eigen::Index n) const;  // n x 1
};

struct TrainConfig {
    GanModel model = GanModel::OcfGanGp;
    DatasetTag dataset = DatasetTag::D1;
    WeightFamily family = WeightFamily::Gaussian;
    double sigma0 = 1.0;
    Eigen::Index k = 8;            // frequencies per ECFD evaluation
    int critic_iters = 5;          // critic updates per generator iteration
    Eigen::Index batch = 50;
    double lr = 1e-3;              // RMSProp learning rate, both networks
    int iterations = -1;           // -1: dataset default (10000 D1 / 20000 D2)
    double clip = -1.0;            // -1: dataset default (0.01 D1 / 0.1 D2)
    double lambda_gp = -1.0;       // -1: model default (10; 1 for WGAN-GP on D1)
    double lambda_feasible = 16.0; // clip variants only
    int log_every = 100;
    Eigen::Index mae_samples = 5000;
    std::uint64_t seed = 0;

    /// Fills every -1 field from the dataset/model defaults.
    TrainConfig resolved() const;
};

struct MetricsRow {
    long iter = 0;
    double mae = 0.0;
    double critic_loss = 0.0;
    double gen_loss = 0.0;
    double sigma_norm = 0.0;
};

struct TrainState {
    TrainConfig config;
    Mlp generator;
    Mlp critic;
    Mat log_sigma;  // 1 x 1 (critic output is one-dimensional)
    RmsProp critic_opt;
    RmsProp gen_opt;
    Rng rng;
    long iter = 0;

    explicit TrainState(const TrainConfig& cfg);
    Vec sigma() const { return log_sigma.array().exp().matrix().transpose(); }
};

/// One critic ascent step (plus sigma for O-variants); applies weight
/// clipping afterwards for clip models. Returns the critic objective value.
double critic_step(TrainState& state, const Mat& real_batch, const Mat& z_batch);

/// One generator descent step on the un-normalized distance.
double generator_step(TrainState& state, const Mat& z_batch, const Mat& real_batch);

/// Monte-Carlo MAE against both admissible transformations (minimum taken).
double mae(const Mlp& generator, const SyntheticDataset& dataset, Eigen::Index n_eval, Rng& rng);

struct TrainResult {
    TrainState state;
    std::vector<MetricsRow> log;
};

/// Full n_c-critic / 1-generator alternation; logs MAE every log_every
/// generator iterations (and at the final iteration).
TrainResult train(const TrainConfig& config);

}  // namespace cfgan
