// Python bindings for the main operations: estimators, frequency sampling,
// two-sample testing, and the synthetic GAN trainer.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cfgan/gantrain.hpp"
#include "cfgan/twosample.hpp"

namespace py = pybind11;
using namespace cfgan;

namespace {

WeightingDistribution make_dist(const std::string& family, const Vec& sigma) {
    return WeightingDistribution(weight_family_from_string(family), sigma);
}

KernelSpec make_kernel(const std::string& family, std::vector<double> params) {
    KernelSpec spec;
    if (family == "rbf") spec.family = KernelFamily::RBF;
    else if (family == "rq") spec.family = KernelFamily::RQ;
    else if (family == "poly3") spec.family = KernelFamily::Poly3;
    else throw std::invalid_argument("unknown kernel family: " + family);
    if (!params.empty() || spec.family == KernelFamily::Poly3) spec.params = std::move(params);
    spec.validate();
    return spec;
}

}  // namespace

PYBIND11_MODULE(_cfgan, m) {
    m.doc() = "Characteristic function distance estimators and experiments";

    m.def(
        "ecf",
        [](const Mat& X, const Mat& T) {
            const EcfValue v = ecf(X, T);
            return py::make_tuple(v.re, v.im);
        },
        py::arg("x"), py::arg("t"),
        "Empirical characteristic function at each frequency row of t; returns (re, im).");

    m.def("ecfd", &ecfd, py::arg("x"), py::arg("y"), py::arg("t"),
          "Empirical characteristic function distance over the given frequency rows.");

    m.def("ecfd_smoothed", &ecfd_smoothed, py::arg("x"), py::arg("y"), py::arg("t"),
          py::arg("smoothing_scale"));

    m.def(
        "mmd2",
        [](const Mat& X, const Mat& Y, const std::string& kernel, std::vector<double> params,
           bool biased) { return mmd2(X, Y, make_kernel(kernel, std::move(params)), biased); },
        py::arg("x"), py::arg("y"), py::arg("kernel") = "rbf",
        py::arg("params") = std::vector<double>{}, py::arg("biased") = true,
        "Squared MMD under an rbf/rq/poly3 kernel mixture.");

    m.def(
        "mmd2_rbf_dual",
        [](const Mat& X, const Mat& Y, const Vec& sigma, bool biased) {
            return mmd2_rbf_dual(X, Y, sigma, biased);
        },
        py::arg("x"), py::arg("y"), py::arg("sigma"), py::arg("biased") = true,
        "Biased MMD^2 under the Fourier dual of a Gaussian weighting with scales sigma.");

    m.def(
        "cfd_mc",
        [](const Mat& X, const Mat& Y, const std::string& family, const Vec& sigma,
           Eigen::Index k, int reps, std::uint64_t seed) {
            Rng rng(seed);
            return cfd_mc(X, Y, make_dist(family, sigma), rng, k, reps);
        },
        py::arg("x"), py::arg("y"), py::arg("family"), py::arg("sigma"), py::arg("k"),
        py::arg("reps"), py::arg("seed") = 0,
        "Monte-Carlo CFD: mean ecfd over fresh frequency batches.");

    m.def(
        "sample_frequencies",
        [](const std::string& family, const Vec& sigma, Eigen::Index k, std::uint64_t seed) {
            Rng rng(seed);
            return make_dist(family, sigma).sample(rng, k);
        },
        py::arg("family"), py::arg("sigma"), py::arg("k"), py::arg("seed") = 0);

    py::class_<TwoSampleResult>(m, "TwoSampleResult")
        .def_readonly("statistic", &TwoSampleResult::statistic)
        .def_readonly("threshold", &TwoSampleResult::threshold)
        .def_readonly("p_value", &TwoSampleResult::p_value)
        .def_readonly("reject", &TwoSampleResult::reject)
        .def_readonly("sigma_norm", &TwoSampleResult::sigma_norm);

    m.def(
        "two_sample_test",
        [](const Mat& X, const Mat& Y, const std::string& statistic, Eigen::Index k, double alpha,
           int permutations, int opt_steps, std::uint64_t seed) {
            TestConfig cfg;
            cfg.k = k;
            cfg.alpha = alpha;
            cfg.permutations = permutations;
            cfg.opt_steps = opt_steps;
            cfg.seed = seed;
            Rng rng(seed);
            return run_test(X, Y, test_statistic_from_string(statistic), cfg, rng);
        },
        py::arg("x"), py::arg("y"), py::arg("statistic") = "ecfd", py::arg("k") = 3,
        py::arg("alpha") = 0.05, py::arg("permutations") = 200, py::arg("opt_steps") = 100,
        py::arg("seed") = 0,
        "Permutation-calibrated two-sample test (ecfd, ecfd-smooth, oecfd, oecfd-smooth, mmd).");

    m.def(
        "train_gan",
        [](const std::string& model, const std::string& dataset, int iterations,
           std::uint64_t seed, Eigen::Index k, int log_every) {
            TrainConfig cfg;
            cfg.model = gan_model_from_string(model);
            cfg.dataset = dataset_from_string(dataset);
            cfg.iterations = iterations;
            cfg.seed = seed;
            cfg.k = k;
            cfg.log_every = log_every;
            const TrainResult res = train(cfg);
            py::list rows;
            for (const auto& r : res.log)
                rows.append(py::make_tuple(r.iter, r.mae, r.critic_loss, r.gen_loss, r.sigma_norm));
            return rows;
        },
        py::arg("model"), py::arg("dataset"), py::arg("iterations"), py::arg("seed") = 0,
        py::arg("k") = 8, py::arg("log_every") = 100,
        "Train on a synthetic dataset; returns (iter, mae, critic_loss, gen_loss, sigma_norm) rows.");

    m.def(
        "synthetic_sample",
        [](const std::string& dataset, Eigen::Index n, std::uint64_t seed) {
            Rng rng(seed);
            return SyntheticDataset{dataset_from_string(dataset)}.sample(rng, n);
        },
        py::arg("dataset"), py::arg("n"), py::arg("seed") = 0);
}
