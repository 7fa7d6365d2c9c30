#pragma once

#include <vector>

#include "cfgan/tape.hpp"

namespace cfgan {

/// Adam on a list of parameter matrices. step() applies a descent update;
/// pass negated grads to ascend.
class Adam {
public:
    explicit Adam(double lr = 0.001, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(std::vector<Mat*> params, const std::vector<Mat>& grads) {
        init(params);
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
            v_[i] = beta2_ * v_[i].array() + (1.0 - beta2_) * grads[i].array().square();
            params[i]->array() -=
                lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
        }
    }

private:
    void init(const std::vector<Mat*>& params) {
        if (!m_.empty()) return;
        for (auto* p : params) {
            m_.push_back(Mat::Zero(p->rows(), p->cols()));
            v_.push_back(Mat::Zero(p->rows(), p->cols()));
        }
    }
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Mat> m_, v_;
};

/// RMSProp with the plain accumulator form.
class RmsProp {
public:
    explicit RmsProp(double lr = 0.001, double decay = 0.99, double eps = 1e-8)
        : lr_(lr), decay_(decay), eps_(eps) {}

    void step(std::vector<Mat*> params, const std::vector<Mat>& grads) {
        if (acc_.empty())
            for (auto* p : params) acc_.push_back(Mat::Zero(p->rows(), p->cols()));
        for (std::size_t i = 0; i < params.size(); ++i) {
            acc_[i] = decay_ * acc_[i].array() + (1.0 - decay_) * grads[i].array().square();
            params[i]->array() -= lr_ * grads[i].array() / (acc_[i].array().sqrt() + eps_);
        }
    }

private:
    double lr_, decay_, eps_;
    std::vector<Mat> acc_;
};

}  // namespace cfgan
