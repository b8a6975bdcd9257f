#include "stresslab/actions.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stresslab {

Vec6 ActionVector::as_vec6() const {
    Vec6 v;
    v << ped_accel.x(), ped_accel.y(), noise_pos.x(), noise_pos.y(), noise_vel.x(), noise_vel.y();
    return v;
}

ActionVector ActionVector::from_vec6(const Vec6& v) {
    ActionVector a;
    a.ped_accel = Vec2(v[0], v[1]);
    a.noise_pos = Vec2(v[2], v[3]);
    a.noise_vel = Vec2(v[4], v[5]);
    return a;
}

bool ActionVector::all_finite() const {
    return as_vec6().allFinite();
}

bool ActionVector::operator==(const ActionVector& other) const {
    return as_vec6() == other.as_vec6();
}

ActionBounds ActionBounds::symmetric(double ped_accel, double noise_pos, double noise_vel) {
    ActionBounds b;
    b.hi << ped_accel, ped_accel, noise_pos, noise_pos, noise_vel, noise_vel;
    b.lo = -b.hi;
    return b;
}

void ActionBounds::validate() const {
    for (int i = 0; i < kActionDim; ++i) {
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i]) {
            throw std::invalid_argument("action_bounds: component " + std::to_string(i) +
                                        " has lo > hi or non-finite limits");
        }
    }
}

ActionVector ActionBounds::clamp(const ActionVector& a) const {
    Vec6 v = a.as_vec6();
    for (int i = 0; i < kActionDim; ++i) {
        v[i] = std::min(std::max(v[i], lo[i]), hi[i]);
    }
    return ActionVector::from_vec6(v);
}

ActionVector ActionBounds::sample_uniform(Rng& rng) const {
    Vec6 v;
    for (int i = 0; i < kActionDim; ++i) {
        v[i] = rng.uniform(lo[i], hi[i]);
    }
    return ActionVector::from_vec6(v);
}

ActionModel::ActionModel() : ActionModel(Vec6::Zero(), 0.1 * Mat6::Identity()) {}

ActionModel::ActionModel(const Vec6& mean, const Mat6& covariance)
    : mean_(mean), cov_(covariance) {
    if (!mean_.allFinite() || !cov_.allFinite()) {
        throw std::invalid_argument("action_model: non-finite mean or covariance");
    }
    if (!cov_.isApprox(cov_.transpose(), 1e-10)) {
        throw std::invalid_argument("action_model.covariance: not symmetric");
    }
    llt_.compute(cov_);
    if (llt_.info() != Eigen::Success) {
        throw std::invalid_argument("action_model.covariance: not positive-definite");
    }
}

double ActionModel::mahalanobis(const Vec6& a) const {
    const Vec6 d = a - mean_;
    // ||L^-1 d||, with Sigma = L L^T
    const Vec6 y = llt_.matrixL().solve(d);
    return y.norm();
}

Vec6 ActionModel::component_sigma() const {
    return cov_.diagonal().cwiseSqrt();
}

void RewardSpec::validate() const {
    if (horizon < 1) {
        throw std::invalid_argument("reward_spec.horizon: must be >= 1");
    }
    if (alpha < 0.0 || beta < 0.0) {
        throw std::invalid_argument("reward_spec.alpha/beta: must be >= 0");
    }
}

double reward(const StepOutcome& outcome, const RewardSpec& spec) {
    if (outcome.event) {
        return 0.0;
    }
    if (outcome.terminal) {
        return -spec.alpha - spec.beta * outcome.heuristic_dist;
    }
    if (spec.mode == LikelihoodMode::kGaussianLogDensity) {
        return -0.5 * outcome.mahalanobis * outcome.mahalanobis;
    }
    return -outcome.mahalanobis;
}

}  // namespace stresslab
