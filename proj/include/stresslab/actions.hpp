#pragma once

#include <Eigen/Dense>

#include "stresslab/rng.hpp"

namespace stresslab {

using Vec2 = Eigen::Vector2d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr int kActionDim = 6;

// Disturbance action: pedestrian acceleration plus additive noise on the
// vehicle's observation of pedestrian position and velocity.
struct ActionVector {
    Vec2 ped_accel{0.0, 0.0};   // m/s^2
    Vec2 noise_pos{0.0, 0.0};   // m
    Vec2 noise_vel{0.0, 0.0};   // m/s

    Vec6 as_vec6() const;
    static ActionVector from_vec6(const Vec6& v);
    bool all_finite() const;
    bool operator==(const ActionVector& other) const;
};

// Componentwise clamping box; also the support of uniform exploration sampling.
struct ActionBounds {
    Vec6 lo;
    Vec6 hi;

    static ActionBounds symmetric(double ped_accel, double noise_pos, double noise_vel);

    void validate() const;  // throws std::invalid_argument
    ActionVector clamp(const ActionVector& a) const;
    ActionVector sample_uniform(Rng& rng) const;
};

// Nominal action distribution (mu_a, Sigma_a). The covariance is factorized
// once at construction; distances use triangular solves against the factor.
class ActionModel {
public:
    ActionModel();  // zero mean, 0.1 * identity
    ActionModel(const Vec6& mean, const Mat6& covariance);  // throws if not SPD

    const Vec6& mean() const { return mean_; }
    const Mat6& covariance() const { return cov_; }

    // sqrt((a - mu)^T Sigma^-1 (a - mu))
    double mahalanobis(const Vec6& a) const;
    double mahalanobis(const ActionVector& a) const { return mahalanobis(a.as_vec6()); }

    // Per-component standard deviations, used as default cell bin widths.
    Vec6 component_sigma() const;

private:
    Vec6 mean_;
    Mat6 cov_;
    Eigen::LLT<Mat6> llt_;
};

// Per-step likelihood penalty applied to non-terminal steps. The distance
// variant is the default; the log-density variant charges half the squared
// distance, which equals the Gaussian log-density shifted so the mode costs 0
// (keeps rewards <= 0 and preserves the likelihood ordering exactly).
enum class LikelihoodMode {
    kMahalanobis,
    kGaussianLogDensity,
};

struct RewardSpec {
    double alpha = 1.0e5;  // terminal non-failure penalty magnitude
    double beta = 0.0;     // heuristic weight magnitude
    int horizon = 50;      // T, steps
    LikelihoodMode mode = LikelihoodMode::kMahalanobis;

    void validate() const;
};

struct StepOutcome {
    double mahalanobis = 0.0;
    bool event = false;     // reached the failure set
    bool terminal = false;  // event or horizon
    double heuristic_dist = 0.0;  // pedestrian-vehicle distance, m
};

// Reward cases: failure -> 0; horizon without failure -> -alpha - beta * dist;
// otherwise the negative likelihood penalty. Always <= 0.
double reward(const StepOutcome& outcome, const RewardSpec& spec);

}  // namespace stresslab
