#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "stresslab/actions.hpp"
#include "stresslab/rng.hpp"
#include "stresslab/simulator.hpp"

namespace stresslab {

// Per-step output of a policy: a diagonal Gaussian over actions plus a value
// baseline estimate.
struct PolicyStep {
    Vec6 mean = Vec6::Zero();
    Vec6 log_std = Vec6::Zero();
    double value = 0.0;
};

// Upstream loss gradients for one step, fed back through the matching forward
// pass.
struct PolicyStepGrad {
    Vec6 d_mean = Vec6::Zero();
    Vec6 d_log_std = Vec6::Zero();
    double d_value = 0.0;
};

double diag_gaussian_log_prob(const Vec6& x, const Vec6& mean, const Vec6& log_std);
double diag_gaussian_entropy(const Vec6& log_std);

// History-conditioned stochastic policy over the 6-component disturbance
// vector. Two call paths share the same math: act_step advances an internal
// per-episode state for rollouts; forward re-runs a whole recorded episode and
// caches activations so backward can return exact loss gradients.
class Policy {
  public:
    virtual ~Policy() = default;

    virtual int obs_dim() const = 0;
    virtual std::size_t param_count() const = 0;
    virtual std::vector<double> params() const = 0;
    virtual void set_params(std::span<const double> p) = 0;

    virtual void begin_episode() = 0;
    virtual PolicyStep act_step(std::span<const double> obs) = 0;

    virtual std::vector<PolicyStep> forward(const std::vector<std::vector<double>>& obs) = 0;
    // Must follow the matching forward call; returns dLoss/dParams.
    virtual std::vector<double> backward(const std::vector<PolicyStepGrad>& grads) = 0;
};

// LSTM core (optionally with peephole connections) feeding a linear action
// mean head, a linear value head, and a state-independent log-std vector.
class RecurrentGaussianPolicy final : public Policy {
  public:
    RecurrentGaussianPolicy(int obs_dim, int hidden, bool peephole, std::uint64_t init_seed);

    int obs_dim() const override { return obs_dim_; }
    int hidden_size() const { return hidden_; }
    bool peephole() const { return peephole_; }
    std::size_t param_count() const override;
    std::vector<double> params() const override;
    void set_params(std::span<const double> p) override;

    void begin_episode() override;
    PolicyStep act_step(std::span<const double> obs) override;

    std::vector<PolicyStep> forward(const std::vector<std::vector<double>>& obs) override;
    std::vector<double> backward(const std::vector<PolicyStepGrad>& grads) override;

    nlohmann::json to_json() const;
    static RecurrentGaussianPolicy from_json(const nlohmann::json& j);

    static constexpr double kLogStdMin = -6.90775527898213705;  // ln 1e-3
    static constexpr double kLogStdMax = 2.30258509299404590;   // ln 10

  private:
    struct CellCache {
        Eigen::VectorXd x, h_prev, c_prev;
        Eigen::VectorXd i, f, g, o, c, tanh_c, h;
    };
    void cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                      const Eigen::VectorXd& c_prev, CellCache& cache) const;

    int obs_dim_;
    int hidden_;
    bool peephole_;

    Eigen::MatrixXd w_x_;   // 4H x D, gate order i, f, g, o
    Eigen::MatrixXd w_h_;   // 4H x H
    Eigen::VectorXd b_;     // 4H
    Eigen::VectorXd p_i_, p_f_, p_o_;  // H each, used only with peepholes
    Eigen::MatrixXd w_mean_;   // 6 x H
    Vec6 b_mean_;
    Eigen::VectorXd w_value_;  // H
    double b_value_;
    Vec6 log_std_raw_;

    Eigen::VectorXd act_h_, act_c_;
    std::vector<CellCache> cache_;
    std::vector<std::vector<double>> cached_obs_;
};

// Ten-parameter policy used for gradient verification: mean_i = s * obs[0] +
// b_i, one shared log-std, value = w * obs[0] + b. Small enough to check every
// partial derivative by finite differences.
class LinearGaussianPolicy final : public Policy {
  public:
    explicit LinearGaussianPolicy(std::uint64_t init_seed = 0);

    int obs_dim() const override { return 1; }
    std::size_t param_count() const override { return 10; }
    std::vector<double> params() const override;
    void set_params(std::span<const double> p) override;

    void begin_episode() override {}
    PolicyStep act_step(std::span<const double> obs) override;

    std::vector<PolicyStep> forward(const std::vector<std::vector<double>>& obs) override;
    std::vector<double> backward(const std::vector<PolicyStepGrad>& grads) override;

  private:
    PolicyStep eval(double x) const;

    double scale_;
    Vec6 b_mean_;
    double log_std_raw_;
    double w_value_;
    double b_value_;
    std::vector<double> cached_x_;
};

// Observation fed to policies: normalized step index, the previous action
// scaled per component to [-1, 1] by the action bounds, then the simulator's
// initial-condition features.
int observation_dim(const Simulator& sim);
std::vector<double> build_observation(int t, int horizon, const ActionVector& prev_action,
                                      const ActionBounds& bounds,
                                      const std::vector<double>& initial_conditions);

}  // namespace stresslab
