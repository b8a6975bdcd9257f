#include "stresslab/policy_opt.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stresslab {

void OptimConfig::validate() const {
    if (!(clip_range > 0.0) || !std::isfinite(clip_range))
        throw std::invalid_argument("clip_range must be finite and > 0");
    if (!(kl_coef >= 0.0)) throw std::invalid_argument("kl_coef must be >= 0");
    if (!(gamma > 0.0) || !(gamma <= 1.0))
        throw std::invalid_argument("gamma must lie in (0, 1]");
    if (!(lambda >= 0.0) || !(lambda <= 1.0))
        throw std::invalid_argument("lambda must lie in [0, 1]");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (epochs_per_update < 1) throw std::invalid_argument("epochs_per_update must be >= 1");
    if (!(entropy_coef >= 0.0)) throw std::invalid_argument("entropy_coef must be >= 0");
    if (!(value_coef >= 0.0)) throw std::invalid_argument("value_coef must be >= 0");
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
    std::vector<double> out(rewards.size(), 0.0);
    double acc = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    return out;
}

std::vector<double> gae_advantages(std::span<const double> rewards,
                                   std::span<const double> values, double gamma, double lambda) {
    if (rewards.size() != values.size()) {
        throw std::invalid_argument("rewards and values must have equal length");
    }
    std::vector<double> out(rewards.size(), 0.0);
    double acc = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        const double v_next = (t + 1 < values.size()) ? values[t + 1] : 0.0;
        const double delta = rewards[t] + gamma * v_next - values[t];
        acc = delta + gamma * lambda * acc;
        out[t] = acc;
    }
    return out;
}

void AdamState::step(std::vector<double>& params, std::span<const double> grad, double lr) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    if (m.size() != params.size()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
        t = 0;
    }
    t += 1;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + kEps);
    }
}

PPODiagnostics ppo_loss(Policy& policy, const std::vector<Episode>& batch,
                        const OptimConfig& config, std::vector<double>* grad_out) {
    config.validate();
    PPODiagnostics diag;
    std::size_t total_steps = 0;
    for (const Episode& ep : batch) total_steps += ep.length();
    if (total_steps == 0) return diag;
    const double inv_n = 1.0 / static_cast<double>(total_steps);

    std::vector<double> grad(grad_out ? policy.param_count() : 0, 0.0);
    double loss = 0.0;
    double kl_sum = 0.0;
    std::size_t clipped = 0;
    int flat_step = 0;

    for (const Episode& ep : batch) {
        const std::vector<double> advantages =
            gae_advantages(ep.rewards, ep.values, config.gamma, config.lambda);
        const std::vector<double> returns = discounted_returns(ep.rewards, config.gamma);
        const std::vector<PolicyStep> out = policy.forward(ep.observations);
        std::vector<PolicyStepGrad> step_grads(out.size());

        for (std::size_t t = 0; t < out.size(); ++t, ++flat_step) {
            const PolicyStep& ps = out[t];
            const double lp_new = diag_gaussian_log_prob(ep.actions[t], ps.mean, ps.log_std);
            const double ratio = std::exp(lp_new - ep.log_probs[t]);
            const double adv = advantages[t];
            const double lo = 1.0 - config.clip_range;
            const double hi = 1.0 + config.clip_range;
            const double unclipped = ratio * adv;
            const double clamped_ratio = std::min(std::max(ratio, lo), hi);
            const double surrogate = std::min(unclipped, clamped_ratio * adv);
            const bool active = unclipped <= clamped_ratio * adv;
            if (ratio < lo || ratio > hi) clipped += 1;

            double kl = 0.0;
            for (int i = 0; i < kActionDim; ++i) {
                const double so = std::exp(ep.old_log_stds[t][i]);
                const double sn = std::exp(ps.log_std[i]);
                const double dm = ep.old_means[t][i] - ps.mean[i];
                kl += ps.log_std[i] - ep.old_log_stds[t][i] +
                      (so * so + dm * dm) / (2.0 * sn * sn) - 0.5;
            }
            const double entropy = diag_gaussian_entropy(ps.log_std);
            const double v_err = ps.value - returns[t];

            const double step_loss = -surrogate + config.kl_coef * kl -
                                     config.entropy_coef * entropy +
                                     config.value_coef * v_err * v_err;
            if (!std::isfinite(step_loss)) {
                diag.aborted = true;
                diag.abort_step = flat_step;
                diag.loss = std::numeric_limits<double>::quiet_NaN();
                return diag;
            }
            loss += step_loss * inv_n;
            kl_sum += kl;

            if (grad_out) {
                PolicyStepGrad& sg = step_grads[t];
                const double d_lp = active ? -adv * ratio : 0.0;
                for (int i = 0; i < kActionDim; ++i) {
                    const double sn = std::exp(ps.log_std[i]);
                    const double z = (ep.actions[t][i] - ps.mean[i]) / sn;
                    const double so = std::exp(ep.old_log_stds[t][i]);
                    const double dm = ep.old_means[t][i] - ps.mean[i];
                    sg.d_mean[i] = (d_lp * (z / sn) - config.kl_coef * dm / (sn * sn)) * inv_n;
                    sg.d_log_std[i] =
                        (d_lp * (z * z - 1.0) +
                         config.kl_coef * (1.0 - (so * so + dm * dm) / (sn * sn)) -
                         config.entropy_coef) *
                        inv_n;
                }
                sg.d_value = config.value_coef * 2.0 * v_err * inv_n;
            }
        }

        if (grad_out) {
            const std::vector<double> ep_grad = policy.backward(step_grads);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += ep_grad[i];
        }
    }

    diag.loss = loss;
    diag.mean_kl = kl_sum * inv_n;
    diag.clip_fraction = static_cast<double>(clipped) * inv_n;
    if (grad_out) {
        for (std::size_t i = 0; i < grad.size(); ++i) {
            if (!std::isfinite(grad[i])) {
                diag.aborted = true;
                diag.abort_step = flat_step;
                return diag;
            }
        }
        *grad_out = std::move(grad);
    }
    return diag;
}

PPODiagnostics ppo_update(Policy& policy, const std::vector<Episode>& batch,
                          const OptimConfig& config, AdamState& adam) {
    PPODiagnostics diag;
    for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
        std::vector<double> grad;
        diag = ppo_loss(policy, batch, config, &grad);
        if (diag.aborted) return diag;
        std::vector<double> params = policy.params();
        adam.step(params, grad, config.learning_rate);
        policy.set_params(params);
    }
    return diag;
}

CollectedEpisode collect_episode(const Simulator& sim, Policy& policy, Rng& rng,
                                 std::span<const ActionVector> prefix_actions) {
    const RewardSpec& spec = sim.reward_spec();
    const ActionBounds& bounds = sim.action_bounds();
    const std::vector<double> ic = sim.initial_conditions();

    CollectedEpisode out;
    out.trajectory.scenario_id = sim.scenario_id();
    auto handle = sim.reset();
    int t = 0;
    ActionVector prev;

    for (const ActionVector& a : prefix_actions) {
        if (sim.is_terminal(*handle)) {
            throw std::logic_error("replayed prefix reached a terminal state early");
        }
        const StepOutcome outcome = sim.step(*handle, a);
        out.trajectory.append(a, outcome, reward(outcome, spec));
        prev = a;
        t += 1;
    }

    policy.begin_episode();
    while (!sim.is_terminal(*handle)) {
        const std::vector<double> obs = build_observation(t, spec.horizon, prev, bounds, ic);
        const PolicyStep ps = policy.act_step(obs);
        Vec6 a;
        for (int i = 0; i < kActionDim; ++i) {
            a[i] = ps.mean[i] + std::exp(ps.log_std[i]) * rng.normal();
        }
        const ActionVector action = ActionVector::from_vec6(a);
        const StepOutcome outcome = sim.step(*handle, action);
        const double r = reward(outcome, spec);

        out.episode.observations.push_back(obs);
        out.episode.actions.push_back(a);
        out.episode.rewards.push_back(r);
        out.episode.log_probs.push_back(diag_gaussian_log_prob(a, ps.mean, ps.log_std));
        out.episode.old_means.push_back(ps.mean);
        out.episode.old_log_stds.push_back(ps.log_std);
        out.episode.values.push_back(ps.value);

        out.trajectory.append(action, outcome, r);
        prev = action;
        t += 1;
    }
    return out;
}

void DRLParams::validate() const {
    optim.validate();
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
}

namespace {

bool better_failure(const Trajectory& candidate, const std::optional<Trajectory>& incumbent) {
    if (!candidate.ends_in_failure) return false;
    if (!incumbent) return true;
    if (candidate.total_reward != incumbent->total_reward) {
        return candidate.total_reward > incumbent->total_reward;
    }
    return candidate.length() < incumbent->length();
}

}  // namespace

DRLResult drl_solve(const Simulator& sim, const DRLParams& params, Rng& rng) {
    params.validate();
    DRLResult result;
    result.policy = std::make_shared<RecurrentGaussianPolicy>(
        observation_dim(sim), params.hidden, params.peephole, rng.derive(0).next_u64());
    AdamState adam;

    for (int iter = 0; iter < params.iterations; ++iter) {
        const auto iter_start = std::chrono::steady_clock::now();
        std::vector<Episode> batch;
        batch.reserve(params.batch_size);
        for (int e = 0; e < params.batch_size; ++e) {
            const std::uint64_t stream =
                static_cast<std::uint64_t>(iter) * params.batch_size + e + 1;
            Rng episode_rng = rng.derive(stream);
            CollectedEpisode collected = collect_episode(sim, *result.policy, episode_rng);
            result.rollouts += 1;
            if (better_failure(collected.trajectory, result.best_failure)) {
                result.best_failure = std::move(collected.trajectory);
            }
            batch.push_back(std::move(collected.episode));
        }
        ppo_update(*result.policy, batch, params.optim, adam);

        IterationRecord record;
        record.iteration = iter + 1;
        record.found_failure = result.best_failure.has_value();
        record.best_reward = record.found_failure ? result.best_failure->total_reward
                                                  : -std::numeric_limits<double>::infinity();
        record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - iter_start)
                             .count();
        result.log.push_back(record);
    }
    return result;
}

void BAConfig::validate(std::size_t expert_len) const {
    optim.validate();
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
    if (epochs_per_step) {
        if (*epochs_per_step < 1) throw std::invalid_argument("epochs_per_step must be >= 1");
        if (static_cast<std::size_t>(iterations) < expert_len * *epochs_per_step) {
            throw std::invalid_argument(
                "iterations budget too small for expert length * epochs_per_step");
        }
    }
}

int ba_start_index(std::size_t expert_len, const BAConfig& config, int k) {
    if (expert_len == 0) return 0;
    if (k >= config.iterations) return 0;
    if (config.epochs_per_step) {
        const int s = static_cast<int>(expert_len) - 1 - k / *config.epochs_per_step;
        return std::max(0, s);
    }
    const double frac = static_cast<double>(config.iterations - 1 - k) / config.iterations;
    return static_cast<int>(std::floor(static_cast<double>(expert_len) * frac));
}

BAResult backwards_algorithm(const Simulator& sim, const Trajectory& expert,
                             const BAConfig& config, Rng& rng) {
    if (!expert.ends_in_failure || expert.steps.empty()) {
        throw std::invalid_argument("expert trajectory must end in a failure");
    }
    config.validate(expert.length());
    const std::vector<ActionVector> expert_actions = expert.action_sequence();
    const Trajectory check = replay(sim, expert_actions);
    if (!check.ends_in_failure || check.total_reward != expert.total_reward ||
        check.length() != expert.length()) {
        throw std::invalid_argument("expert trajectory does not replay to its recorded outcome");
    }

    BAResult result;
    result.robustified = expert;
    result.policy = std::make_shared<RecurrentGaussianPolicy>(
        observation_dim(sim), config.hidden, config.peephole, rng.derive(0).next_u64());
    AdamState adam;

    for (int k = 0; k < config.iterations; ++k) {
        const auto iter_start = std::chrono::steady_clock::now();
        const int start = ba_start_index(expert.length(), config, k);
        const std::span<const ActionVector> prefix(expert_actions.data(),
                                                   static_cast<std::size_t>(start));
        std::vector<Episode> batch;
        batch.reserve(config.batch_size);
        for (int e = 0; e < config.batch_size; ++e) {
            const std::uint64_t stream =
                static_cast<std::uint64_t>(k) * config.batch_size + e + 1;
            Rng episode_rng = rng.derive(stream);
            CollectedEpisode collected = collect_episode(sim, *result.policy, episode_rng, prefix);
            result.rollouts += 1;
            if (collected.trajectory.ends_in_failure &&
                (collected.trajectory.total_reward > result.robustified.total_reward ||
                 (collected.trajectory.total_reward == result.robustified.total_reward &&
                  collected.trajectory.length() < result.robustified.length()))) {
                result.robustified = std::move(collected.trajectory);
            }
            batch.push_back(std::move(collected.episode));
        }
        ppo_update(*result.policy, batch, config.optim, adam);

        IterationRecord record;
        record.iteration = k + 1;
        record.found_failure = true;
        record.best_reward = result.robustified.total_reward;
        record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - iter_start)
                             .count();
        result.log.push_back(record);
    }
    return result;
}

}  // namespace stresslab
