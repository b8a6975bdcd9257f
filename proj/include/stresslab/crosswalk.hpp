#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "stresslab/simulator.hpp"

namespace stresslab {

struct IdmParams {
    double a_max = 2.0;
    double b_comfort = 2.0;
    double v0 = 11.17;
    double s0_gap = 2.0;
    double time_headway = 0.5;
    double delta = 4.0;
};

struct CollisionBox {
    double half_length = 2.5;
    double half_width = 1.4;
};

struct ScenarioConfig {
    std::string name = "custom";
    double dt = 0.1;
    int horizon_T = 50;
    double alpha = 1e5;
    double beta = 0.0;
    LikelihoodMode mode = LikelihoodMode::kMahalanobis;

    Vec2 ped_pos0 = Vec2(0.0, -4.0);
    Vec2 ped_vel0 = Vec2(0.0, 1.0);
    Vec2 car_pos0 = Vec2(-35.0, 0.0);
    double car_vel0 = 11.17;
    double speed_limit = 11.17;

    ActionModel action_model;
    ActionBounds action_bounds = ActionBounds::symmetric(2.0, 5.0, 2.0);

    IdmParams idm;
    double b_hard = 3.0;
    double eps_gap = 0.1;
    double lane_half_width = 1.75;
    double response_margin = 1.0;
    CollisionBox collision_box;
    Vec2 crosswalk_origin = Vec2(0.0, 0.0);

    void validate() const;
    RewardSpec reward_spec() const;

    nlohmann::json to_json() const;
    static ScenarioConfig from_json(const nlohmann::json& j);
};

// Named parameter sets; throws on unknown names, listing the valid ones.
ScenarioConfig preset(const std::string& name);

struct WorldState {
    int t = 0;
    Vec2 car_pos = Vec2::Zero();
    double car_vel = 0.0;
    Vec2 ped_pos = Vec2::Zero();
    Vec2 ped_vel = Vec2::Zero();
};

struct ObservedPedestrian {
    Vec2 pos = Vec2::Zero();
    Vec2 vel = Vec2::Zero();
};

ObservedPedestrian observe(const WorldState& state, const ActionVector& a);

// Intelligent driver model with a hard-deceleration clamp. Non-positive gaps
// collapse to eps_gap so the function is total.
double idm_accel(double car_vel, double gap, double closing_speed, const IdmParams& params,
                 double b_hard, double eps_gap);

WorldState initial_state(const ScenarioConfig& cfg);
WorldState transition(const WorldState& state, const ActionVector& a, const ScenarioConfig& cfg);
bool check_collision(const WorldState& state, const ScenarioConfig& cfg);
double heuristic_distance(const WorldState& state);

class CrosswalkHandle final : public SimHandle {
  public:
    WorldState state;
    bool event = false;
    bool terminal = false;

    std::unique_ptr<SimHandle> clone() const override {
        return std::make_unique<CrosswalkHandle>(*this);
    }
};

class CrosswalkSim final : public Simulator {
  public:
    explicit CrosswalkSim(ScenarioConfig cfg);

    std::string scenario_id() const override { return cfg_.name; }
    const RewardSpec& reward_spec() const override { return spec_; }
    const ActionBounds& action_bounds() const override { return cfg_.action_bounds; }
    const ActionModel& action_model() const override { return cfg_.action_model; }
    const ScenarioConfig& config() const { return cfg_; }

    std::vector<double> initial_conditions() const override;

    std::unique_ptr<SimHandle> reset() const override;
    bool is_terminal(const SimHandle& handle) const override;
    StepOutcome step(SimHandle& handle, const ActionVector& action) const override;

  private:
    ScenarioConfig cfg_;
    RewardSpec spec_;
};

}  // namespace stresslab
