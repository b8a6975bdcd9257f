#include "stresslab/crosswalk.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace stresslab {

namespace {

nlohmann::json vec_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(v[i]);
    }
    return arr;
}

template <typename VecT>
VecT vec_from_json(const nlohmann::json& arr) {
    VecT v;
    if (static_cast<Eigen::Index>(arr.size()) != v.size()) {
        throw std::invalid_argument("config: vector field has wrong length");
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = arr.at(i).get<double>();
    }
    return v;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (dt <= 0.0) {
        throw std::invalid_argument("scenario.dt: must be > 0");
    }
    if (horizon_T < 1) {
        throw std::invalid_argument("scenario.horizon_T: must be >= 1");
    }
    if (alpha < 0.0 || beta < 0.0) {
        throw std::invalid_argument("scenario.alpha/beta: must be >= 0");
    }
    if (car_vel0 > speed_limit) {
        throw std::invalid_argument("scenario.car_vel0: exceeds speed_limit");
    }
    if (car_vel0 < 0.0 || speed_limit <= 0.0) {
        throw std::invalid_argument("scenario.car_vel0/speed_limit: must be nonnegative");
    }
    if (collision_box.half_length <= 0.0 || collision_box.half_width <= 0.0) {
        throw std::invalid_argument("scenario.collision_box: dimensions must be > 0");
    }
    if (idm.a_max <= 0.0 || idm.b_comfort <= 0.0 || idm.v0 <= 0.0 || b_hard <= 0.0 ||
        eps_gap <= 0.0) {
        throw std::invalid_argument("scenario.idm: accelerations and gaps must be > 0");
    }
    action_bounds.validate();
    if (check_collision(initial_state(*this), *this)) {
        throw std::invalid_argument("scenario.ped_pos0/car_pos0: initial state already collides");
    }
}

RewardSpec ScenarioConfig::reward_spec() const {
    RewardSpec spec;
    spec.alpha = alpha;
    spec.beta = beta;
    spec.horizon = horizon_T;
    spec.mode = mode;
    return spec;
}

nlohmann::json ScenarioConfig::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["dt"] = dt;
    j["horizon_T"] = horizon_T;
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["mode"] = mode == LikelihoodMode::kMahalanobis ? "mahalanobis" : "log_density";
    j["ped_pos0"] = vec_to_json(ped_pos0);
    j["ped_vel0"] = vec_to_json(ped_vel0);
    j["car_pos0"] = vec_to_json(car_pos0);
    j["car_vel0"] = car_vel0;
    j["speed_limit"] = speed_limit;
    j["action_mean"] = vec_to_json(action_model.mean());
    nlohmann::json cov = nlohmann::json::array();
    for (int i = 0; i < kActionDim; ++i) {
        cov.push_back(vec_to_json(action_model.covariance().row(i)));
    }
    j["action_covariance"] = std::move(cov);
    j["action_lo"] = vec_to_json(action_bounds.lo);
    j["action_hi"] = vec_to_json(action_bounds.hi);
    j["idm"] = {{"a_max", idm.a_max},       {"b_comfort", idm.b_comfort},
                {"v0", idm.v0},             {"s0_gap", idm.s0_gap},
                {"time_headway", idm.time_headway}, {"delta", idm.delta}};
    j["b_hard"] = b_hard;
    j["eps_gap"] = eps_gap;
    j["lane_half_width"] = lane_half_width;
    j["response_margin"] = response_margin;
    j["collision_half_length"] = collision_box.half_length;
    j["collision_half_width"] = collision_box.half_width;
    j["crosswalk_origin"] = vec_to_json(crosswalk_origin);
    return j;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
    ScenarioConfig cfg;
    cfg.name = j.value("name", cfg.name);
    cfg.dt = j.value("dt", cfg.dt);
    cfg.horizon_T = j.value("horizon_T", cfg.horizon_T);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.beta = j.value("beta", cfg.beta);
    if (j.contains("mode")) {
        const std::string m = j.at("mode").get<std::string>();
        if (m == "mahalanobis") {
            cfg.mode = LikelihoodMode::kMahalanobis;
        } else if (m == "log_density") {
            cfg.mode = LikelihoodMode::kGaussianLogDensity;
        } else {
            throw std::invalid_argument("scenario.mode: expected mahalanobis or log_density");
        }
    }
    if (j.contains("ped_pos0")) cfg.ped_pos0 = vec_from_json<Vec2>(j.at("ped_pos0"));
    if (j.contains("ped_vel0")) cfg.ped_vel0 = vec_from_json<Vec2>(j.at("ped_vel0"));
    if (j.contains("car_pos0")) cfg.car_pos0 = vec_from_json<Vec2>(j.at("car_pos0"));
    cfg.car_vel0 = j.value("car_vel0", cfg.car_vel0);
    cfg.speed_limit = j.value("speed_limit", cfg.speed_limit);
    if (j.contains("action_mean") || j.contains("action_covariance")) {
        Vec6 mean = j.contains("action_mean") ? vec_from_json<Vec6>(j.at("action_mean"))
                                              : cfg.action_model.mean();
        Mat6 cov = cfg.action_model.covariance();
        if (j.contains("action_covariance")) {
            const auto& rows = j.at("action_covariance");
            if (rows.size() != kActionDim) {
                throw std::invalid_argument("scenario.action_covariance: expected 6 rows");
            }
            for (int i = 0; i < kActionDim; ++i) {
                cov.row(i) = vec_from_json<Vec6>(rows.at(i)).transpose();
            }
        }
        cfg.action_model = ActionModel(mean, cov);
    }
    if (j.contains("action_lo")) cfg.action_bounds.lo = vec_from_json<Vec6>(j.at("action_lo"));
    if (j.contains("action_hi")) cfg.action_bounds.hi = vec_from_json<Vec6>(j.at("action_hi"));
    if (j.contains("idm")) {
        const auto& ji = j.at("idm");
        cfg.idm.a_max = ji.value("a_max", cfg.idm.a_max);
        cfg.idm.b_comfort = ji.value("b_comfort", cfg.idm.b_comfort);
        cfg.idm.v0 = ji.value("v0", cfg.idm.v0);
        cfg.idm.s0_gap = ji.value("s0_gap", cfg.idm.s0_gap);
        cfg.idm.time_headway = ji.value("time_headway", cfg.idm.time_headway);
        cfg.idm.delta = ji.value("delta", cfg.idm.delta);
    }
    cfg.b_hard = j.value("b_hard", cfg.b_hard);
    cfg.eps_gap = j.value("eps_gap", cfg.eps_gap);
    cfg.lane_half_width = j.value("lane_half_width", cfg.lane_half_width);
    cfg.response_margin = j.value("response_margin", cfg.response_margin);
    cfg.collision_box.half_length = j.value("collision_half_length", cfg.collision_box.half_length);
    cfg.collision_box.half_width = j.value("collision_half_width", cfg.collision_box.half_width);
    if (j.contains("crosswalk_origin")) {
        cfg.crosswalk_origin = vec_from_json<Vec2>(j.at("crosswalk_origin"));
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig preset(const std::string& name) {
    ScenarioConfig cfg;
    cfg.name = name;
    if (name == "easy") {
        cfg.ped_pos0 = Vec2(0.0, -4.0);
        cfg.horizon_T = 50;
        cfg.dt = 0.1;
        cfg.beta = 1e4;
    } else if (name == "medium") {
        cfg.ped_pos0 = Vec2(0.0, -6.0);
        cfg.horizon_T = 50;
        cfg.dt = 0.1;
        cfg.beta = 0.0;
    } else if (name == "hard") {
        cfg.ped_pos0 = Vec2(0.0, -6.0);
        cfg.horizon_T = 100;
        cfg.dt = 0.05;
        cfg.beta = 0.0;
    } else {
        throw std::invalid_argument("unknown scenario preset '" + name +
                                    "'; valid names: easy, medium, hard");
    }
    cfg.validate();
    return cfg;
}

ObservedPedestrian observe(const WorldState& state, const ActionVector& a) {
    ObservedPedestrian obs;
    obs.pos = state.ped_pos + a.noise_pos;
    obs.vel = state.ped_vel + a.noise_vel;
    return obs;
}

double idm_accel(double car_vel, double gap, double closing_speed, const IdmParams& params,
                 double b_hard, double eps_gap) {
    const double g = gap <= 0.0 ? eps_gap : gap;
    const double s_star = params.s0_gap + car_vel * params.time_headway +
                          car_vel * closing_speed /
                              (2.0 * std::sqrt(params.a_max * params.b_comfort));
    const double ratio = s_star / g;
    const double a =
        params.a_max * (1.0 - std::pow(car_vel / params.v0, params.delta) - ratio * ratio);
    return std::min(std::max(a, -b_hard), params.a_max);
}

WorldState initial_state(const ScenarioConfig& cfg) {
    WorldState s;
    s.t = 0;
    s.car_pos = cfg.car_pos0;
    s.car_vel = cfg.car_vel0;
    s.ped_pos = cfg.ped_pos0;
    s.ped_vel = cfg.ped_vel0;
    return s;
}

WorldState transition(const WorldState& state, const ActionVector& a,
                      const ScenarioConfig& cfg) {
    const ObservedPedestrian obs = observe(state, a);

    // The car responds to the observed pedestrian only when it is ahead,
    // within the road span (plus margin), and already in-lane or heading
    // toward it. Otherwise free-road driving.
    const bool ahead = obs.pos.x() > state.car_pos.x();
    const bool in_span = std::abs(obs.pos.y()) < cfg.lane_half_width + cfg.response_margin;
    const bool in_lane = std::abs(obs.pos.y()) <= cfg.lane_half_width;
    const bool heading_in = (obs.pos.y() > 0.0 && obs.vel.y() < 0.0) ||
                            (obs.pos.y() < 0.0 && obs.vel.y() > 0.0);
    double gap = std::numeric_limits<double>::infinity();
    double closing = 0.0;
    if (ahead && in_span && (in_lane || heading_in)) {
        gap = obs.pos.x() - state.car_pos.x() - cfg.collision_box.half_length;
        closing = state.car_vel - obs.vel.x();
    }
    const double accel = idm_accel(state.car_vel, gap, closing, cfg.idm, cfg.b_hard, cfg.eps_gap);

    WorldState next;
    next.t = state.t + 1;
    next.car_vel = std::min(std::max(state.car_vel + accel * cfg.dt, 0.0), cfg.speed_limit);
    next.car_pos = state.car_pos + Vec2(next.car_vel * cfg.dt, 0.0);
    next.ped_vel = state.ped_vel + a.ped_accel * cfg.dt;
    next.ped_pos = state.ped_pos + next.ped_vel * cfg.dt;
    return next;
}

bool check_collision(const WorldState& state, const ScenarioConfig& cfg) {
    const Vec2 d = state.ped_pos - state.car_pos;
    return std::abs(d.x()) <= cfg.collision_box.half_length &&
           std::abs(d.y()) <= cfg.collision_box.half_width;
}

double heuristic_distance(const WorldState& state) {
    return (state.car_pos - state.ped_pos).norm();
}

CrosswalkSim::CrosswalkSim(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    spec_ = cfg_.reward_spec();
    spec_.validate();
}

std::vector<double> CrosswalkSim::initial_conditions() const {
    constexpr double kScale = 1.0 / 20.0;
    return {cfg_.ped_pos0.x() * kScale, cfg_.ped_pos0.y() * kScale,
            cfg_.ped_vel0.x() * kScale, cfg_.ped_vel0.y() * kScale,
            cfg_.car_pos0.x() * kScale, cfg_.car_pos0.y() * kScale,
            cfg_.car_vel0 * kScale};
}

std::unique_ptr<SimHandle> CrosswalkSim::reset() const {
    auto h = std::make_unique<CrosswalkHandle>();
    h->state = initial_state(cfg_);
    return h;
}

bool CrosswalkSim::is_terminal(const SimHandle& handle) const {
    return static_cast<const CrosswalkHandle&>(handle).terminal;
}

StepOutcome CrosswalkSim::step(SimHandle& handle, const ActionVector& action) const {
    auto& h = static_cast<CrosswalkHandle&>(handle);
    if (h.terminal) {
        throw std::logic_error("crosswalk: step called on terminal handle");
    }
    StepOutcome out;
    out.mahalanobis = cfg_.action_model.mahalanobis(action.as_vec6());
    const ActionVector clamped = cfg_.action_bounds.clamp(action);
    h.state = transition(h.state, clamped, cfg_);
    h.event = check_collision(h.state, cfg_);
    h.terminal = h.event || h.state.t >= cfg_.horizon_T;
    out.event = h.event;
    out.terminal = h.terminal;
    out.heuristic_dist = heuristic_distance(h.state);
    return out;
}

}  // namespace stresslab
