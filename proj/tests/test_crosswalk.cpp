#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stresslab/crosswalk.hpp"
#include "stresslab/rng.hpp"

using namespace stresslab;

namespace {

ActionVector make_action(double ax, double ay, double npx, double npy, double nvx, double nvy) {
    ActionVector a;
    a.ped_accel = Vec2(ax, ay);
    a.noise_pos = Vec2(npx, npy);
    a.noise_vel = Vec2(nvx, nvy);
    return a;
}

}  // namespace

TEST_CASE("presets carry the published scenario parameters") {
    const ScenarioConfig easy = preset("easy");
    CHECK(easy.ped_pos0.y() == -4.0);
    CHECK(easy.horizon_T == 50);
    CHECK(easy.dt == 0.1);
    CHECK(easy.beta == 1e4);
    CHECK(easy.alpha == 1e5);

    const ScenarioConfig medium = preset("medium");
    CHECK(medium.ped_pos0.y() == -6.0);
    CHECK(medium.beta == 0.0);
    CHECK(medium.horizon_T == 50);

    const ScenarioConfig hard = preset("hard");
    CHECK(hard.ped_pos0.y() == -6.0);
    CHECK(hard.horizon_T == 100);
    CHECK(hard.dt == 0.05);
    CHECK(hard.beta == 0.0);

    CHECK_THROWS_WITH_AS(preset("impossible"),
                         "unknown scenario preset 'impossible'; valid names: easy, medium, hard",
                         std::invalid_argument);
}

TEST_CASE("observation is exactly additive in the noise components") {
    WorldState s;
    s.ped_pos = Vec2(1.0, -3.0);
    s.ped_vel = Vec2(0.5, 1.0);

    const ObservedPedestrian clean = observe(s, ActionVector{});
    CHECK((clean.pos == s.ped_pos));
    CHECK((clean.vel == s.ped_vel));

    const ObservedPedestrian shifted = observe(s, make_action(0, 0, 1.0, 0, 0, 0));
    CHECK(shifted.pos.x() == s.ped_pos.x() + 1.0);
    CHECK(shifted.pos.y() == s.ped_pos.y());

    const ActionVector noise = make_action(0, 0, 0.7, -1.2, 0.3, 0.4);
    ActionVector negated = noise;
    negated.noise_pos = -noise.noise_pos;
    negated.noise_vel = -noise.noise_vel;
    const ObservedPedestrian there = observe(s, noise);
    WorldState s2;
    s2.ped_pos = there.pos;
    s2.ped_vel = there.vel;
    const ObservedPedestrian back = observe(s2, negated);
    CHECK((back.pos - s.ped_pos).norm() < 1e-12);
    CHECK((back.vel - s.ped_vel).norm() < 1e-12);
}

TEST_CASE("idm acceleration matches an independent formula evaluation") {
    const IdmParams p;
    const double b_hard = 3.0, eps_gap = 0.1;

    CHECK(idm_accel(p.v0, std::numeric_limits<double>::infinity(), 0.0, p, b_hard, eps_gap) ==
          0.0);
    CHECK(idm_accel(0.0, 1e9, 0.0, p, b_hard, eps_gap) == doctest::Approx(p.a_max).epsilon(1e-9));

    // Oracle: direct transcription evaluated on plain scalars.
    auto oracle = [&](double v, double gap, double dv) {
        const double g = gap <= 0.0 ? eps_gap : gap;
        const double s_star = 2.0 + v * 0.5 + v * dv / (2.0 * std::sqrt(2.0 * 2.0));
        double a = 2.0 * (1.0 - std::pow(v / 11.17, 4.0) - (s_star / g) * (s_star / g));
        if (a < -b_hard) a = -b_hard;
        if (a > p.a_max) a = p.a_max;
        return a;
    };
    CHECK(idm_accel(11.17, 10.0, 11.17, p, b_hard, eps_gap) ==
          doctest::Approx(oracle(11.17, 10.0, 11.17)).epsilon(1e-12));

    Rng rng(404);
    for (int i = 0; i < 200; ++i) {
        const double v = rng.uniform(0.0, 11.17);
        const double gap = rng.uniform(-5.0, 60.0);
        const double dv = rng.uniform(-5.0, 12.0);
        const double got = idm_accel(v, gap, dv, p, b_hard, eps_gap);
        CHECK(got == doctest::Approx(oracle(v, gap, dv)).epsilon(1e-12));
        CHECK(got >= -b_hard);
        CHECK(got <= p.a_max);
    }

    CHECK(idm_accel(5.0, -2.0, 3.0, p, b_hard, eps_gap) ==
          idm_accel(5.0, eps_gap, 3.0, p, b_hard, eps_gap));
}

TEST_CASE("transition integrates pedestrian and vehicle as expected") {
    ScenarioConfig cfg = preset("easy");
    cfg.ped_pos0 = Vec2(0.0, -50.0);
    cfg.ped_vel0 = Vec2(0.0, 0.0);
    WorldState s = initial_state(cfg);

    WorldState next = transition(s, ActionVector{}, cfg);
    CHECK((next.ped_pos == s.ped_pos));
    CHECK((next.ped_vel == Vec2::Zero()));
    CHECK(next.car_vel == cfg.speed_limit);
    CHECK(next.car_pos.x() == doctest::Approx(s.car_pos.x() + cfg.speed_limit * cfg.dt));
    CHECK(next.t == 1);

    next = transition(s, make_action(0, 1.0, 0, 0, 0, 0), cfg);
    CHECK(next.ped_vel.y() == doctest::Approx(cfg.dt * 1.0));
    CHECK(next.ped_pos.y() == doctest::Approx(-50.0 + cfg.dt * cfg.dt));
}

TEST_CASE("zero-action easy rollout ends in a collision with zero total reward") {
    CrosswalkSim sim(preset("easy"));
    std::vector<ActionVector> zeros(sim.config().horizon_T);
    const Trajectory traj = replay(sim, zeros);
    CHECK(traj.ends_in_failure);
    CHECK(traj.total_reward == 0.0);
    CHECK(traj.length() == 38);
}

TEST_CASE("zero-action medium and hard rollouts reach the horizon safely") {
    for (const char* name : {"medium", "hard"}) {
        CrosswalkSim sim(preset(name));
        std::vector<ActionVector> zeros(sim.config().horizon_T);
        const Trajectory traj = replay(sim, zeros);
        CHECK(!traj.ends_in_failure);
        CHECK(traj.length() == static_cast<std::size_t>(sim.config().horizon_T));
        CHECK(traj.total_reward == -1e5);
        CHECK(traj.steps.back().outcome.heuristic_dist > 0.0);
    }
}

TEST_CASE("collision test uses a closed box around the car") {
    const ScenarioConfig cfg = preset("easy");
    WorldState s;
    s.car_pos = Vec2(0.0, 0.0);

    s.ped_pos = Vec2(-10.0, 0.0);
    CHECK(!check_collision(s, cfg));
    s.ped_pos = Vec2(0.0, 0.0);
    CHECK(check_collision(s, cfg));
    s.ped_pos = Vec2(cfg.collision_box.half_length, cfg.collision_box.half_width);
    CHECK(check_collision(s, cfg));
    s.ped_pos = Vec2(cfg.collision_box.half_length + 1e-9, 0.0);
    CHECK(!check_collision(s, cfg));
}

TEST_CASE("heuristic distance is the euclidean pedestrian-vehicle distance") {
    WorldState s;
    s.car_pos = Vec2(3.0, 0.0);
    s.ped_pos = Vec2(0.0, 4.0);
    CHECK(heuristic_distance(s) == 5.0);
    s.ped_pos = s.car_pos;
    CHECK(heuristic_distance(s) == 0.0);
}

TEST_CASE("pedestrian kinematics are translation invariant") {
    const ScenarioConfig base = preset("medium");
    ScenarioConfig shifted = base;
    const Vec2 d(40.0, -13.0);
    shifted.ped_pos0 = base.ped_pos0 + d;

    Rng rng(91);
    std::vector<ActionVector> actions;
    for (int t = 0; t < 30; ++t) {
        actions.push_back(base.action_bounds.sample_uniform(rng));
    }
    WorldState a = initial_state(base);
    WorldState b = initial_state(shifted);
    for (const auto& act : actions) {
        a = transition(a, act, base);
        b = transition(b, act, shifted);
        CHECK((b.ped_pos - a.ped_pos - d).norm() < 1e-12);
        CHECK((b.ped_vel == a.ped_vel));
    }
}

TEST_CASE("vehicle speed stays within zero and the limit") {
    const ScenarioConfig cfg = preset("easy");
    Rng rng(5150);
    for (int trial = 0; trial < 20; ++trial) {
        WorldState s = initial_state(cfg);
        for (int t = 0; t < cfg.horizon_T; ++t) {
            s = transition(s, cfg.action_bounds.sample_uniform(rng), cfg);
            CHECK(s.car_vel >= 0.0);
            CHECK(s.car_vel <= cfg.speed_limit);
        }
    }
}

TEST_CASE("transition is a pure function of its inputs") {
    const ScenarioConfig cfg = preset("easy");
    Rng rng(66);
    WorldState s = initial_state(cfg);
    for (int t = 0; t < 10; ++t) {
        const ActionVector a = cfg.action_bounds.sample_uniform(rng);
        const WorldState n1 = transition(s, a, cfg);
        const WorldState n2 = transition(s, a, cfg);
        CHECK((n1.car_pos == n2.car_pos));
        CHECK(n1.car_vel == n2.car_vel);
        CHECK((n1.ped_pos == n2.ped_pos));
        CHECK((n1.ped_vel == n2.ped_vel));
        s = n1;
    }
}

TEST_CASE("halving dt and repeating actions preserves pedestrian paths to first order") {
    const ScenarioConfig medium = preset("medium");
    const ScenarioConfig hard = preset("hard");
    REQUIRE(hard.dt == doctest::Approx(medium.dt / 2.0));

    Rng rng(17);
    std::vector<ActionVector> actions;
    for (int t = 0; t < medium.horizon_T; ++t) {
        ActionVector a;
        a.ped_accel = Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        actions.push_back(a);
    }
    WorldState m = initial_state(medium);
    WorldState h = initial_state(hard);
    for (int t = 0; t < medium.horizon_T; ++t) {
        m = transition(m, actions[t], medium);
        h = transition(h, actions[t], hard);
        h = transition(h, actions[t], hard);
        CHECK((h.ped_vel - m.ped_vel).norm() < 1e-9);
        CHECK((h.ped_pos - m.ped_pos).norm() < 0.3);
    }
}

TEST_CASE("scenario config survives a json round trip") {
    ScenarioConfig cfg = preset("hard");
    cfg.response_margin = 1.25;
    cfg.eps_gap = 0.2;
    const ScenarioConfig back = ScenarioConfig::from_json(cfg.to_json());
    CHECK(back.name == cfg.name);
    CHECK(back.dt == cfg.dt);
    CHECK(back.horizon_T == cfg.horizon_T);
    CHECK(back.alpha == cfg.alpha);
    CHECK(back.beta == cfg.beta);
    CHECK((back.ped_pos0 == cfg.ped_pos0));
    CHECK((back.car_pos0 == cfg.car_pos0));
    CHECK(back.car_vel0 == cfg.car_vel0);
    CHECK(back.speed_limit == cfg.speed_limit);
    CHECK((back.action_model.mean() == cfg.action_model.mean()));
    CHECK((back.action_model.covariance() == cfg.action_model.covariance()));
    CHECK((back.action_bounds.lo == cfg.action_bounds.lo));
    CHECK((back.action_bounds.hi == cfg.action_bounds.hi));
    CHECK(back.idm.time_headway == cfg.idm.time_headway);
    CHECK(back.b_hard == cfg.b_hard);
    CHECK(back.eps_gap == cfg.eps_gap);
    CHECK(back.response_margin == cfg.response_margin);
    CHECK(back.collision_box.half_width == cfg.collision_box.half_width);

    nlohmann::json patch;
    patch["horizon_T"] = 64;
    const ScenarioConfig patched = ScenarioConfig::from_json(patch);
    CHECK(patched.horizon_T == 64);
    CHECK(patched.dt == 0.1);
}

TEST_CASE("invalid configurations are rejected with a field name") {
    ScenarioConfig cfg = preset("easy");
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = preset("easy");
    cfg.car_vel0 = cfg.speed_limit + 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = preset("easy");
    cfg.collision_box.half_width = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = preset("easy");
    cfg.ped_pos0 = cfg.car_pos0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    cfg = preset("easy");
    cfg.horizon_T = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("sim wrapper enforces the step contract") {
    CrosswalkSim sim(preset("easy"));
    auto h = sim.reset();
    CHECK(!sim.is_terminal(*h));

    const StepOutcome first = sim.step(*h, ActionVector{});
    CHECK(first.mahalanobis == 0.0);
    CHECK(!first.event);

    while (!sim.is_terminal(*h)) {
        sim.step(*h, ActionVector{});
    }
    CHECK_THROWS_AS(sim.step(*h, ActionVector{}), std::logic_error);
    CHECK(static_cast<CrosswalkHandle&>(*h).event);
}

TEST_CASE("likelihood penalty applies to the raw action, dynamics to the clamped one") {
    CrosswalkSim sim(preset("easy"));
    const ActionVector wild = make_action(10.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    const ActionVector at_bound = make_action(2.0, 0.0, 0.0, 0.0, 0.0, 0.0);

    auto ha = sim.reset();
    auto hb = sim.reset();
    const StepOutcome oa = sim.step(*ha, wild);
    const StepOutcome ob = sim.step(*hb, at_bound);
    CHECK(oa.heuristic_dist == ob.heuristic_dist);
    CHECK(oa.mahalanobis == doctest::Approx(10.0 / std::sqrt(0.1)).epsilon(1e-12));
    CHECK(ob.mahalanobis == doctest::Approx(2.0 / std::sqrt(0.1)).epsilon(1e-12));
}

TEST_CASE("initial condition features are scaled and stable") {
    CrosswalkSim sim(preset("medium"));
    const std::vector<double> ic = sim.initial_conditions();
    REQUIRE(ic.size() == 7);
    CHECK(ic[1] == doctest::Approx(-6.0 / 20.0));
    CHECK(ic[4] == doctest::Approx(-35.0 / 20.0));
    CHECK(ic[6] == doctest::Approx(11.17 / 20.0));
    CHECK(sim.initial_conditions() == ic);
}
