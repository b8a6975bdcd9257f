#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "stresslab/rng.hpp"
#include "stresslab/simulator.hpp"
#include "stresslab/trajectory.hpp"
#include "toy_sim.hpp"

using namespace stresslab;
using testing::ToyConfig;
using testing::ToySim;
using testing::scalar_action;

namespace {

// Independent oracle: solve Sigma*y = d by Gaussian elimination with partial
// pivoting on plain arrays, then return sqrt(d . y).
double mahalanobis_oracle(const Mat6& sigma, const Vec6& d) {
    constexpr int n = kActionDim;
    double m[n][n + 1];
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            m[i][j] = sigma(i, j);
        }
        m[i][n] = d[i];
    }
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int row = col + 1; row < n; ++row) {
            if (std::abs(m[row][col]) > std::abs(m[pivot][col])) {
                pivot = row;
            }
        }
        for (int j = 0; j <= n; ++j) {
            std::swap(m[col][j], m[pivot][j]);
        }
        for (int row = col + 1; row < n; ++row) {
            const double f = m[row][col] / m[col][col];
            for (int j = col; j <= n; ++j) {
                m[row][j] -= f * m[col][j];
            }
        }
    }
    double y[n];
    for (int i = n - 1; i >= 0; --i) {
        double s = m[i][n];
        for (int j = i + 1; j < n; ++j) {
            s -= m[i][j] * y[j];
        }
        y[i] = s / m[i][i];
    }
    double quad = 0.0;
    for (int i = 0; i < n; ++i) {
        quad += d[i] * y[i];
    }
    return std::sqrt(quad);
}

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

}  // namespace

TEST_CASE("rng reproduces the same stream for the same seed") {
    Rng a(1234), b(1234);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    Rng c(1234), d(1235);
    int diff = 0;
    for (int i = 0; i < 100; ++i) {
        diff += c.next_u64() != d.next_u64();
    }
    CHECK(diff > 90);
}

TEST_CASE("rng derived streams are distinct and reproducible") {
    Rng base(77);
    Rng s1 = base.derive(1);
    Rng s2 = base.derive(2);
    Rng s1_again = Rng(77).derive(1);
    bool any_diff = false;
    for (int i = 0; i < 64; ++i) {
        const auto a = s1.next_u64();
        any_diff |= a != s2.next_u64();
        CHECK(a == s1_again.next_u64());
    }
    CHECK(any_diff);
}

TEST_CASE("rng uniform01 stays in the half-open unit interval") {
    Rng rng(5);
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("rng normal draws have standard moments") {
    Rng rng(99);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("action vector round trips through its flat form") {
    ActionVector a;
    a.ped_accel = Vec2(1.0, -2.0);
    a.noise_pos = Vec2(0.25, 3.5);
    a.noise_vel = Vec2(-0.125, 0.0);
    const ActionVector b = ActionVector::from_vec6(a.as_vec6());
    CHECK(a == b);
    CHECK(a.all_finite());
    ActionVector bad = a;
    bad.noise_vel.y() = std::numeric_limits<double>::quiet_NaN();
    CHECK(!bad.all_finite());
}

TEST_CASE("action bounds validate and clamp componentwise") {
    ActionBounds b = ActionBounds::symmetric(1.0, 2.0, 0.5);
    b.validate();
    ActionVector a;
    a.ped_accel = Vec2(3.0, -3.0);
    a.noise_pos = Vec2(-5.0, 1.5);
    a.noise_vel = Vec2(0.4, 9.0);
    const ActionVector c = b.clamp(a);
    CHECK((c.ped_accel == Vec2(1.0, -1.0)));
    CHECK((c.noise_pos == Vec2(-2.0, 1.5)));
    CHECK((c.noise_vel == Vec2(0.4, 0.5)));

    ActionBounds bad = b;
    bad.lo[3] = 10.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("uniform action samples respect the bounds") {
    ActionBounds b = ActionBounds::symmetric(2.0, 5.0, 2.0);
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const Vec6 v = b.sample_uniform(rng).as_vec6();
        for (int j = 0; j < kActionDim; ++j) {
            CHECK(v[j] >= b.lo[j]);
            CHECK(v[j] <= b.hi[j]);
        }
    }
}

TEST_CASE("action model rejects covariances that are not SPD") {
    CHECK_THROWS_AS(ActionModel(Vec6::Zero(), -Mat6::Identity()), std::invalid_argument);
    Mat6 asym = Mat6::Identity();
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(ActionModel(Vec6::Zero(), asym), std::invalid_argument);
    Mat6 indef = Mat6::Identity();
    indef(2, 2) = -1.0;
    CHECK_THROWS_AS(ActionModel(Vec6::Zero(), indef), std::invalid_argument);
}

TEST_CASE("mahalanobis of the mean is zero") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        Vec6 mu;
        for (int i = 0; i < kActionDim; ++i) {
            mu[i] = rng.uniform(-3.0, 3.0);
        }
        ActionModel model(mu, 0.37 * Mat6::Identity());
        CHECK(model.mahalanobis(mu) == 0.0);
    }
}

TEST_CASE("mahalanobis unit displacement under identity covariance") {
    ActionModel model(Vec6::Zero(), Mat6::Identity());
    Vec6 a = Vec6::Zero();
    a[0] = 1.0;
    CHECK(model.mahalanobis(a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mahalanobis matches an explicit linear solve") {
    Vec6 diag;
    diag << 4.0, 1.0, 1.0, 1.0, 1.0, 1.0;
    ActionModel scaled(Vec6::Zero(), diag.asDiagonal());
    Vec6 a = Vec6::Zero();
    a[0] = 2.0;
    CHECK(scaled.mahalanobis(a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(close_rel(scaled.mahalanobis(a), mahalanobis_oracle(diag.asDiagonal(), a), 1e-12));

    Rng rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
        Mat6 b;
        for (int i = 0; i < kActionDim; ++i) {
            for (int j = 0; j < kActionDim; ++j) {
                b(i, j) = rng.uniform(-1.0, 1.0);
            }
        }
        const Mat6 sigma = b * b.transpose() + 0.5 * Mat6::Identity();
        Vec6 mu, x;
        for (int i = 0; i < kActionDim; ++i) {
            mu[i] = rng.uniform(-2.0, 2.0);
            x[i] = mu[i] + rng.uniform(-3.0, 3.0);
        }
        ActionModel model(mu, sigma);
        const double got = model.mahalanobis(x);
        const double want = mahalanobis_oracle(sigma, Vec6(x - mu));
        CHECK(close_rel(got, want, 1e-6));
    }
}

TEST_CASE("mahalanobis metric properties") {
    Rng rng(8);
    Mat6 b;
    for (int i = 0; i < kActionDim; ++i) {
        for (int j = 0; j < kActionDim; ++j) {
            b(i, j) = rng.uniform(-1.0, 1.0);
        }
    }
    const Mat6 sigma = b * b.transpose() + Mat6::Identity();
    Vec6 mu;
    for (int i = 0; i < kActionDim; ++i) {
        mu[i] = rng.uniform(-1.0, 1.0);
    }
    ActionModel model(mu, sigma);
    for (int trial = 0; trial < 100; ++trial) {
        Vec6 d;
        for (int i = 0; i < kActionDim; ++i) {
            d[i] = rng.uniform(-4.0, 4.0);
        }
        const double plus = model.mahalanobis(Vec6(mu + d));
        const double minus = model.mahalanobis(Vec6(mu - d));
        CHECK(plus >= 0.0);
        CHECK(plus == doctest::Approx(minus).epsilon(1e-10));
        if (d.norm() > 1e-9) {
            CHECK(plus > 0.0);
        }
    }
}

TEST_CASE("reward covers the three outcome cases") {
    RewardSpec spec;
    spec.alpha = 1e5;
    spec.beta = 0.0;
    spec.horizon = 50;

    StepOutcome event_out;
    event_out.event = true;
    event_out.terminal = true;
    event_out.mahalanobis = 7.0;
    CHECK(reward(event_out, spec) == 0.0);

    StepOutcome end_out;
    end_out.terminal = true;
    end_out.heuristic_dist = 12.0;
    CHECK(reward(end_out, spec) == -1e5);
    spec.beta = 1e4;
    CHECK(reward(end_out, spec) == -1e5 - 1e4 * 12.0);

    StepOutcome mid_out;
    mid_out.mahalanobis = 2.5;
    CHECK(reward(mid_out, spec) == -2.5);
    spec.mode = LikelihoodMode::kGaussianLogDensity;
    CHECK(reward(mid_out, spec) == -0.5 * 2.5 * 2.5);
}

TEST_CASE("reward is never positive and zero only on the event") {
    RewardSpec spec;
    spec.alpha = 1e5;
    spec.beta = 1e4;
    spec.horizon = 10;
    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        StepOutcome out;
        out.mahalanobis = rng.uniform(0.0, 10.0);
        out.terminal = rng.uniform01() < 0.3;
        out.event = out.terminal && rng.uniform01() < 0.5;
        out.heuristic_dist = rng.uniform(0.0, 30.0);
        const double r = reward(out, spec);
        CHECK(r <= 0.0);
        if (r == 0.0) {
            CHECK(out.event);
        }
    }
}

TEST_CASE("reward spec validation rejects bad configs") {
    RewardSpec spec;
    spec.horizon = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.horizon = 10;
    spec.alpha = -1.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.alpha = 0.0;
    spec.beta = -2.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

    ToyConfig cfg;
    cfg.horizon = 0;
    CHECK_THROWS_AS(ToySim{cfg}, std::invalid_argument);
}

TEST_CASE("toy sim terminal flags and usage errors") {
    ToySim sim;
    auto h = sim.reset();
    CHECK(!sim.is_terminal(*h));

    auto out = sim.step(*h, scalar_action(0.0));
    CHECK(out.mahalanobis == 0.0);
    CHECK(!out.event);

    for (int t = 1; t < 4; ++t) {
        out = sim.step(*h, scalar_action(0.0));
    }
    CHECK(out.terminal);
    CHECK(!out.event);
    CHECK(sim.is_terminal(*h));
    CHECK_THROWS_AS(sim.step(*h, scalar_action(0.0)), std::logic_error);

    auto h2 = sim.reset();
    auto e = sim.step(*h2, scalar_action(-3.0));
    CHECK(!e.event);
    e = sim.step(*h2, scalar_action(-3.0));
    e = sim.step(*h2, scalar_action(-3.0));
    CHECK(e.event);
    CHECK(e.terminal);
    CHECK(sim.is_terminal(*h2));
}

TEST_CASE("identical resets stepped identically agree bitwise") {
    ToySim sim;
    auto a = sim.reset();
    auto b = sim.reset();
    Rng rng(3);
    for (int t = 0; t < 4; ++t) {
        const ActionVector act = sim.action_bounds().sample_uniform(rng);
        const StepOutcome oa = sim.step(*a, act);
        const StepOutcome ob = sim.step(*b, act);
        CHECK(oa.mahalanobis == ob.mahalanobis);
        CHECK(oa.event == ob.event);
        CHECK(oa.terminal == ob.terminal);
        CHECK(oa.heuristic_dist == ob.heuristic_dist);
    }
}

TEST_CASE("cloned handles continue identically") {
    ToySim sim;
    auto a = sim.reset();
    sim.step(*a, scalar_action(-0.5));
    auto b = a->clone();
    const StepOutcome oa = sim.step(*a, scalar_action(-0.25));
    const StepOutcome ob = sim.step(*b, scalar_action(-0.25));
    CHECK(oa.heuristic_dist == ob.heuristic_dist);
    CHECK(oa.event == ob.event);
}

TEST_CASE("replay of an empty action list yields an empty trajectory") {
    ToySim sim;
    const Trajectory traj = replay(sim, {});
    CHECK(traj.length() == 0);
    CHECK(traj.total_reward == 0.0);
    CHECK(!traj.ends_in_failure);
    CHECK(!traj.truncated);
}

TEST_CASE("replay is bit-exact and prefix-consistent") {
    ToySim sim;
    Rng rng(42);
    std::vector<ActionVector> actions;
    for (int t = 0; t < 4; ++t) {
        actions.push_back(sim.action_bounds().sample_uniform(rng));
    }
    const Trajectory t1 = replay(sim, actions);
    const Trajectory t2 = replay(sim, actions);
    CHECK(t1.to_csv() == t2.to_csv());
    CHECK(t1.total_reward == t2.total_reward);

    std::vector<ActionVector> prefix(actions.begin(), actions.begin() + 2);
    const Trajectory tp = replay(sim, prefix);
    REQUIRE(tp.length() <= t1.length());
    for (std::size_t i = 0; i < tp.length(); ++i) {
        CHECK(tp.steps[i].reward == t1.steps[i].reward);
        CHECK(tp.steps[i].outcome.heuristic_dist == t1.steps[i].outcome.heuristic_dist);
    }
}

TEST_CASE("replay truncates actions past the terminal step") {
    ToyConfig cfg;
    cfg.x0 = 1.0;
    ToySim sim(cfg);
    std::vector<ActionVector> actions(4, scalar_action(-1.0));
    const Trajectory traj = replay(sim, actions);
    CHECK(traj.length() == 1);
    CHECK(traj.ends_in_failure);
    CHECK(traj.truncated);
    CHECK(traj.total_reward == 0.0);

    std::vector<ActionVector> exact(1, scalar_action(-1.0));
    const Trajectory t2 = replay(sim, exact);
    CHECK(!t2.truncated);
}

TEST_CASE("trajectory bookkeeping invariants hold on random rollouts") {
    ToySim sim;
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ActionVector> actions;
        const int len = 1 + static_cast<int>(rng.uniform_int(6));
        for (int t = 0; t < len; ++t) {
            actions.push_back(sim.action_bounds().sample_uniform(rng));
        }
        const Trajectory traj = replay(sim, actions);
        CHECK(traj.length() <= static_cast<std::size_t>(sim.reward_spec().horizon));
        double sum = 0.0;
        for (const auto& s : traj.steps) {
            sum += s.reward;
        }
        CHECK(traj.total_reward == doctest::Approx(sum).epsilon(1e-12));
        if (!traj.steps.empty()) {
            CHECK(traj.ends_in_failure == traj.steps.back().outcome.event);
        }
    }
}

TEST_CASE("all-mean rollout pays only the terminal penalty") {
    ToyConfig cfg;
    cfg.alpha = 1e5;
    cfg.beta = 1e4;
    ToySim sim(cfg);
    std::vector<ActionVector> actions(4, scalar_action(0.0));
    const Trajectory traj = replay(sim, actions);
    CHECK(!traj.ends_in_failure);
    const double dist = traj.steps.back().outcome.heuristic_dist;
    CHECK(traj.total_reward == -cfg.alpha - cfg.beta * dist);
}

TEST_CASE("trajectory serialization round trips") {
    ToySim sim;
    Rng rng(12);
    std::vector<ActionVector> actions;
    for (int t = 0; t < 4; ++t) {
        actions.push_back(sim.action_bounds().sample_uniform(rng));
    }
    const Trajectory traj = replay(sim, actions);
    const nlohmann::json j = traj.to_json();
    const Trajectory back = Trajectory::from_json(j);
    REQUIRE(back.length() == traj.length());
    for (std::size_t i = 0; i < traj.length(); ++i) {
        CHECK(back.steps[i].action == traj.steps[i].action);
        CHECK(back.steps[i].reward == traj.steps[i].reward);
        CHECK(back.steps[i].outcome.mahalanobis == traj.steps[i].outcome.mahalanobis);
    }
    CHECK(back.total_reward == doctest::Approx(traj.total_reward).epsilon(1e-15));
    CHECK(back.ends_in_failure == traj.ends_in_failure);

    const std::string csv = traj.to_csv();
    CHECK(csv.substr(0, csv.find('\n')) == "t,a1,a2,a3,a4,a5,a6,mahalanobis,reward,event");
    CHECK(csv == traj.to_csv());
}

// With per-component variance 1/(2*pi) the Gaussian action density at a is
// exp(-pi*|a|^2) with unit normalization, so the log-density reward mode makes
// per-step reward equal to per-step log-likelihood outside the event step.
// Enumerating every discretized action sequence then checks that the
// best-reward failure is also a most-likely failure.
TEST_CASE("best-reward failure is a most-likely failure (brute force)") {
    for (const double grid_step : {1.0, 0.5}) {
        ToyConfig cfg;
        cfg.x0 = 2.5;
        cfg.horizon = 4;
        cfg.sigma2 = 1.0 / (2.0 * std::numbers::pi);
        cfg.mode = LikelihoodMode::kGaussianLogDensity;
        ToySim sim(cfg);

        std::vector<double> grid;
        for (double a = -1.0; a <= 1.0 + 1e-12; a += grid_step) {
            grid.push_back(a);
        }
        const int n = static_cast<int>(grid.size());
        std::map<std::string, std::pair<double, double>> failures;  // key -> (reward, loglik)
        const int total = n * n * n * n;
        for (int code = 0; code < total; ++code) {
            int c = code;
            std::vector<ActionVector> actions;
            for (int t = 0; t < 4; ++t) {
                actions.push_back(scalar_action(grid[c % n]));
                c /= n;
            }
            const Trajectory traj = replay(sim, actions);
            if (!traj.ends_in_failure) {
                continue;
            }
            std::string key;
            double loglik = 0.0;
            for (const auto& s : traj.steps) {
                const double a = s.action.ped_accel.x();
                key += format_double(a) + "|";
                loglik += -std::numbers::pi * a * a;
            }
            failures.emplace(key, std::make_pair(traj.total_reward, loglik));
        }
        REQUIRE(!failures.empty());

        double best_reward = -1e300, best_loglik = -1e300;
        for (const auto& [key, rl] : failures) {
            best_reward = std::max(best_reward, rl.first);
            best_loglik = std::max(best_loglik, rl.second);
        }
        for (const auto& [key, rl] : failures) {
            if (rl.first >= best_reward - 1e-9) {
                CHECK(rl.second >= best_loglik - 1e-9);
            }
        }
    }
}
