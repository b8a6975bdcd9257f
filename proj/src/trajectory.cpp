#include "stresslab/trajectory.hpp"

#include <cstdio>
#include <sstream>

namespace stresslab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

void Trajectory::append(const ActionVector& action, const StepOutcome& outcome,
                        double step_reward) {
    steps.push_back({action, outcome, step_reward});
    total_reward += step_reward;
    ends_in_failure = outcome.event;
}

std::vector<ActionVector> Trajectory::action_sequence() const {
    std::vector<ActionVector> actions;
    actions.reserve(steps.size());
    for (const auto& s : steps) {
        actions.push_back(s.action);
    }
    return actions;
}

std::string Trajectory::to_csv() const {
    std::ostringstream out;
    out << "t,a1,a2,a3,a4,a5,a6,mahalanobis,reward,event\n";
    for (std::size_t t = 0; t < steps.size(); ++t) {
        const auto& s = steps[t];
        const Vec6 a = s.action.as_vec6();
        out << t;
        for (int i = 0; i < kActionDim; ++i) {
            out << ',' << format_double(a[i]);
        }
        out << ',' << format_double(s.outcome.mahalanobis);
        out << ',' << format_double(s.reward);
        out << ',' << (s.outcome.event ? 1 : 0) << '\n';
    }
    return out.str();
}

nlohmann::json Trajectory::to_json() const {
    nlohmann::json j;
    j["scenario_id"] = scenario_id;
    j["total_reward"] = total_reward;
    j["ends_in_failure"] = ends_in_failure;
    j["truncated"] = truncated;
    nlohmann::json steps_json = nlohmann::json::array();
    for (const auto& s : steps) {
        const Vec6 a = s.action.as_vec6();
        nlohmann::json sj;
        sj["action"] = {a[0], a[1], a[2], a[3], a[4], a[5]};
        sj["mahalanobis"] = s.outcome.mahalanobis;
        sj["event"] = s.outcome.event;
        sj["terminal"] = s.outcome.terminal;
        sj["heuristic_dist"] = s.outcome.heuristic_dist;
        sj["reward"] = s.reward;
        steps_json.push_back(std::move(sj));
    }
    j["steps"] = std::move(steps_json);
    return j;
}

Trajectory Trajectory::from_json(const nlohmann::json& j) {
    Trajectory traj;
    traj.scenario_id = j.value("scenario_id", std::string());
    traj.truncated = j.value("truncated", false);
    for (const auto& sj : j.at("steps")) {
        ActionVector action;
        Vec6 v;
        const auto& arr = sj.at("action");
        for (int i = 0; i < kActionDim; ++i) {
            v[i] = arr.at(i).get<double>();
        }
        action = ActionVector::from_vec6(v);
        StepOutcome outcome;
        outcome.mahalanobis = sj.at("mahalanobis").get<double>();
        outcome.event = sj.at("event").get<bool>();
        outcome.terminal = sj.at("terminal").get<bool>();
        outcome.heuristic_dist = sj.at("heuristic_dist").get<double>();
        traj.append(action, outcome, sj.at("reward").get<double>());
    }
    return traj;
}

}  // namespace stresslab
