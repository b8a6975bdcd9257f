#include "stresslab/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace stresslab {

namespace {

constexpr double kLog2Pi = 1.83787706640934548;

double clamp_log_std(double raw) {
    return std::min(std::max(raw, RecurrentGaussianPolicy::kLogStdMin),
                    RecurrentGaussianPolicy::kLogStdMax);
}

bool log_std_interior(double raw) {
    return raw > RecurrentGaussianPolicy::kLogStdMin && raw < RecurrentGaussianPolicy::kLogStdMax;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double diag_gaussian_log_prob(const Vec6& x, const Vec6& mean, const Vec6& log_std) {
    double lp = 0.0;
    for (int i = 0; i < kActionDim; ++i) {
        const double z = (x[i] - mean[i]) * std::exp(-log_std[i]);
        lp += -0.5 * z * z - log_std[i] - 0.5 * kLog2Pi;
    }
    return lp;
}

double diag_gaussian_entropy(const Vec6& log_std) {
    double h = 0.0;
    for (int i = 0; i < kActionDim; ++i) {
        h += log_std[i] + 0.5 * (1.0 + kLog2Pi);
    }
    return h;
}

RecurrentGaussianPolicy::RecurrentGaussianPolicy(int obs_dim, int hidden, bool peephole,
                                                 std::uint64_t init_seed)
    : obs_dim_(obs_dim), hidden_(hidden), peephole_(peephole) {
    if (obs_dim < 1 || hidden < 1) {
        throw std::invalid_argument("policy dimensions must be positive");
    }
    Rng rng(init_seed);
    auto init_matrix = [&](Eigen::MatrixXd& m, int rows, int cols, int fan_in) {
        m.resize(rows, cols);
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-s, s);
        }
    };
    init_matrix(w_x_, 4 * hidden, obs_dim, obs_dim);
    init_matrix(w_h_, 4 * hidden, hidden, hidden);
    b_ = Eigen::VectorXd::Zero(4 * hidden);
    b_.segment(hidden, hidden).setOnes();  // open forget gates at start
    p_i_ = Eigen::VectorXd::Zero(hidden);
    p_f_ = Eigen::VectorXd::Zero(hidden);
    p_o_ = Eigen::VectorXd::Zero(hidden);
    Eigen::MatrixXd wm;
    init_matrix(wm, kActionDim, hidden, hidden);
    w_mean_ = wm;
    b_mean_ = Vec6::Zero();
    Eigen::MatrixXd wv;
    init_matrix(wv, 1, hidden, hidden);
    w_value_ = wv.row(0);
    b_value_ = 0.0;
    log_std_raw_ = Vec6::Zero();
    begin_episode();
}

std::size_t RecurrentGaussianPolicy::param_count() const {
    std::size_t n = static_cast<std::size_t>(4 * hidden_) * obs_dim_ +
                    static_cast<std::size_t>(4 * hidden_) * hidden_ + 4 * hidden_ +
                    static_cast<std::size_t>(kActionDim) * hidden_ + kActionDim + hidden_ + 1 +
                    kActionDim;
    if (peephole_) n += 3 * static_cast<std::size_t>(hidden_);
    return n;
}

std::vector<double> RecurrentGaussianPolicy::params() const {
    std::vector<double> out;
    out.reserve(param_count());
    auto push_matrix = [&](const Eigen::MatrixXd& m) {
        for (int r = 0; r < m.rows(); ++r) {
            for (int c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
        }
    };
    auto push_vector = [&](const Eigen::VectorXd& v) {
        for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
    };
    push_matrix(w_x_);
    push_matrix(w_h_);
    push_vector(b_);
    if (peephole_) {
        push_vector(p_i_);
        push_vector(p_f_);
        push_vector(p_o_);
    }
    push_matrix(w_mean_);
    for (int i = 0; i < kActionDim; ++i) out.push_back(b_mean_[i]);
    push_vector(w_value_);
    out.push_back(b_value_);
    for (int i = 0; i < kActionDim; ++i) out.push_back(log_std_raw_[i]);
    return out;
}

void RecurrentGaussianPolicy::set_params(std::span<const double> p) {
    if (p.size() != param_count()) {
        throw std::invalid_argument("parameter vector has wrong length");
    }
    std::size_t k = 0;
    auto read_matrix = [&](Eigen::MatrixXd& m) {
        for (int r = 0; r < m.rows(); ++r) {
            for (int c = 0; c < m.cols(); ++c) m(r, c) = p[k++];
        }
    };
    auto read_vector = [&](Eigen::VectorXd& v) {
        for (int i = 0; i < v.size(); ++i) v[i] = p[k++];
    };
    read_matrix(w_x_);
    read_matrix(w_h_);
    read_vector(b_);
    if (peephole_) {
        read_vector(p_i_);
        read_vector(p_f_);
        read_vector(p_o_);
    }
    Eigen::MatrixXd wm(kActionDim, hidden_);
    read_matrix(wm);
    w_mean_ = wm;
    for (int i = 0; i < kActionDim; ++i) b_mean_[i] = p[k++];
    read_vector(w_value_);
    b_value_ = p[k++];
    for (int i = 0; i < kActionDim; ++i) log_std_raw_[i] = p[k++];
}

void RecurrentGaussianPolicy::begin_episode() {
    act_h_ = Eigen::VectorXd::Zero(hidden_);
    act_c_ = Eigen::VectorXd::Zero(hidden_);
}

void RecurrentGaussianPolicy::cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                           const Eigen::VectorXd& c_prev, CellCache& cache) const {
    const Eigen::VectorXd pre = w_x_ * x + w_h_ * h_prev + b_;
    cache.x = x;
    cache.h_prev = h_prev;
    cache.c_prev = c_prev;
    cache.i.resize(hidden_);
    cache.f.resize(hidden_);
    cache.g.resize(hidden_);
    cache.o.resize(hidden_);
    cache.c.resize(hidden_);
    cache.tanh_c.resize(hidden_);
    for (int j = 0; j < hidden_; ++j) {
        double a_i = pre[j];
        double a_f = pre[hidden_ + j];
        if (peephole_) {
            a_i += p_i_[j] * c_prev[j];
            a_f += p_f_[j] * c_prev[j];
        }
        cache.i[j] = sigmoid(a_i);
        cache.f[j] = sigmoid(a_f);
        cache.g[j] = std::tanh(pre[2 * hidden_ + j]);
        cache.c[j] = cache.f[j] * c_prev[j] + cache.i[j] * cache.g[j];
        double a_o = pre[3 * hidden_ + j];
        if (peephole_) a_o += p_o_[j] * cache.c[j];
        cache.o[j] = sigmoid(a_o);
        cache.tanh_c[j] = std::tanh(cache.c[j]);
    }
    cache.h = cache.o.cwiseProduct(cache.tanh_c);
}

PolicyStep RecurrentGaussianPolicy::act_step(std::span<const double> obs) {
    if (static_cast<int>(obs.size()) != obs_dim_) {
        throw std::invalid_argument("observation has wrong dimension");
    }
    Eigen::VectorXd x(obs_dim_);
    for (int i = 0; i < obs_dim_; ++i) x[i] = obs[i];
    CellCache cache;
    cell_forward(x, act_h_, act_c_, cache);
    act_h_ = cache.h;
    act_c_ = cache.c;
    PolicyStep step;
    step.mean = w_mean_ * cache.h + b_mean_;
    for (int i = 0; i < kActionDim; ++i) step.log_std[i] = clamp_log_std(log_std_raw_[i]);
    step.value = w_value_.dot(cache.h) + b_value_;
    return step;
}

std::vector<PolicyStep> RecurrentGaussianPolicy::forward(
    const std::vector<std::vector<double>>& obs) {
    cache_.clear();
    cache_.reserve(obs.size());
    cached_obs_ = obs;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden_);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(hidden_);
    std::vector<PolicyStep> out;
    out.reserve(obs.size());
    for (const std::vector<double>& o : obs) {
        if (static_cast<int>(o.size()) != obs_dim_) {
            throw std::invalid_argument("observation has wrong dimension");
        }
        Eigen::VectorXd x(obs_dim_);
        for (int i = 0; i < obs_dim_; ++i) x[i] = o[i];
        CellCache cache;
        cell_forward(x, h, c, cache);
        h = cache.h;
        c = cache.c;
        PolicyStep step;
        step.mean = w_mean_ * cache.h + b_mean_;
        for (int i = 0; i < kActionDim; ++i) step.log_std[i] = clamp_log_std(log_std_raw_[i]);
        step.value = w_value_.dot(cache.h) + b_value_;
        cache_.push_back(std::move(cache));
        out.push_back(step);
    }
    return out;
}

std::vector<double> RecurrentGaussianPolicy::backward(const std::vector<PolicyStepGrad>& grads) {
    if (grads.size() != cache_.size()) {
        throw std::logic_error("backward called with mismatched step count");
    }
    Eigen::MatrixXd d_wx = Eigen::MatrixXd::Zero(4 * hidden_, obs_dim_);
    Eigen::MatrixXd d_wh = Eigen::MatrixXd::Zero(4 * hidden_, hidden_);
    Eigen::VectorXd d_b = Eigen::VectorXd::Zero(4 * hidden_);
    Eigen::VectorXd d_pi = Eigen::VectorXd::Zero(hidden_);
    Eigen::VectorXd d_pf = Eigen::VectorXd::Zero(hidden_);
    Eigen::VectorXd d_po = Eigen::VectorXd::Zero(hidden_);
    Eigen::MatrixXd d_wmean = Eigen::MatrixXd::Zero(kActionDim, hidden_);
    Vec6 d_bmean = Vec6::Zero();
    Eigen::VectorXd d_wvalue = Eigen::VectorXd::Zero(hidden_);
    double d_bvalue = 0.0;
    Vec6 d_logstd = Vec6::Zero();

    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hidden_);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hidden_);

    for (std::size_t t = cache_.size(); t-- > 0;) {
        const CellCache& cc = cache_[t];
        const PolicyStepGrad& sg = grads[t];

        for (int i = 0; i < kActionDim; ++i) {
            if (log_std_interior(log_std_raw_[i])) d_logstd[i] += sg.d_log_std[i];
        }

        Eigen::VectorXd dh = dh_next;
        dh += w_mean_.transpose() * sg.d_mean;
        dh += w_value_ * sg.d_value;
        d_wmean += sg.d_mean * cc.h.transpose();
        d_bmean += sg.d_mean;
        d_wvalue += sg.d_value * cc.h;
        d_bvalue += sg.d_value;

        Eigen::VectorXd da_i(hidden_), da_f(hidden_), da_g(hidden_), da_o(hidden_);
        Eigen::VectorXd dc(hidden_);
        for (int j = 0; j < hidden_; ++j) {
            const double do_j = dh[j] * cc.tanh_c[j];
            da_o[j] = do_j * cc.o[j] * (1.0 - cc.o[j]);
            double dc_j = dc_next[j] + dh[j] * cc.o[j] * (1.0 - cc.tanh_c[j] * cc.tanh_c[j]);
            if (peephole_) dc_j += da_o[j] * p_o_[j];
            dc[j] = dc_j;
            const double df_j = dc_j * cc.c_prev[j];
            da_f[j] = df_j * cc.f[j] * (1.0 - cc.f[j]);
            const double di_j = dc_j * cc.g[j];
            da_i[j] = di_j * cc.i[j] * (1.0 - cc.i[j]);
            const double dg_j = dc_j * cc.i[j];
            da_g[j] = dg_j * (1.0 - cc.g[j] * cc.g[j]);
        }

        Eigen::VectorXd da(4 * hidden_);
        da.segment(0, hidden_) = da_i;
        da.segment(hidden_, hidden_) = da_f;
        da.segment(2 * hidden_, hidden_) = da_g;
        da.segment(3 * hidden_, hidden_) = da_o;

        d_wx += da * cc.x.transpose();
        d_wh += da * cc.h_prev.transpose();
        d_b += da;
        if (peephole_) {
            d_pi += da_i.cwiseProduct(cc.c_prev);
            d_pf += da_f.cwiseProduct(cc.c_prev);
            d_po += da_o.cwiseProduct(cc.c);
        }

        dh_next = w_h_.transpose() * da;
        dc_next = dc.cwiseProduct(cc.f);
        if (peephole_) {
            dc_next += da_i.cwiseProduct(p_i_) + da_f.cwiseProduct(p_f_);
        }
    }

    std::vector<double> out;
    out.reserve(param_count());
    auto push_matrix = [&](const Eigen::MatrixXd& m) {
        for (int r = 0; r < m.rows(); ++r) {
            for (int c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
        }
    };
    auto push_vector = [&](const Eigen::VectorXd& v) {
        for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
    };
    push_matrix(d_wx);
    push_matrix(d_wh);
    push_vector(d_b);
    if (peephole_) {
        push_vector(d_pi);
        push_vector(d_pf);
        push_vector(d_po);
    }
    push_matrix(d_wmean);
    for (int i = 0; i < kActionDim; ++i) out.push_back(d_bmean[i]);
    push_vector(d_wvalue);
    out.push_back(d_bvalue);
    for (int i = 0; i < kActionDim; ++i) out.push_back(d_logstd[i]);
    return out;
}

nlohmann::json RecurrentGaussianPolicy::to_json() const {
    nlohmann::json j;
    j["type"] = "recurrent_gaussian";
    j["obs_dim"] = obs_dim_;
    j["hidden"] = hidden_;
    j["peephole"] = peephole_;
    j["log_std_min"] = kLogStdMin;
    j["log_std_max"] = kLogStdMax;
    j["params"] = params();
    return j;
}

RecurrentGaussianPolicy RecurrentGaussianPolicy::from_json(const nlohmann::json& j) {
    if (j.at("type").get<std::string>() != "recurrent_gaussian") {
        throw std::invalid_argument("not a recurrent_gaussian checkpoint");
    }
    RecurrentGaussianPolicy policy(j.at("obs_dim").get<int>(), j.at("hidden").get<int>(),
                                   j.at("peephole").get<bool>(), 0);
    const auto params = j.at("params").get<std::vector<double>>();
    policy.set_params(params);
    return policy;
}

LinearGaussianPolicy::LinearGaussianPolicy(std::uint64_t init_seed) {
    Rng rng(init_seed);
    scale_ = rng.uniform(-0.1, 0.1);
    for (int i = 0; i < kActionDim; ++i) b_mean_[i] = rng.uniform(-0.1, 0.1);
    log_std_raw_ = 0.0;
    w_value_ = rng.uniform(-0.1, 0.1);
    b_value_ = 0.0;
}

std::vector<double> LinearGaussianPolicy::params() const {
    std::vector<double> out = {scale_};
    for (int i = 0; i < kActionDim; ++i) out.push_back(b_mean_[i]);
    out.push_back(log_std_raw_);
    out.push_back(w_value_);
    out.push_back(b_value_);
    return out;
}

void LinearGaussianPolicy::set_params(std::span<const double> p) {
    if (p.size() != 10) throw std::invalid_argument("parameter vector has wrong length");
    scale_ = p[0];
    for (int i = 0; i < kActionDim; ++i) b_mean_[i] = p[1 + i];
    log_std_raw_ = p[7];
    w_value_ = p[8];
    b_value_ = p[9];
}

PolicyStep LinearGaussianPolicy::eval(double x) const {
    PolicyStep step;
    for (int i = 0; i < kActionDim; ++i) {
        step.mean[i] = scale_ * x + b_mean_[i];
        step.log_std[i] = clamp_log_std(log_std_raw_);
    }
    step.value = w_value_ * x + b_value_;
    return step;
}

PolicyStep LinearGaussianPolicy::act_step(std::span<const double> obs) {
    if (obs.empty()) throw std::invalid_argument("observation has wrong dimension");
    return eval(obs[0]);
}

std::vector<PolicyStep> LinearGaussianPolicy::forward(
    const std::vector<std::vector<double>>& obs) {
    cached_x_.clear();
    std::vector<PolicyStep> out;
    for (const std::vector<double>& o : obs) {
        if (o.empty()) throw std::invalid_argument("observation has wrong dimension");
        cached_x_.push_back(o[0]);
        out.push_back(eval(o[0]));
    }
    return out;
}

std::vector<double> LinearGaussianPolicy::backward(const std::vector<PolicyStepGrad>& grads) {
    if (grads.size() != cached_x_.size()) {
        throw std::logic_error("backward called with mismatched step count");
    }
    std::vector<double> out(10, 0.0);
    for (std::size_t t = 0; t < grads.size(); ++t) {
        const double x = cached_x_[t];
        const PolicyStepGrad& sg = grads[t];
        for (int i = 0; i < kActionDim; ++i) {
            out[0] += sg.d_mean[i] * x;
            out[1 + i] += sg.d_mean[i];
            if (log_std_interior(log_std_raw_)) out[7] += sg.d_log_std[i];
        }
        out[8] += sg.d_value * x;
        out[9] += sg.d_value;
    }
    return out;
}

int observation_dim(const Simulator& sim) {
    return 1 + kActionDim + static_cast<int>(sim.initial_conditions().size());
}

std::vector<double> build_observation(int t, int horizon, const ActionVector& prev_action,
                                      const ActionBounds& bounds,
                                      const std::vector<double>& initial_conditions) {
    std::vector<double> obs;
    obs.reserve(1 + kActionDim + initial_conditions.size());
    obs.push_back(static_cast<double>(t) / std::max(1, horizon));
    const Vec6 a = prev_action.as_vec6();
    for (int i = 0; i < kActionDim; ++i) {
        const double span = bounds.hi[i] - bounds.lo[i];
        obs.push_back(span > 0.0 ? (2.0 * a[i] - bounds.lo[i] - bounds.hi[i]) / span : 0.0);
    }
    obs.insert(obs.end(), initial_conditions.begin(), initial_conditions.end());
    return obs;
}

}  // namespace stresslab
