#include "fraug/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "fraug/error.hpp"
#include "fraug/kernels.hpp"

namespace fraug {
namespace {

void check_model(const DLinearModel& m) {
    if (m.lookback < 1 || m.horizon < 1) throw Error("model look-back and horizon must be at least 1");
    if (m.kernel < 1 || m.kernel % 2 == 0) throw Error("moving-average kernel must be odd");
}

bool all_finite(const DLinearModel& m) {
    for (auto p : m.parameters())
        for (double v : p)
            if (!std::isfinite(v)) return false;
    return true;
}

// Adam state over the four parameter blocks.
class Adam {
public:
    Adam(const DLinearModel& model, const TrainConfig& cfg) : cfg_(cfg) {
        for (std::size_t i = 0; i < 4; ++i) {
            const auto n = model.parameters()[i].size();
            m_[i].assign(n, 0.0);
            v_[i].assign(n, 0.0);
        }
    }

    void step(DLinearModel& model, const Gradients& grads) {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        auto params = model.parameters();
        const auto g = grads.parameters();
        for (std::size_t blk = 0; blk < 4; ++blk) {
            auto& m = m_[blk];
            auto& v = v_[blk];
            for (std::size_t i = 0; i < params[blk].size(); ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[blk][i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[blk][i] * g[blk][i];
                const double mhat = m[i] / c1;
                const double vhat = v[i] / c2;
                params[blk][i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
            }
        }
    }

private:
    TrainConfig cfg_;
    std::size_t t_ = 0;
    std::array<std::vector<double>, 4> m_;
    std::array<std::vector<double>, 4> v_;
};

nlohmann::json to_json(std::span<const double> v) { return nlohmann::json(std::vector<double>(v.begin(), v.end())); }

}  // namespace

DLinearModel DLinearModel::zeros(std::size_t lookback, std::size_t horizon, std::size_t kernel) {
    DLinearModel m;
    m.lookback = lookback;
    m.horizon = horizon;
    m.kernel = kernel;
    check_model(m);
    m.w_trend = Matrix(horizon, lookback);
    m.w_seasonal = Matrix(horizon, lookback);
    m.b_trend.assign(horizon, 0.0);
    m.b_seasonal.assign(horizon, 0.0);
    return m;
}

DLinearModel DLinearModel::initialized(std::size_t lookback, std::size_t horizon, std::size_t kernel, Rng& rng) {
    DLinearModel m = zeros(lookback, horizon, kernel);
    const double bound = 1.0 / static_cast<double>(lookback);
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& w : m.w_trend.values()) w = u(rng);
    for (double& w : m.w_seasonal.values()) w = u(rng);
    return m;
}

std::array<std::span<double>, 4> DLinearModel::parameters() {
    return {std::span<double>(w_trend.values()), std::span<double>(w_seasonal.values()), std::span<double>(b_trend),
            std::span<double>(b_seasonal)};
}

std::array<std::span<const double>, 4> DLinearModel::parameters() const {
    return {std::span<const double>(w_trend.values()), std::span<const double>(w_seasonal.values()),
            std::span<const double>(b_trend), std::span<const double>(b_seasonal)};
}

Gradients Gradients::zeros_like(const DLinearModel& model) {
    return {Matrix(model.horizon, model.lookback), Matrix(model.horizon, model.lookback),
            std::vector<double>(model.horizon, 0.0), std::vector<double>(model.horizon, 0.0)};
}

std::array<std::span<double>, 4> Gradients::parameters() {
    return {std::span<double>(w_trend.values()), std::span<double>(w_seasonal.values()), std::span<double>(b_trend),
            std::span<double>(b_seasonal)};
}

std::array<std::span<const double>, 4> Gradients::parameters() const {
    return {std::span<const double>(w_trend.values()), std::span<const double>(w_seasonal.values()),
            std::span<const double>(b_trend), std::span<const double>(b_seasonal)};
}

void Gradients::add(const Gradients& other) {
    auto dst = parameters();
    const auto src = other.parameters();
    for (std::size_t blk = 0; blk < 4; ++blk)
        for (std::size_t i = 0; i < dst[blk].size(); ++i) dst[blk][i] += src[blk][i];
}

std::vector<double> moving_average(std::span<const double> series, std::size_t kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw Error("moving-average kernel must be odd");
    if (series.empty()) return {};
    const auto n = static_cast<std::ptrdiff_t>(series.size());
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    auto at = [&](std::ptrdiff_t i) { return series[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n - 1))]; };
    std::vector<double> out(series.size());
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        double window = 0.0;
        for (std::ptrdiff_t j = t - half; j <= t + half; ++j) window += at(j);
        out[static_cast<std::size_t>(t)] = window / static_cast<double>(kernel);
    }
    return out;
}

Matrix forward(const DLinearModel& model, const Matrix& lookback) {
    if (lookback.cols() != model.lookback) throw Error("look-back length does not match the model");
    const std::size_t b = model.lookback;
    const std::size_t h = model.horizon;
    Matrix out(lookback.rows(), h);
    std::vector<double> seasonal(b);
    for (std::size_t c = 0; c < lookback.rows(); ++c) {
        const auto x = lookback.row(c);
        const auto trend = moving_average(x, model.kernel);
        for (std::size_t j = 0; j < b; ++j) seasonal[j] = x[j] - trend[j];
        auto y = out.row(c);
        for (std::size_t t = 0; t < h; ++t) {
            const auto wt = model.w_trend.row(t);
            const auto ws = model.w_seasonal.row(t);
            double acc = model.b_trend[t] + model.b_seasonal[t];
            for (std::size_t j = 0; j < b; ++j) acc += wt[j] * trend[j] + ws[j] * seasonal[j];
            y[t] = acc;
        }
    }
    return out;
}

// Column range [first, second) holding the nonzeros of each row.
std::vector<std::pair<std::size_t, std::size_t>> nonzero_band(const Matrix& a) {
    std::vector<std::pair<std::size_t, std::size_t>> band(a.rows(), {0, 0});
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto row = a.row(r);
        std::size_t lo = row.size(), hi = 0;
        for (std::size_t k = 0; k < row.size(); ++k)
            if (row[k] != 0.0) {
                lo = std::min(lo, k);
                hi = k + 1;
            }
        band[r] = lo < hi ? std::pair{lo, hi} : std::pair<std::size_t, std::size_t>{0, 0};
    }
    return band;
}

std::vector<std::pair<std::size_t, std::size_t>> trend_band(std::size_t lookback, std::size_t kernel) {
    const std::size_t half = kernel / 2;
    std::vector<std::pair<std::size_t, std::size_t>> band(lookback);
    for (std::size_t j = 0; j < lookback; ++j)
        band[j] = {j >= half ? j - half : 0, std::min(lookback, j + half + 1)};
    return band;
}

Matrix trend_operator(std::size_t lookback, std::size_t kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw Error("moving-average kernel must be odd");
    const auto n = static_cast<std::ptrdiff_t>(lookback);
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    Matrix a(lookback, lookback);
    const double w = 1.0 / static_cast<double>(kernel);
    for (std::ptrdiff_t t = 0; t < n; ++t)
        for (std::ptrdiff_t j = t - half; j <= t + half; ++j)
            a(static_cast<std::size_t>(t), static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, n - 1))) += w;
    return a;
}

EffectiveModel effective(const DLinearModel& model) {
    const std::size_t b = model.lookback;
    const std::size_t h = model.horizon;
    EffectiveModel e{model.w_seasonal, std::vector<double>(h), trend_operator(b, model.kernel)};
    for (std::size_t t = 0; t < h; ++t) e.bias[t] = model.b_trend[t] + model.b_seasonal[t];
    const auto band = trend_band(b, model.kernel);
    for (std::size_t t = 0; t < h; ++t) {
        auto out = e.weights.row(t);
        for (std::size_t j = 0; j < b; ++j) {
            const double diff = model.w_trend(t, j) - model.w_seasonal(t, j);
            const auto arow = e.trend_op.row(j);
            for (std::size_t k = band[j].first; k < band[j].second; ++k) out[k] += diff * arow[k];
        }
    }
    return e;
}

void split_effective_gradient(const Matrix& d_weights, const Matrix& trend_op, Gradients& grads) {
    const std::size_t h = d_weights.rows();
    const std::size_t b = d_weights.cols();
    const auto band = nonzero_band(trend_op);
    // dW_trend = D A^T, dW_seasonal = D - D A^T.
    for (std::size_t t = 0; t < h; ++t) {
        const auto d = d_weights.row(t);
        auto gt = grads.w_trend.row(t);
        auto gs = grads.w_seasonal.row(t);
        for (std::size_t j = 0; j < b; ++j) {
            const auto arow = trend_op.row(j);
            double acc = 0.0;
            for (std::size_t k = band[j].first; k < band[j].second; ++k) acc += d[k] * arow[k];
            gt[j] = acc;
            gs[j] = d[j] - acc;
        }
    }
}

double accumulate_sample_gradient(const DLinearModel& model, const WindowSample& sample, double scale,
                                  Gradients& grads) {
    if (sample.horizon_len() != model.horizon) throw Error("horizon length does not match the model");
    const std::size_t b = model.lookback;
    const std::size_t h = model.horizon;
    std::vector<double> seasonal(b);
    std::vector<double> g(h);
    double sse = 0.0;
    for (std::size_t c = 0; c < sample.channels(); ++c) {
        const auto x = sample.lookback.row(c);
        const auto y = sample.horizon.row(c);
        const auto trend = moving_average(x, model.kernel);
        for (std::size_t j = 0; j < b; ++j) seasonal[j] = x[j] - trend[j];
        for (std::size_t t = 0; t < h; ++t) {
            const auto wt = model.w_trend.row(t);
            const auto ws = model.w_seasonal.row(t);
            double acc = model.b_trend[t] + model.b_seasonal[t];
            for (std::size_t j = 0; j < b; ++j) acc += wt[j] * trend[j] + ws[j] * seasonal[j];
            const double r = acc - y[t];
            sse += r * r;
            g[t] = 2.0 * scale * r;
        }
        for (std::size_t t = 0; t < h; ++t) {
            auto gt = grads.w_trend.row(t);
            auto gs = grads.w_seasonal.row(t);
            for (std::size_t j = 0; j < b; ++j) {
                gt[j] += g[t] * trend[j];
                gs[j] += g[t] * seasonal[j];
            }
            grads.b_trend[t] += g[t];
            grads.b_seasonal[t] += g[t];
        }
    }
    return sse;
}

Metrics evaluate(const DLinearModel& model, std::span<const WindowSample> samples) {
    return kernels::evaluate(model, samples);
}

void validate(const TrainConfig& cfg) {
    if (cfg.batch_size < 1) throw Error("batch_size must be at least 1");
    if (cfg.patience < 1) throw Error("patience must be at least 1");
    if (!(cfg.learning_rate > 0.0)) throw Error("learning_rate must be positive");
    if (cfg.kernel < 1 || cfg.kernel % 2 == 0) throw Error("moving-average kernel must be odd");
}

double TrainTrace::best_val_loss() const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : epochs) best = std::min(best, e.val_loss);
    return best;
}

double TrainTrace::best_train_loss() const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : epochs) best = std::min(best, e.train_loss);
    return best;
}

bool EarlyStopper::observe(double val_loss) {
    ++epoch_;
    improved_ = epoch_ == 1 || val_loss < best_;
    if (improved_) {
        best_ = val_loss;
        best_epoch_ = epoch_;
        bad_epochs_ = 0;
        return false;
    }
    return ++bad_epochs_ >= patience_;
}

TrainResult train(const DLinearModel& init, std::span<const WindowSample> train_set,
                  std::span<const WindowSample> val_set, const TrainConfig& cfg, const AugmentSpec& aug) {
    validate(cfg);
    validate(aug);
    check_model(init);
    if (train_set.empty()) throw Error("training set is empty");
    if (val_set.empty()) throw Error("validation set is empty");

    TrainResult result{init, {}};
    if (cfg.max_epochs == 0) return result;

    DLinearModel model = init;
    Adam adam(model, cfg);
    EarlyStopper stopper(cfg.patience);
    Rng rng(derive_seed(cfg.seed, 0x7452414eULL, 0));
    const std::uint64_t aug_master = derive_seed(aug.seed, cfg.seed, 0x41554755ULL);

    const bool augmenting = aug.kind != AugmentKind::None;
    const std::size_t originals_per_step = augmenting ? std::max<std::size_t>(1, cfg.batch_size / 2) : cfg.batch_size;
    result.trace.samples_per_step = augmenting ? 2 * originals_per_step : originals_per_step;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    Gradients grads = Gradients::zeros_like(model);
    std::vector<WindowSample> batch;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < order.size(); start += originals_per_step) {
            const std::size_t end = std::min(order.size(), start + originals_per_step);
            const std::span<const std::size_t> picked(order.data() + start, end - start);
            batch.clear();
            for (auto i : picked) batch.push_back(train_set[i]);
            if (augmenting) {
                auto extra = kernels::augment_batch(train_set, picked, aug, aug_master, epoch);
                std::move(extra.begin(), extra.end(), std::back_inserter(batch));
            }
            const double loss = kernels::loss_and_gradients(model, batch, grads);
            if (!std::isfinite(loss)) throw Error("divergence: non-finite training loss at epoch " + std::to_string(epoch));
            adam.step(model, grads);
            loss_sum += loss;
            ++steps;
        }
        if (!all_finite(model)) throw Error("divergence: non-finite parameters at epoch " + std::to_string(epoch));
        const double val = kernels::evaluate(model, val_set).mse;
        if (!std::isfinite(val)) throw Error("divergence: non-finite validation loss at epoch " + std::to_string(epoch));

        result.trace.epochs.push_back({epoch, loss_sum / static_cast<double>(steps), val});
        const bool stop = stopper.observe(val);
        if (stopper.improved()) result.model = model;
        if (stop) {
            result.trace.early_stopped = true;
            break;
        }
    }
    result.trace.best_epoch = stopper.best_epoch();
    return result;
}

TrainResult train(std::span<const WindowSample> train_set, std::span<const WindowSample> val_set,
                  const TrainConfig& cfg, const AugmentSpec& aug) {
    if (train_set.empty()) throw Error("training set is empty");
    Rng rng(derive_seed(cfg.seed, 0x494e4954ULL, 0));
    const auto init = DLinearModel::initialized(train_set.front().lookback_len(), train_set.front().horizon_len(),
                                                cfg.kernel, rng);
    return train(init, train_set, val_set, cfg, aug);
}

void save_checkpoint(const DLinearModel& model, const TrainConfig& cfg, const std::filesystem::path& path) {
    nlohmann::json j;
    j["format"] = kCheckpointMagic;
    j["lookback"] = model.lookback;
    j["horizon"] = model.horizon;
    j["kernel"] = model.kernel;
    const auto p = model.parameters();
    j["parameters"] = {{"w_trend", to_json(p[0])},
                       {"w_seasonal", to_json(p[1])},
                       {"b_trend", to_json(p[2])},
                       {"b_seasonal", to_json(p[3])}};
    j["train_config"] = {{"learning_rate", cfg.learning_rate}, {"batch_size", cfg.batch_size},
                         {"max_epochs", cfg.max_epochs},       {"patience", cfg.patience},
                         {"seed", cfg.seed},                   {"kernel", cfg.kernel}};
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
    out << j.dump(1) << '\n';
}

DLinearModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("checkpoint '" + path.string() + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != kCheckpointMagic)
        throw Error("checkpoint '" + path.string() + "' lacks the " + std::string(kCheckpointMagic) + " marker");
    try {
        auto model = DLinearModel::zeros(j.at("lookback").get<std::size_t>(), j.at("horizon").get<std::size_t>(),
                                         j.at("kernel").get<std::size_t>());
        const char* names[] = {"w_trend", "w_seasonal", "b_trend", "b_seasonal"};
        auto params = model.parameters();
        for (std::size_t i = 0; i < 4; ++i) {
            const auto values = j.at("parameters").at(names[i]).get<std::vector<double>>();
            if (values.size() != params[i].size())
                throw Error("checkpoint parameter '" + std::string(names[i]) + "' has the wrong size");
            std::copy(values.begin(), values.end(), params[i].begin());
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error("checkpoint '" + path.string() + "' is malformed: " + e.what());
    }
}

}  // namespace fraug
