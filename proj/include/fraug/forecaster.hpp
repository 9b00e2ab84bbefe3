#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fraug/augment.hpp"
#include "fraug/dataset.hpp"
#include "fraug/matrix.hpp"
#include "fraug/rng.hpp"

namespace fraug {

inline constexpr const char* kCheckpointMagic = "FRAUG-DLINEAR-v1";

// Decomposition-linear forecaster. Each channel is split into a moving-average
// trend and the remainder; one h x b linear map per component, shared by all
// channels.
struct DLinearModel {
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    std::size_t kernel = 25;
    Matrix w_trend;     // h x b
    Matrix w_seasonal;  // h x b
    std::vector<double> b_trend;
    std::vector<double> b_seasonal;

    static DLinearModel zeros(std::size_t lookback, std::size_t horizon, std::size_t kernel = 25);
    // Weights uniform in [-1/b, 1/b], biases zero.
    static DLinearModel initialized(std::size_t lookback, std::size_t horizon, std::size_t kernel, Rng& rng);

    std::size_t parameter_count() const noexcept { return 2 * lookback * horizon + 2 * horizon; }
    std::array<std::span<double>, 4> parameters();
    std::array<std::span<const double>, 4> parameters() const;

    friend bool operator==(const DLinearModel&, const DLinearModel&) = default;
};

// Same layout as DLinearModel's parameters.
struct Gradients {
    Matrix w_trend;
    Matrix w_seasonal;
    std::vector<double> b_trend;
    std::vector<double> b_seasonal;

    static Gradients zeros_like(const DLinearModel& model);
    std::array<std::span<double>, 4> parameters();
    std::array<std::span<const double>, 4> parameters() const;
    void add(const Gradients& other);
};

// Centred moving average with (kernel-1)/2 replicated points at each end.
// `kernel` must be odd.
std::vector<double> moving_average(std::span<const double> series, std::size_t kernel);

Matrix forward(const DLinearModel& model, const Matrix& lookback);

// b x b matrix A with moving_average(x) == A x.
Matrix trend_operator(std::size_t lookback, std::size_t kernel);

// The model collapsed to a single affine map: prediction = weights * x + bias
// with weights = W_seasonal + (W_trend - W_seasonal) A.
struct EffectiveModel {
    Matrix weights;  // h x b
    std::vector<double> bias;
    Matrix trend_op;  // A
};

EffectiveModel effective(const DLinearModel& model);

// Converts d(loss)/d(weights) of the effective map into the gradients of the
// trend and seasonal blocks.
void split_effective_gradient(const Matrix& d_weights, const Matrix& trend_op, Gradients& grads);

// Adds d(loss)/d(params) for one sample to `grads`, where the loss is
// scale * sum of squared errors. Returns the sample's sum of squared errors.
double accumulate_sample_gradient(const DLinearModel& model, const WindowSample& sample, double scale,
                                  Gradients& grads);

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
    std::size_t n_samples = 0;
};

Metrics evaluate(const DLinearModel& model, std::span<const WindowSample> samples);

struct TrainConfig {
    double learning_rate = 5e-3;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 20;
    std::size_t patience = 3;
    std::uint64_t seed = 0;
    std::size_t kernel = 25;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainTrace {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;     // 0 when no epoch ran
    std::size_t samples_per_step = 0;  // size of a full optimisation step
    bool early_stopped = false;

    double best_val_loss() const;
    double best_train_loss() const;
};

// Patience counter over validation losses. A strictly lower loss resets it.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

    // Returns true once `patience` consecutive epochs failed to improve.
    bool observe(double val_loss);
    bool improved() const noexcept { return improved_; }
    std::size_t best_epoch() const noexcept { return best_epoch_; }
    double best_loss() const noexcept { return best_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    std::size_t bad_epochs_ = 0;
    double best_ = 0.0;
    bool improved_ = false;
};

struct TrainResult {
    DLinearModel model;
    TrainTrace trace;
};

// Mini-batch Adam on MSE with early stopping on `val`. With an augmentation
// other than none each step takes batch_size/2 originals and one augmented
// copy of each. The returned model holds the best-validation parameters.
TrainResult train(const DLinearModel& init, std::span<const WindowSample> train_set,
                  std::span<const WindowSample> val_set, const TrainConfig& cfg, const AugmentSpec& aug);
TrainResult train(std::span<const WindowSample> train_set, std::span<const WindowSample> val_set,
                  const TrainConfig& cfg, const AugmentSpec& aug);

void save_checkpoint(const DLinearModel& model, const TrainConfig& cfg, const std::filesystem::path& path);
DLinearModel load_checkpoint(const std::filesystem::path& path);

}  // namespace fraug
