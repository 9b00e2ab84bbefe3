#include "fraug/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iterator>
#include <numeric>

#include "fraug/error.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace fraug::kernels {
namespace {

double batch_scale(std::span<const WindowSample> batch) {
    const auto& s = batch.front();
    return 1.0 / static_cast<double>(batch.size() * s.channels() * s.horizon_len());
}

struct ErrorSums {
    double squared = 0.0;
    double absolute = 0.0;
};

ErrorSums sample_errors(const DLinearModel& model, const WindowSample& s) {
    const Matrix pred = forward(model, s.lookback);
    ErrorSums e;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred.values()[i] - s.horizon.values()[i];
        e.squared += r * r;
        e.absolute += std::abs(r);
    }
    return e;
}

Metrics finish_metrics(const ErrorSums& e, std::span<const WindowSample> samples) {
    const auto& s = samples.front();
    const auto n = static_cast<double>(samples.size() * s.channels() * s.horizon_len());
    return {e.squared / n, e.absolute / n, samples.size()};
}

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

}  // namespace

int max_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

static void check_shapes(std::span<const WindowSample> samples, std::size_t b, std::size_t h) {
    for (const auto& s : samples)
        if (s.lookback_len() != b || s.horizon_len() != h) throw Error("sample shape does not match the model");
}

double loss_and_gradients(const DLinearModel& model, std::span<const WindowSample> batch, Gradients& grads) {
    if (batch.empty()) throw Error("empty batch");
    const double scale = batch_scale(batch);
    const auto eff = effective(model);
    const std::size_t h = model.horizon;
    const std::size_t b = model.lookback;
    const std::size_t chunks = (batch.size() + kChunk - 1) / kChunk;
    check_shapes(batch, b, h);

    struct Partial {
        Matrix d_weights;
        std::vector<double> d_bias;
        double sse = 0.0;
    };
    std::vector<Partial> partial(chunks, Partial{Matrix(h, b), std::vector<double>(h, 0.0), 0.0});

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(chunks); ++ci) {
        const auto c = static_cast<std::size_t>(ci);
        auto& part = partial[c];
        std::vector<double> g(h);
        const std::size_t end = std::min(batch.size(), (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            const auto& s = batch[i];
            for (std::size_t ch = 0; ch < s.channels(); ++ch) {
                const double* x = s.lookback.row(ch).data();
                const double* y = s.horizon.row(ch).data();
                for (std::size_t t = 0; t < h; ++t) {
                    const double* w = eff.weights.row(t).data();
                    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                    for (std::size_t j = 0; j < b; ++j) acc += w[j] * x[j];
                    const double r = acc + eff.bias[t] - y[t];
                    part.sse += r * r;
                    g[t] = 2.0 * scale * r;
                }
                for (std::size_t t = 0; t < h; ++t) {
                    double* dw = part.d_weights.row(t).data();
                    const double gt = g[t];
                    for (std::size_t j = 0; j < b; ++j) dw[j] += gt * x[j];
                    part.d_bias[t] += gt;
                }
            }
        }
    }

    Matrix d_weights = std::move(partial.front().d_weights);
    std::vector<double> d_bias = std::move(partial.front().d_bias);
    double sse = partial.front().sse;
    for (std::size_t c = 1; c < chunks; ++c) {
        for (std::size_t i = 0; i < d_weights.size(); ++i) d_weights.values()[i] += partial[c].d_weights.values()[i];
        for (std::size_t t = 0; t < h; ++t) d_bias[t] += partial[c].d_bias[t];
        sse += partial[c].sse;
    }
    grads = Gradients::zeros_like(model);
    split_effective_gradient(d_weights, eff.trend_op, grads);
    grads.b_trend = d_bias;
    grads.b_seasonal = std::move(d_bias);
    return sse * scale;
}

Metrics evaluate(const DLinearModel& model, std::span<const WindowSample> samples) {
    if (samples.empty()) throw Error("cannot evaluate on an empty sample set");
    const auto eff = effective(model);
    const std::size_t h = model.horizon;
    const std::size_t b = model.lookback;
    const std::size_t chunks = (samples.size() + kChunk - 1) / kChunk;
    check_shapes(samples, b, h);
    std::vector<ErrorSums> partial(chunks);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(chunks); ++ci) {
        const auto c = static_cast<std::size_t>(ci);
        const std::size_t end = std::min(samples.size(), (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            const auto& s = samples[i];
            for (std::size_t ch = 0; ch < s.channels(); ++ch) {
                const double* x = s.lookback.row(ch).data();
                const double* y = s.horizon.row(ch).data();
                for (std::size_t t = 0; t < h; ++t) {
                    const double* w = eff.weights.row(t).data();
                    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                    for (std::size_t j = 0; j < b; ++j) acc += w[j] * x[j];
                    const double r = acc + eff.bias[t] - y[t];
                    partial[c].squared += r * r;
                    partial[c].absolute += std::abs(r);
                }
            }
        }
    }
    ErrorSums total;
    for (const auto& p : partial) {
        total.squared += p.squared;
        total.absolute += p.absolute;
    }
    return finish_metrics(total, samples);
}

std::vector<double> dtw_to_pool(const WindowSample& target, std::span<const WindowSample> pool) {
    std::vector<double> d(pool.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pool.size()); ++i)
        d[static_cast<std::size_t>(i)] = sample_dtw(target, pool[static_cast<std::size_t>(i)]);
    return d;
}

std::vector<WindowSample> augment_batch(std::span<const WindowSample> pool, std::span<const std::size_t> indices,
                                        const AugmentSpec& spec, std::uint64_t master_seed, std::uint64_t round) {
    std::vector<WindowSample> out(indices.size());
    // Exceptions may not leave an OpenMP region; park the first one.
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(indices.size()); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        try {
            Rng rng(derive_seed(master_seed, indices[i], round));
            out[i] = augment_sample(pool, indices[i], spec, rng);
        } catch (...) {
#pragma omp critical(fraug_augment_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<WindowSample> expand_dataset(std::span<const WindowSample> samples, const AugmentSpec& spec,
                                         std::size_t factor, Rng& rng) {
    if (factor < 1) throw Error("expansion factor must be at least 1");
    validate(spec);
    const std::uint64_t master = rng();
    std::vector<WindowSample> out(samples.begin(), samples.end());
    out.reserve(samples.size() * factor);
    const auto idx = iota_indices(samples.size());
    for (std::size_t r = 1; r < factor; ++r) {
        auto round = augment_batch(samples, idx, spec, master, r);
        std::move(round.begin(), round.end(), std::back_inserter(out));
    }
    return out;
}

namespace serial {

double loss_and_gradients(const DLinearModel& model, std::span<const WindowSample> batch, Gradients& grads) {
    if (batch.empty()) throw Error("empty batch");
    const double scale = batch_scale(batch);
    grads = Gradients::zeros_like(model);
    double sse = 0.0;
    for (const auto& s : batch) sse += accumulate_sample_gradient(model, s, scale, grads);
    return sse * scale;
}

Metrics evaluate(const DLinearModel& model, std::span<const WindowSample> samples) {
    if (samples.empty()) throw Error("cannot evaluate on an empty sample set");
    ErrorSums total;
    for (const auto& s : samples) {
        const auto e = sample_errors(model, s);
        total.squared += e.squared;
        total.absolute += e.absolute;
    }
    return finish_metrics(total, samples);
}

std::vector<double> dtw_to_pool(const WindowSample& target, std::span<const WindowSample> pool) {
    std::vector<double> d;
    d.reserve(pool.size());
    for (const auto& p : pool) d.push_back(sample_dtw(target, p));
    return d;
}

std::vector<WindowSample> augment_batch(std::span<const WindowSample> pool, std::span<const std::size_t> indices,
                                        const AugmentSpec& spec, std::uint64_t master_seed, std::uint64_t round) {
    std::vector<WindowSample> out;
    out.reserve(indices.size());
    for (auto i : indices) {
        Rng rng(derive_seed(master_seed, i, round));
        out.push_back(augment_sample(pool, i, spec, rng));
    }
    return out;
}

std::vector<WindowSample> expand_dataset(std::span<const WindowSample> samples, const AugmentSpec& spec,
                                         std::size_t factor, Rng& rng) {
    if (factor < 1) throw Error("expansion factor must be at least 1");
    validate(spec);
    const std::uint64_t master = rng();
    std::vector<WindowSample> out(samples.begin(), samples.end());
    const auto idx = iota_indices(samples.size());
    for (std::size_t r = 1; r < factor; ++r) {
        auto round = augment_batch(samples, idx, spec, master, r);
        std::move(round.begin(), round.end(), std::back_inserter(out));
    }
    return out;
}

}  // namespace serial
}  // namespace fraug::kernels

namespace fraug {

std::vector<WindowSample> expand_dataset(std::span<const WindowSample> samples, const AugmentSpec& spec,
                                         std::size_t factor, Rng& rng) {
    return kernels::expand_dataset(samples, spec, factor, rng);
}

}  // namespace fraug
