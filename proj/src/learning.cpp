#include "odisphere/learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "odisphere/error.hpp"

namespace odisphere {

KldResult kld_loss(const Raster& pred, const Raster& target, double eps)
{
    if (!pred.same_shape(target)) throw DimensionError("kld_loss: prediction and target differ in shape");
    if (!all_non_negative(pred.values()) || !all_non_negative(target.values()))
        throw std::invalid_argument("kld_loss: maps must be non-negative");
    const double sp = sum(pred.values());
    const double st = sum(target.values());
    if (!(sp > 0.0)) throw DegenerateInputError("kld_loss: prediction sums to zero");
    if (!(st > 0.0)) throw DegenerateInputError("kld_loss: target sums to zero");

    const auto p = pred.values();
    const auto t = target.values();
    KldResult result{0.0, Raster(pred.rows(), pred.cols(), pred.channels())};
    auto grad = result.grad.values();
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p[i] / sp;
        const double ti = t[i] / st;
        if (ti > 0.0) result.loss += ti * std::log((ti + eps) / (pi + eps));
        grad[i] = -ti / (pi + eps);
        dot += grad[i] * pi;
    }
    for (double& g : grad) g = (g - dot) / sp;
    return result;
}

void RmsProp::step(std::span<double> params, std::span<const double> grads, std::span<double> state, double lr) const
{
    if (params.size() != grads.size() || params.size() != state.size())
        throw DimensionError("rmsprop: parameter, gradient and state sizes differ");
    for (std::size_t i = 0; i < params.size(); ++i) {
        state[i] = rho * state[i] + (1.0 - rho) * grads[i] * grads[i];
        params[i] -= lr * grads[i] / std::sqrt(state[i] + eps);
    }
}

namespace {

// Visiting order for each epoch: a seeded shuffle of the sample indices.
class StepSchedule {
public:
    StepSchedule(std::size_t n, const TrainConfig& cfg) : order_(n), rng_(cfg.seed), cfg_(cfg)
    {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
    }

    template <typename Fn>
    void run(Fn&& fn)
    {
        std::size_t steps = 0;
        for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
            std::shuffle(order_.begin(), order_.end(), rng_);
            for (std::size_t idx : order_) {
                if (cfg_.max_steps != 0 && steps >= cfg_.max_steps) return;
                fn(idx);
                ++steps;
            }
        }
    }

private:
    std::vector<std::size_t> order_;
    std::mt19937_64 rng_;
    TrainConfig cfg_;
};

template <typename Fn>
auto with_sample_id(std::size_t id, Fn&& fn)
{
    try {
        return fn();
    } catch (const DegenerateInputError& e) {
        throw DegenerateInputError("sample " + std::to_string(id) + ": " + e.what());
    } catch (const DimensionError& e) {
        throw DimensionError("sample " + std::to_string(id) + ": " + e.what());
    }
}

}  // namespace

BiasTraining train_bias(std::span<const BiasSample> samples, BiasGrid init, const TrainConfig& cfg)
{
    if (samples.empty()) throw std::invalid_argument("train_bias: empty dataset");
    BiasTraining out{std::move(init), {}};
    const RmsProp opt{cfg.rho, cfg.eps};
    std::vector<double> state(out.bias.weights().size(), 0.0);
    std::vector<double> grad(state.size());

    StepSchedule(samples.size(), cfg).run([&](std::size_t idx) {
        const BiasSample& s = samples[idx];
        const double loss = with_sample_id(idx, [&] {
            const Raster biased = apply_bias(s.raw, out.bias, s.elevation);
            const KldResult k = kld_loss(biased, s.target);
            std::fill(grad.begin(), grad.end(), 0.0);
            apply_bias_backward(s.raw, k.grad, out.bias, s.elevation, grad);
            return k.loss;
        });
        opt.step(out.bias.weights(), grad, state, cfg.lr_bias);
        out.bias.clamp();
        out.losses.push_back(loss);
    });
    return out;
}

double fused_bias_loss(const FusedBiasScene& scene, const ReprojectionPlan& plan, const BiasGrid& bias,
                       std::span<double> grad_weights)
{
    if (scene.raw.size() != plan.patch_count()) throw DimensionError("fused bias: one raw map per frustum required");
    std::vector<Raster> biased;
    biased.reserve(scene.raw.size());
    for (std::size_t i = 0; i < scene.raw.size(); ++i)
        biased.push_back(apply_bias(scene.raw[i], bias, plan.frustum(i).direction().elevation));
    const Raster fused = plan.apply(biased);
    const KldResult k = kld_loss(fused, scene.target);

    std::vector<Raster> grad_maps(scene.raw.size());
    plan.backward(k.grad, grad_maps);
    std::fill(grad_weights.begin(), grad_weights.end(), 0.0);
    for (std::size_t i = 0; i < scene.raw.size(); ++i)
        apply_bias_backward(scene.raw[i], grad_maps[i], bias, plan.frustum(i).direction().elevation, grad_weights);
    return k.loss;
}

BiasTraining train_bias_fused(std::span<const FusedBiasScene> scenes, const ReprojectionPlan& plan, BiasGrid init,
                              const TrainConfig& cfg)
{
    if (scenes.empty()) throw std::invalid_argument("train_bias_fused: empty dataset");
    BiasTraining out{std::move(init), {}};
    const RmsProp opt{cfg.rho, cfg.eps};
    std::vector<double> state(out.bias.weights().size(), 0.0);
    std::vector<double> grad(state.size());

    StepSchedule(scenes.size(), cfg).run([&](std::size_t idx) {
        const double loss = with_sample_id(idx, [&] { return fused_bias_loss(scenes[idx], plan, out.bias, grad); });
        opt.step(out.bias.weights(), grad, state, cfg.lr_bias);
        out.bias.clamp();
        out.losses.push_back(loss);
    });
    return out;
}

double attention_loss(const AttentionSample& sample, const AttentionParams& params, AttentionParams* grad)
{
    const Raster* features = sample.features ? &*sample.features : nullptr;
    const AttentionTrace trace = attention_forward_traced(sample.stack, params, features);
    const Raster fused = integrate(sample.stack, trace.weights);
    const KldResult k = kld_loss(fused, sample.target);
    if (grad != nullptr)
        *grad = attention_backward(trace, params, integrate_backward_weights(sample.stack, k.grad));
    return k.loss;
}

AttentionTraining train_attention(std::span<const AttentionSample> samples, AttentionParams init,
                                  const TrainConfig& cfg)
{
    if (samples.empty()) throw std::invalid_argument("train_attention: empty dataset");
    AttentionTraining out{std::move(init), {}};
    const RmsProp opt{cfg.rho, cfg.eps};
    std::vector<double> flat = out.params.flatten();
    std::vector<double> state(flat.size(), 0.0);

    StepSchedule(samples.size(), cfg).run([&](std::size_t idx) {
        AttentionParams grad;
        const double loss = with_sample_id(idx, [&] { return attention_loss(samples[idx], out.params, &grad); });
        opt.step(flat, grad.flatten(), state, cfg.lr_attention);
        out.params.assign(flat);
        out.losses.push_back(loss);
    });
    return out;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const double> losses)
{
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "step,loss\n" << std::setprecision(17);
    for (std::size_t i = 0; i < losses.size(); ++i) os << i << ',' << losses[i] << '\n';
}

}  // namespace odisphere
