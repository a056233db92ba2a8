#include "cegncde/training.hpp"

#include "cegncde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace cegncde {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
    if (layers < 1 || hidden_h < 1 || hidden_z < 1 || qk_dim < 1 || embed_dim < 1) {
        throw ConfigError("model dimensions must be >= 1");
    }
    if (solver.steps_per_interval < 1) throw ConfigError("steps_per_interval must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

MetricsAccumulator::MetricsAccumulator(int horizon) : per_horizon_(static_cast<std::size_t>(horizon)) {}

void MetricsAccumulator::add(const Tensor3& prediction, const Tensor3& truth, const Tensor3& missing) {
    if (prediction.steps() != truth.steps() || prediction.nodes() != truth.nodes() ||
        prediction.channels() != truth.channels() || missing.size() != truth.size()) {
        throw ShapeError("metrics: prediction/truth/missing shapes differ");
    }
    if (static_cast<std::size_t>(truth.steps()) != per_horizon_.size()) {
        throw ShapeError("metrics: expected " + std::to_string(per_horizon_.size()) + " horizon steps");
    }
    for (int h = 0; h < truth.steps(); ++h) {
        Sums& s = per_horizon_[static_cast<std::size_t>(h)];
        for (int n = 0; n < truth.nodes(); ++n)
            for (int c = 0; c < truth.channels(); ++c) {
                if (missing(h, n, c) != 0.0) continue;
                const double y = truth(h, n, c);
                const double e = prediction(h, n, c) - y;
                s.abs += std::abs(e);
                s.sq += e * e;
                ++s.n;
                if (y != 0.0) {
                    s.pct += std::abs(e / y);
                    ++s.n_pct;
                }
            }
    }
}

MetricsReport MetricsAccumulator::report() const {
    MetricsReport r;
    Sums total;
    for (const Sums& s : per_horizon_) {
        r.mae_per_horizon.push_back(s.n ? s.abs / s.n : 0.0);
        r.rmse_per_horizon.push_back(s.n ? std::sqrt(s.sq / s.n) : 0.0);
        r.mape_per_horizon.push_back(s.n_pct ? 100.0 * s.pct / s.n_pct : 0.0);
        total.abs += s.abs;
        total.sq += s.sq;
        total.pct += s.pct;
        total.n += s.n;
        total.n_pct += s.n_pct;
    }
    if (total.n == 0) throw DataError("evaluate: no non-missing entries to score");
    r.mae = total.abs / total.n;
    r.rmse = std::sqrt(total.sq / total.n);
    r.mape = total.n_pct ? 100.0 * total.pct / total.n_pct : 0.0;
    r.count = total.n;
    r.mape_count = total.n_pct;
    return r;
}

double l1_loss(const Tensor3& prediction, const Tensor3& truth, const Tensor3& missing) {
    if (prediction.size() != truth.size() || missing.size() != truth.size() || prediction.steps() != truth.steps() ||
        prediction.nodes() != truth.nodes()) {
        throw ShapeError("l1_loss: shape mismatch");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (missing.data()[k] == 0.0) total += std::abs(prediction.data()[k] - truth.data()[k]);
    }
    return total;
}

namespace {

struct SampleGradient {
    double loss = 0.0;
    std::vector<Mat> grads;
};

SampleGradient sample_gradient(const Model& model, const WindowedSample& sample, double seed) {
    ad::Tape tape;
    const BoundModel bound = BoundModel::bind(tape, model.params, true);
    ad::Var pred = forward(tape, bound, model, sample.input);
    const Mat truth = horizon_tensor_to_head(sample.target);
    const Mat weight = (1.0 - horizon_tensor_to_head(sample.target_missing).array()).matrix();
    ad::Var loss = ad::weighted_abs_error(pred, truth, weight);
    tape.backward(loss, seed);
    SampleGradient out;
    out.loss = loss.value()(0, 0);
    out.grads.reserve(bound.leaves.size());
    for (const ad::Var& leaf : bound.leaves) out.grads.push_back(tape.grad(leaf));
    return out;
}

double sample_loss(const Model& model, const WindowedSample& sample) {
    return l1_loss(predict(model, sample.input), sample.target, sample.target_missing);
}

template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

BatchGradients compute_gradients(const Model& model, const std::vector<WindowedSample>& batch, int threads,
                                 double loss_scale) {
    if (batch.empty()) throw DataError("compute_gradients: empty batch");
    const double seed = loss_scale / static_cast<double>(batch.size());
    std::vector<SampleGradient> per_sample(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) { per_sample[i] = sample_gradient(model, batch[i], seed); });

    BatchGradients out;
    out.grads = model.params.zeros_like();
    std::vector<Mat*> slots;
    ModelParams::visit(out.grads, [&](const std::string&, Mat& m, bool) { slots.push_back(&m); });
    double loss = 0.0;
    for (const SampleGradient& s : per_sample) {
        loss += s.loss;
        for (std::size_t k = 0; k < slots.size(); ++k) *slots[k] += s.grads[k];
    }
    out.loss = loss_scale * loss / static_cast<double>(batch.size());
    ModelParams::visit(out.grads, [](const std::string& name, const Mat& g, bool) {
        if (!all_finite(g)) throw NumericalError("non-finite gradient for parameter " + name);
    });
    return out;
}

double batch_loss(const Model& model, const std::vector<WindowedSample>& batch) {
    if (batch.empty()) throw DataError("batch_loss: empty batch");
    double total = 0.0;
    for (const auto& s : batch) total += sample_loss(model, s);
    return total / static_cast<double>(batch.size());
}

double clip_global_norm(ModelParams& grads, double max_norm) {
    double sq = 0.0;
    ModelParams::visit(grads, [&](const std::string&, const Mat& g, bool) { sq += g.squaredNorm(); });
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double factor = max_norm / norm;
        ModelParams::visit(grads, [&](const std::string&, Mat& g, bool) { g *= factor; });
    }
    return norm;
}

AdamState AdamState::for_params(const ModelParams& params) {
    AdamState s;
    s.m = params.zeros_like();
    s.v = params.zeros_like();
    return s;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double learning_rate) {
    std::vector<Mat*> p, m, v;
    std::vector<const Mat*> g;
    std::vector<std::string> names;
    ModelParams::visit(params, [&](const std::string& name, Mat& x, bool) {
        p.push_back(&x);
        names.push_back(name);
    });
    ModelParams::visit(grads, [&](const std::string&, const Mat& x, bool) { g.push_back(&x); });
    ModelParams::visit(state.m, [&](const std::string&, Mat& x, bool) { m.push_back(&x); });
    ModelParams::visit(state.v, [&](const std::string&, Mat& x, bool) { v.push_back(&x); });
    if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
        throw ShapeError("adam_step: parameter/gradient/state sets differ");
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (g[k]->rows() != p[k]->rows() || g[k]->cols() != p[k]->cols() || m[k]->rows() != p[k]->rows() ||
            m[k]->cols() != p[k]->cols() || v[k]->rows() != p[k]->rows() || v[k]->cols() != p[k]->cols()) {
            throw ShapeError("adam_step: shape mismatch for " + names[k]);
        }
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < p.size(); ++k) {
        Mat& mk = *m[k];
        Mat& vk = *v[k];
        const Mat& gk = *g[k];
        mk = state.beta1 * mk + (1.0 - state.beta1) * gk;
        vk = state.beta2 * vk + (1.0 - state.beta2) * gk.cwiseProduct(gk);
        for (Eigen::Index i = 0; i < p[k]->size(); ++i) {
            const double mhat = mk.data()[i] / c1;
            const double vhat = vk.data()[i] / c2;
            p[k]->data()[i] -= learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

bool EarlyStopping::update(int epoch, double metric) {
    improved_ = best_epoch_ < 0 || metric < best_;
    if (improved_) {
        best_ = metric;
        best_epoch_ = epoch;
        stale_ = 0;
    } else {
        ++stale_;
    }
    return stale_ >= patience_;
}

std::vector<WindowedSample> materialize(const WindowSet& set) {
    std::vector<WindowedSample> out;
    out.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) out.push_back(set[i]);
    return out;
}

MetricsReport evaluate(const Model& model, const WindowSet& samples) {
    if (samples.empty()) throw DataError("evaluate: empty evaluation set");
    MetricsAccumulator acc(model.dims.horizon);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const WindowedSample s = samples[i];
        acc.add(predict(model, s.input), s.target, s.target_missing);
    }
    return acc.report();
}

TrainResult train(const Model& initial, const WindowSet& train_set, const WindowSet& val_set, const TrainConfig& config,
                  const TrainHooks& hooks) {
    config.validate();
    initial.check();
    TrainResult result;
    result.params = initial.params;
    if (config.max_epochs == 0) return result;
    if (train_set.empty()) throw DataError("train: empty training split");
    if (val_set.empty()) throw DataError("train: empty validation split");

    Model working = initial;
    AdamState adam = AdamState::for_params(working.params);
    EarlyStopping stopper(config.patience);
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
            std::vector<WindowedSample> batch;
            batch.reserve(end - begin);
            for (std::size_t k = begin; k < end; ++k) batch.push_back(train_set[order[k]]);
            BatchGradients g;
            try {
                g = compute_gradients(working, batch, config.threads);
            } catch (const NumericalError& e) {
                throw NumericalError("epoch " + std::to_string(epoch) + ": " + e.what());
            }
            if (!std::isfinite(g.loss)) throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
            clip_global_norm(g.grads, config.grad_clip);
            adam_step(working.params, g.grads, adam, config.learning_rate);
            loss_sum += g.loss * static_cast<double>(batch.size());
        }

        const MetricsReport val = evaluate(working, val_set);
        HistoryRow row{epoch, loss_sum / static_cast<double>(order.size()), val.mae, val.rmse, val.mape};
        if (hooks.validation_override) row.val_mae = hooks.validation_override(epoch, row.val_mae);
        if (!std::isfinite(row.train_loss) || !std::isfinite(row.val_mae)) {
            throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
        }
        result.history.push_back(row);
        if (hooks.on_epoch) hooks.on_epoch(row);

        const bool stop = stopper.update(epoch, row.val_mae);
        if (stopper.improved()) {
            result.params = working.params;
            result.best_epoch = epoch;
        }
        if (stop) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history) {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    for (const auto& r : history) {
        labels.push_back(std::to_string(r.epoch));
        rows.push_back({r.train_loss, r.val_mae, r.val_rmse, r.val_mape});
    }
    write_csv_table(path, {"epoch", "train_loss", "val_mae", "val_rmse", "val_mape"}, labels, rows);
}

GradCheckReport gradient_check(const Model& model, const std::vector<WindowedSample>& batch,
                               const GradCheckOptions& options) {
    BatchGradients analytic = compute_gradients(model, batch);
    if (options.corrupt_gradient) {
        Mat& first = analytic.grads.at(analytic.grads.names().front());
        first(0, 0) += 1e-3;
    }

    Model work = model;
    std::vector<Mat*> params;
    std::vector<std::string> names;
    ModelParams::visit(work.params, [&](const std::string& name, Mat& m, bool) {
        params.push_back(&m);
        names.push_back(name);
    });

    GradCheckReport report;
    report.passed = true;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Mat& p = *params[k];
        Mat numeric(p.rows(), p.cols());
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double saved = p.data()[i];
            p.data()[i] = saved + options.step;
            const double up = batch_loss(work, batch);
            p.data()[i] = saved - options.step;
            const double down = batch_loss(work, batch);
            p.data()[i] = saved;
            numeric.data()[i] = (up - down) / (2.0 * options.step);
        }
        if (!all_finite(numeric)) throw NumericalError("gradient_check: non-finite numeric gradient for " + names[k]);
        const Mat& a = analytic.grads.at(names[k]);
        TensorCheck c;
        c.name = names[k];
        c.analytic_norm = a.norm();
        c.numeric_norm = numeric.norm();
        const double scale = std::max(c.analytic_norm, c.numeric_norm);
        c.relative_error = scale > 1e-12 ? (a - numeric).norm() / scale : 0.0;
        report.max_relative_error = std::max(report.max_relative_error, c.relative_error);
        if (!(c.relative_error <= options.tolerance)) report.passed = false;
        report.tensors.push_back(c);
    }
    return report;
}

}  // namespace cegncde
