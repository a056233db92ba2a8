#pragma once

// Loss, reverse-mode gradients, Adam, early stopping, and metrics.

#include "cegncde/data_io.hpp"
#include "cegncde/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cegncde {

struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 64;
    int max_epochs = 200;
    int patience = 25;
    double beta = 0.5;
    int layers = 3;
    int hidden_h = 64;
    int hidden_z = 64;
    int qk_dim = 32;
    int embed_dim = 8;
    std::uint64_t seed = 1;
    SolverConfig solver;
    Ablation ablation;
    double grad_clip = 5.0;  // global L2 norm; <= 0 disables
    int threads = 1;

    void validate() const;
};

struct MetricsReport {
    double mae = 0.0;
    double rmse = 0.0;
    double mape = 0.0;
    std::vector<double> mae_per_horizon;
    std::vector<double> rmse_per_horizon;
    std::vector<double> mape_per_horizon;
    std::size_t count = 0;       // entries in MAE/RMSE
    std::size_t mape_count = 0;  // entries in MAPE (truth != 0)
};

// Streams (prediction, truth) pairs. Missing entries are skipped everywhere;
// zero-truth entries are skipped for MAPE only.
class MetricsAccumulator {
public:
    explicit MetricsAccumulator(int horizon);
    void add(const Tensor3& prediction, const Tensor3& truth, const Tensor3& missing);
    // Throws DataError when nothing was accumulated.
    MetricsReport report() const;

private:
    struct Sums {
        double abs = 0.0, sq = 0.0, pct = 0.0;
        std::size_t n = 0, n_pct = 0;
    };
    std::vector<Sums> per_horizon_;
};

// Sum of |pred - truth| over non-missing entries.
double l1_loss(const Tensor3& prediction, const Tensor3& truth, const Tensor3& missing);

struct BatchGradients {
    double loss = 0.0;  // mean per-sample L1 loss
    ModelParams grads;
};

// Gradient of the mean per-sample loss over `batch`, by reverse-mode
// accumulation through the unrolled solver. Per-sample work may run on
// `threads` workers; the reduction is in sample order.
BatchGradients compute_gradients(const Model& model, const std::vector<WindowedSample>& batch, int threads = 1,
                                 double loss_scale = 1.0);

// Mean per-sample loss without gradients.
double batch_loss(const Model& model, const std::vector<WindowedSample>& batch);

// Scales grads in place so their global L2 norm is at most max_norm; returns the pre-clip norm.
double clip_global_norm(ModelParams& grads, double max_norm);

struct AdamState {
    ModelParams m;
    ModelParams v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_params(const ModelParams& params);
};

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double learning_rate);

// Patience counter on a metric where lower is better.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {}
    // Records one epoch; returns true once `patience` epochs passed without improvement.
    bool update(int epoch, double metric);
    bool improved() const { return improved_; }
    int best_epoch() const { return best_epoch_; }
    double best() const { return best_; }

private:
    int patience_;
    int best_epoch_ = -1;
    double best_ = 0.0;
    int stale_ = 0;
    bool improved_ = false;
};

struct HistoryRow {
    int epoch = 0;
    double train_loss = 0.0;
    double val_mae = 0.0;
    double val_rmse = 0.0;
    double val_mape = 0.0;
};

struct TrainHooks {
    // Replaces the computed validation MAE (used to drive early-stopping fixtures).
    std::function<double(int epoch, double computed)> validation_override;
    std::function<void(const HistoryRow&)> on_epoch;
};

struct TrainResult {
    ModelParams params;  // best-validation parameters
    std::vector<HistoryRow> history;
    int best_epoch = -1;
    bool stopped_early = false;
};

TrainResult train(const Model& initial, const WindowSet& train_set, const WindowSet& val_set, const TrainConfig& config,
                  const TrainHooks& hooks = {});

MetricsReport evaluate(const Model& model, const WindowSet& samples);

std::vector<WindowedSample> materialize(const WindowSet& set);

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history);

struct TensorCheck {
    std::string name;
    double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
    double analytic_norm = 0.0;
    double numeric_norm = 0.0;
};

struct GradCheckOptions {
    double step = 1e-4;
    double tolerance = 1e-4;
    // Adds 1e-3 to one analytic gradient entry (negative control).
    bool corrupt_gradient = false;
};

struct GradCheckReport {
    std::vector<TensorCheck> tensors;
    bool passed = false;
    double max_relative_error = 0.0;
};

// Compares reverse-mode gradients of batch_loss against central differences.
GradCheckReport gradient_check(const Model& model, const std::vector<WindowedSample>& batch,
                               const GradCheckOptions& options = {});

}  // namespace cegncde
