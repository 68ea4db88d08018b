#ifndef DCL_REHEARSAL_HPP
#define DCL_REHEARSAL_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcl/losses.hpp"
#include "dcl/metrics.hpp"
#include "dcl/model.hpp"
#include "dcl/optim.hpp"
#include "dcl/taskgen.hpp"

namespace dcl::cl {

enum class KdDivergence { js, kl, none };
enum class RunMode { continual, multitask, finetune };

std::string to_string(KdDivergence kd);
KdDivergence parse_kd(const std::string& s);
std::string to_string(RunMode mode);
RunMode parse_mode(const std::string& s);

struct RunConfig {
  data::StreamConfig stream;
  model::ModelConfig model;  // latent family and K live here
  KdDivergence kd = KdDivergence::js;
  bool rehearsal = true;
  double pseudo_ratio = 0.2;
  std::size_t epochs = 5;
  double lr = 2e-2;
  std::size_t batch_size = 8;
  loss::LossWeights weights;
  loss::AnnealMode anneal_mode = loss::AnnealMode::linear;
  double anneal_warmup_fraction = 0.25;  // of each task's optimizer steps
  std::size_t anneal_cycles = 1;         // cyclical only
  std::uint64_t seed = 0;
  RunMode mode = RunMode::continual;
  std::size_t generation_max_length = 24;
  double generation_temperature = 1.0;
  std::size_t generation_top_k = 0;
  double generation_top_p = 0.9;
  std::size_t max_resample = 10;
  std::size_t eval_max_new_tokens = 8;

  void validate() const;
  /// Finetune mode runs the continual loop with rehearsal off and kd none.
  RunConfig effective() const;
};

struct TeacherSnapshot {
  const model::ModelParams params;
  const std::size_t trained_through;  // learning position of the last task it saw
};

TeacherSnapshot snapshot(const model::ModelParams& params, std::size_t trained_through);

struct GenerationStats {
  std::size_t requested = 0;
  std::size_t accepted = 0;
  std::size_t attempts = 0;
  std::size_t failures = 0;  // requested samples still missing after every resample
  std::map<std::string, std::size_t> reject_reasons;

  void merge(const GenerationStats& other);
};

/// Up to `count_per_task` pseudo samples for each prior task, drawn from the
/// teacher. Each missing sample is retried up to cfg.max_resample times.
std::vector<data::Sample> generate_pseudo(const TeacherSnapshot& teacher,
                                          const model::Vocab& vocab,
                                          const std::vector<int>& prior_tasks,
                                          std::size_t count_per_task, const RunConfig& cfg,
                                          Rng& rng, GenerationStats* stats = nullptr);

/// ceil(ratio * n_current) without floating-point drift at exact products.
std::size_t pseudo_budget(double ratio, std::size_t n_current);

struct TrainState {
  model::ModelParams params;
  ad::Adam optimizer;
  long global_step = 0;
};

/// Called after each epoch with the cumulative optimizer step count.
using EpochHook = std::function<void(std::size_t epoch, long global_step)>;

struct TaskTrainResult {
  std::vector<double> epoch_loss;  // mean total loss per epoch
  std::size_t dropped = 0;         // samples over max_context
};

/// Optimizes L_CVAE + L_LM over shuffled current + pseudo data. With a teacher
/// and kd != none the reconstruction and LM terms are distilled.
TaskTrainResult train_task(TrainState& state, const model::Vocab& vocab,
                           const std::vector<data::Sample>& current,
                           const std::vector<data::Sample>& pseudo,
                           const TeacherSnapshot* teacher, const RunConfig& cfg, Rng& rng,
                           const EpochHook& on_epoch = {});

/// Task metric on a sample set: accuracy for intent tasks, span F1 for slot tasks.
double evaluate(const model::ModelParams& params, const model::Vocab& vocab,
                const std::vector<data::Sample>& samples, data::TaskKind kind,
                std::size_t max_new_tokens = 8);

struct RunMetrics {
  nlohmann::json config;  // echo of the requested RunConfig
  std::vector<int> task_ids;            // learning order
  std::vector<std::string> task_names;  // learning order
  std::string metric_name;              // "accuracy" or "span_f1"
  metrics::ResultMatrix results;        // columns in learning order
  double avg_metric = 0.0;
  metrics::LearningCurve curve;
  double lca = 0.0;
  std::vector<std::vector<double>> loss_trace;  // per training phase, per epoch
  std::array<double, 4> dist_pseudo{};
  std::array<double, 4> dist_real{};
  GenerationStats generation;
  std::size_t dropped_samples = 0;
  std::vector<data::Sample> pseudo_samples;
  std::uint64_t final_checksum = 0;
  model::ModelParams final_params;
  model::Vocab vocab;

  /// Structured metrics file content. `timestamp` is included only when non-empty.
  nlohmann::json to_json(const std::string& timestamp = {}) const;
};

RunMetrics run_stream(const RunConfig& cfg);
/// Same loop over already-realized tasks in learning order.
RunMetrics run_tasks(const RunConfig& cfg, const std::vector<data::TaskData>& tasks);

/// metrics.json, curve.csv, pseudo.tsv and model.ckpt, each written atomically.
void write_run_artifacts(const std::filesystem::path& dir, const RunMetrics& m,
                         const std::string& timestamp);

std::string curve_csv(const metrics::LearningCurve& curve);

}  // namespace dcl::cl

#endif  // DCL_REHEARSAL_HPP
