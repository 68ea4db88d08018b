#include "dcl/rehearsal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "dcl/config.hpp"
#include "dcl/io.hpp"

namespace dcl::cl {

std::string to_string(KdDivergence kd) {
  switch (kd) {
    case KdDivergence::js: return "js";
    case KdDivergence::kl: return "kl";
    case KdDivergence::none: return "none";
  }
  return "none";
}

KdDivergence parse_kd(const std::string& s) {
  if (s == "js") return KdDivergence::js;
  if (s == "kl") return KdDivergence::kl;
  if (s == "none") return KdDivergence::none;
  throw std::invalid_argument("unknown kd divergence '" + s + "' (expected js, kl or none)");
}

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::continual: return "continual";
    case RunMode::multitask: return "multitask";
    case RunMode::finetune: return "finetune";
  }
  return "continual";
}

RunMode parse_mode(const std::string& s) {
  if (s == "continual") return RunMode::continual;
  if (s == "multitask") return RunMode::multitask;
  if (s == "finetune") return RunMode::finetune;
  throw std::invalid_argument("unknown mode '" + s + "' (expected continual, multitask or finetune)");
}

void RunConfig::validate() const {
  model.validate();
  weights.validate();
  if (!(pseudo_ratio >= 0.0 && pseudo_ratio <= 1.0)) {
    throw std::invalid_argument("pseudo_ratio must lie in [0, 1]");
  }
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("lr must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(anneal_warmup_fraction >= 0.0 && anneal_warmup_fraction <= 1.0)) {
    throw std::invalid_argument("anneal warmup_fraction must lie in [0, 1]");
  }
  if (anneal_cycles < 1) throw std::invalid_argument("anneal cycles must be >= 1");
  if (generation_max_length < 5) throw std::invalid_argument("generation max_length must be >= 5");
  if (!(generation_temperature > 0.0)) throw std::invalid_argument("generation temperature must be > 0");
  if (!(generation_top_p > 0.0 && generation_top_p <= 1.0)) {
    throw std::invalid_argument("generation top_p must lie in (0, 1]");
  }
  if (max_resample < 1) throw std::invalid_argument("max_resample must be >= 1");
  if (eval_max_new_tokens < 1) throw std::invalid_argument("eval max_new_tokens must be >= 1");
}

RunConfig RunConfig::effective() const {
  RunConfig c = *this;
  if (mode == RunMode::finetune) {
    c.rehearsal = false;
    c.kd = KdDivergence::none;
  }
  if (mode == RunMode::multitask) {
    c.rehearsal = false;
    c.kd = KdDivergence::none;
  }
  return c;
}

TeacherSnapshot snapshot(const model::ModelParams& params, std::size_t trained_through) {
  return TeacherSnapshot{params.clone(false), trained_through};
}

void GenerationStats::merge(const GenerationStats& o) {
  requested += o.requested;
  accepted += o.accepted;
  attempts += o.attempts;
  failures += o.failures;
  for (const auto& [k, v] : o.reject_reasons) reject_reasons[k] += v;
}

std::size_t pseudo_budget(double ratio, std::size_t n_current) {
  const double raw = ratio * static_cast<double>(n_current);
  const double rounded = std::round(raw);
  if (std::abs(raw - rounded) < 1e-9) return static_cast<std::size_t>(rounded);
  return static_cast<std::size_t>(std::ceil(raw));
}

std::vector<data::Sample> generate_pseudo(const TeacherSnapshot& teacher,
                                          const model::Vocab& vocab,
                                          const std::vector<int>& prior_tasks,
                                          std::size_t count_per_task, const RunConfig& cfg,
                                          Rng& rng, GenerationStats* stats) {
  std::vector<data::Sample> out;
  GenerationStats local;
  std::map<int, std::size_t> needed;
  for (int t : prior_tasks) needed[t] = count_per_task;
  local.requested = count_per_task * prior_tasks.size();

  model::GenerationConfig gcfg;
  gcfg.max_length = cfg.generation_max_length;
  gcfg.greedy = false;
  gcfg.temperature = cfg.generation_temperature;
  gcfg.top_k = cfg.generation_top_k;
  gcfg.top_p = cfg.generation_top_p;
  std::map<int, std::vector<data::Sample>> accepted;
  for (std::size_t round = 0; round < cfg.max_resample; ++round) {
    std::vector<int> request;
    for (int t : prior_tasks) request.insert(request.end(), needed[t], t);
    if (request.empty()) break;
    local.attempts += request.size();
    for (auto& g : model::generate(teacher.params, vocab, request, gcfg, rng)) {
      if (g.sample) {
        if (needed[g.task] > 0) {
          --needed[g.task];
          accepted[g.task].push_back(std::move(*g.sample));
        }
      } else {
        ++local.reject_reasons[g.reject_reason];
      }
    }
  }
  for (int t : prior_tasks) {
    local.failures += needed[t];
    for (auto& s : accepted[t]) out.push_back(std::move(s));
    accepted[t].clear();
  }
  local.accepted = out.size();
  if (stats) stats->merge(local);
  return out;
}

TaskTrainResult train_task(TrainState& state, const model::Vocab& vocab,
                           const std::vector<data::Sample>& current,
                           const std::vector<data::Sample>& pseudo,
                           const TeacherSnapshot* teacher, const RunConfig& cfg, Rng& rng,
                           const EpochHook& on_epoch) {
  if (current.empty()) throw std::invalid_argument("train_task: empty task data");
  std::vector<const data::Sample*> pool;
  for (const auto& s : current) pool.push_back(&s);
  for (const auto& s : pseudo) pool.push_back(&s);

  const std::size_t steps_per_epoch = (pool.size() + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = static_cast<long>(steps_per_epoch * cfg.epochs);
  loss::AnnealSchedule schedule;
  schedule.mode = cfg.anneal_mode;
  schedule.warmup_steps =
      std::max(1L, std::lround(cfg.anneal_warmup_fraction *
                               static_cast<double>(cfg.anneal_mode == loss::AnnealMode::cyclical
                                                       ? total_steps / static_cast<long>(cfg.anneal_cycles)
                                                       : total_steps)));
  schedule.cycle_steps = std::max(1L, total_steps / static_cast<long>(cfg.anneal_cycles));
  schedule.max_lambda = 1.0;
  const bool distill = teacher != nullptr && cfg.kd != KdDivergence::none;

  auto soft_term = [&](const ad::Tensor& student, const ad::Tensor& teacher_logits,
                       std::span<const double> weights) {
    return cfg.kd == KdDivergence::js
               ? loss::js_divergence(student, teacher_logits, cfg.weights.tau, weights)
               : loss::kl_divergence(student, teacher_logits, cfg.weights.tau, weights);
  };

  TaskTrainResult result;
  std::vector<ad::Tensor> trainable = state.params.trainable();
  long task_step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span(pool));
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < pool.size(); start += cfg.batch_size) {
      std::vector<data::Sample> chunk;
      for (std::size_t k = start; k < std::min(pool.size(), start + cfg.batch_size); ++k) {
        chunk.push_back(*pool[k]);
      }
      const model::Batch b = model::make_batch(vocab, chunk, cfg.model.max_context);
      if (epoch == 0) result.dropped += b.dropped;
      if (b.size == 0) continue;
      const double lambda = loss::lambda_at(schedule, task_step);
      try {
        const model::Latent post = model::encode(state.params, b);
        const model::Latent pri = model::prior(state.params, b.tasks);
        const ad::Tensor z = model::latent_sample(post, rng);
        const model::DecodeOutput cvae = model::decode(state.params, b, z);
        const ad::Tensor kl = model::latent_kl(post, pri);
        const model::DecodeOutput lm =
            model::decode(state.params, b, model::latent_mean(pri).detach());
        ad::Tensor rec = cvae.joint_nll;
        ad::Tensor lm_term = loss::lm_loss(lm.joint_nll, lm.cond_nll);
        if (distill) {
          ad::Tensor teacher_c, teacher_l;
          {
            ad::NoGradGuard guard;
            const model::Latent t_post = model::encode(teacher->params, b);
            teacher_c = model::decode(teacher->params, b, model::latent_mean(t_post)).logits;
            const model::Latent t_prior = model::prior(teacher->params, b.tasks);
            teacher_l = model::decode(teacher->params, b, model::latent_mean(t_prior)).logits;
          }
          const std::vector<double> w = loss::target_weights(b.targets);
          rec = loss::distill(soft_term(cvae.logits, teacher_c, w), rec, cfg.weights);
          lm_term = loss::distill(soft_term(lm.logits, teacher_l, w), lm_term, cfg.weights);
        }
        const ad::Tensor total = ad::add(loss::cvae_loss(rec, kl, lambda), lm_term);
        ad::backward(total);
        state.optimizer.step(trainable, cfg.lr);
        loss_sum += total.item();
      } catch (const ad::NumericalError& e) {
        ad::current_tape().clear();
        std::ostringstream msg;
        msg << "non-finite value at epoch " << epoch + 1 << ", step " << task_step
            << " (lambda " << lambda << ", lr " << cfg.lr << "): " << e.what();
        throw ad::NumericalError(msg.str());
      }
      ++batches;
      ++task_step;
      ++state.global_step;
    }
    const double mean_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    if (!std::isfinite(mean_loss)) {
      throw ad::NumericalError("non-finite epoch loss at epoch " + std::to_string(epoch + 1));
    }
    result.epoch_loss.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch, state.global_step);
  }
  return result;
}

double evaluate(const model::ModelParams& params, const model::Vocab& vocab,
                const std::vector<data::Sample>& samples, data::TaskKind kind,
                std::size_t max_new_tokens) {
  if (samples.empty()) throw std::invalid_argument("evaluate: empty sample set");
  const auto preds = model::predict_targets(params, vocab, samples, max_new_tokens);
  if (kind == data::TaskKind::intent) {
    std::vector<std::string> p, g;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      p.push_back(io::join(preds[i]));
      g.push_back(io::join(samples[i].y));
    }
    return metrics::accuracy(p, g);
  }
  std::vector<metrics::PairSet> p(preds.begin(), preds.end()), g;
  for (const auto& s : samples) g.push_back(s.y);
  return metrics::span_f1(p, g);
}

namespace {

std::array<double, 4> dist_profile(const std::vector<std::vector<std::string>>& corpus) {
  std::array<double, 4> out{};
  for (std::size_t n = 1; n <= 4; ++n) out[n - 1] = metrics::dist_n(corpus, n);
  return out;
}

// Real training utterances matched task-by-task to the pseudo corpus size.
std::vector<std::vector<std::string>> matched_real_corpus(
    const std::vector<data::TaskData>& tasks, const std::vector<data::Sample>& pseudo, Rng& rng) {
  std::map<int, std::size_t> per_task;
  for (const auto& s : pseudo) ++per_task[s.task];
  std::vector<std::vector<std::string>> out;
  for (const auto& t : tasks) {
    const auto it = per_task.find(t.spec.id);
    if (it == per_task.end()) continue;
    std::vector<std::size_t> idx(t.train.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(std::span(idx));
    std::size_t remaining = it->second;
    while (remaining > 0) {
      for (std::size_t k = 0; k < idx.size() && remaining > 0; ++k, --remaining) {
        out.push_back(t.train[idx[k]].x);
      }
    }
  }
  return out;
}

}  // namespace

RunMetrics run_tasks(const RunConfig& requested, const std::vector<data::TaskData>& tasks) {
  const RunConfig cfg = requested.effective();
  cfg.validate();
  if (tasks.empty()) throw std::invalid_argument("run: no tasks");
  const data::TaskKind kind = tasks.front().spec.kind;
  for (const auto& t : tasks) {
    if (t.spec.kind != kind) throw std::invalid_argument("run: mixed task kinds in one stream");
    if (t.train.empty() || t.test.empty()) {
      throw std::invalid_argument("run: task " + t.spec.name + " has an empty split");
    }
  }
  const std::size_t N = tasks.size();

  RunMetrics m;
  m.config = config::to_json(requested);
  m.metric_name = kind == data::TaskKind::intent ? "accuracy" : "span_f1";
  m.results = metrics::ResultMatrix(N);
  for (const auto& t : tasks) {
    m.task_ids.push_back(t.spec.id);
    m.task_names.push_back(t.spec.name);
  }
  m.vocab = model::Vocab::build(tasks);

  Rng root(cfg.seed);
  Rng init_rng = root.fork(1);
  Rng train_rng = root.fork(2);
  Rng gen_rng = root.fork(3);
  Rng dist_rng = root.fork(4);

  TrainState state{model::init_params(cfg.model, m.vocab.size(), m.vocab.n_tasks(), init_rng), ad::Adam(), 0};

  auto eval_task = [&](std::size_t j) {
    return evaluate(state.params, m.vocab, tasks[j].test, kind, cfg.eval_max_new_tokens);
  };
  auto curve_point = [&](std::size_t learnt, long step) {
    double total = 0.0;
    for (std::size_t j = 0; j < learnt; ++j) total += eval_task(j);
    m.curve.push_back({static_cast<double>(step), total / static_cast<double>(learnt)});
  };

  if (cfg.mode == RunMode::multitask) {
    std::vector<std::size_t> by_id(N);
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(),
              [&](std::size_t a, std::size_t b) { return tasks[a].spec.id < tasks[b].spec.id; });
    std::vector<data::Sample> pooled;
    for (std::size_t k : by_id) pooled.insert(pooled.end(), tasks[k].train.begin(), tasks[k].train.end());
    curve_point(N, 0);
    const auto res = train_task(state, m.vocab, pooled, {}, nullptr, cfg, train_rng,
                                [&](std::size_t, long step) { curve_point(N, step); });
    m.loss_trace.push_back(res.epoch_loss);
    m.dropped_samples += res.dropped;
    std::vector<double> row(N);
    for (std::size_t j = 0; j < N; ++j) row[j] = eval_task(j);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = 0; j < N; ++j) m.results.set(i, j, row[j]);
    }
  } else {
    std::optional<TeacherSnapshot> teacher;
    curve_point(1, 0);
    for (std::size_t i = 0; i < N; ++i) {
      std::vector<data::Sample> pseudo;
      if (i > 0 && cfg.rehearsal && cfg.pseudo_ratio > 0.0) {
        std::vector<int> prior_tasks(m.task_ids.begin(), m.task_ids.begin() + static_cast<long>(i));
        Rng task_gen = gen_rng.fork(i);
        pseudo = generate_pseudo(*teacher, m.vocab, prior_tasks,
                                 pseudo_budget(cfg.pseudo_ratio, tasks[i].train.size()), cfg,
                                 task_gen, &m.generation);
        m.pseudo_samples.insert(m.pseudo_samples.end(), pseudo.begin(), pseudo.end());
      }
      state.optimizer.reset();
      const auto res =
          train_task(state, m.vocab, tasks[i].train, pseudo, teacher ? &*teacher : nullptr, cfg,
                     train_rng, [&](std::size_t, long step) { curve_point(i + 1, step); });
      m.loss_trace.push_back(res.epoch_loss);
      m.dropped_samples += res.dropped;
      for (std::size_t j = 0; j < N; ++j) m.results.set(i, j, eval_task(j));
      teacher.reset();
      teacher.emplace(snapshot(state.params, i));
    }
  }

  m.avg_metric = metrics::avg_jga(m.results);
  m.lca = metrics::lca(m.curve);
  if (!m.pseudo_samples.empty()) {
    std::vector<std::vector<std::string>> pseudo_corpus;
    for (const auto& s : m.pseudo_samples) pseudo_corpus.push_back(s.x);
    m.dist_pseudo = dist_profile(pseudo_corpus);
    m.dist_real = dist_profile(matched_real_corpus(tasks, m.pseudo_samples, dist_rng));
  }
  m.final_checksum = state.params.checksum();
  m.final_params = state.params;
  return m;
}

RunMetrics run_stream(const RunConfig& cfg) {
  cfg.validate();
  return run_tasks(cfg, data::realize_stream(data::make_stream(cfg.stream)));
}

nlohmann::json RunMetrics::to_json(const std::string& timestamp) const {
  nlohmann::json j;
  j["schema_version"] = config::kSchemaVersion;
  if (!timestamp.empty()) j["timestamp"] = timestamp;
  j["config"] = config;
  nlohmann::json task_list = nlohmann::json::array();
  for (std::size_t i = 0; i < task_ids.size(); ++i) {
    task_list.push_back({{"position", i}, {"id", task_ids[i]}, {"name", task_names[i]}});
  }
  j["tasks"] = task_list;
  j["metric"] = metric_name;
  nlohmann::json r = nlohmann::json::array();
  for (std::size_t i = 0; i < results.tasks(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < results.tasks(); ++c) {
      const auto v = results.get(i, c);
      row.push_back(v ? nlohmann::json(*v) : nlohmann::json());
    }
    r.push_back(row);
  }
  j["R"] = r;
  j["avg_metric"] = avg_metric;
  j["lca"] = lca;
  nlohmann::json c = nlohmann::json::array();
  for (const auto& p : curve) c.push_back({p.step, p.value});
  j["curve"] = c;
  j["loss_trace"] = loss_trace;
  if (pseudo_samples.empty()) {
    j["dist_n"] = nullptr;
  } else {
    j["dist_n"] = {{"pseudo", dist_pseudo}, {"real", dist_real}};
  }
  j["generation"] = {{"requested", generation.requested},
                     {"accepted", generation.accepted},
                     {"attempts", generation.attempts},
                     {"failures", generation.failures},
                     {"reject_reasons", generation.reject_reasons}};
  j["dropped_samples"] = dropped_samples;
  std::ostringstream hex;
  hex << std::hex << final_checksum;
  j["final_checksum"] = hex.str();
  return j;
}

std::string curve_csv(const metrics::LearningCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "step,avg_metric\n";
  for (const auto& p : curve) out << static_cast<long long>(p.step) << ',' << p.value << '\n';
  return out.str();
}

void write_run_artifacts(const std::filesystem::path& dir, const RunMetrics& m,
                         const std::string& timestamp) {
  io::write_file_atomic(dir / "metrics.json", m.to_json(timestamp).dump(2) + "\n");
  io::write_file_atomic(dir / "curve.csv", curve_csv(m.curve));
  std::ostringstream pseudo;
  data::write_samples(pseudo, m.pseudo_samples);
  io::write_file_atomic(dir / "pseudo.tsv", pseudo.str());
  model::save_checkpoint(dir / "model.ckpt", m.final_params, m.vocab,
                         {{"config", m.config}, {"avg_metric", m.avg_metric}});
}

}  // namespace dcl::cl
