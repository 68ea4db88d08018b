#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "dcl/io.hpp"
#include "dcl/rehearsal.hpp"

using namespace dcl;
namespace fs = std::filesystem;

namespace {

cl::RunConfig small_config() {
  cl::RunConfig cfg;
  cfg.stream.n_train = 40;
  cfg.stream.n_dev = 10;
  cfg.stream.n_test = 20;
  cfg.epochs = 2;
  return cfg;
}

nlohmann::json comparable(const cl::RunMetrics& m) {
  auto j = m.to_json();
  j.erase("config");
  return j;
}

}  // namespace

TEST_CASE("pseudo budget") {
  CHECK(cl::pseudo_budget(0.2, 200) == 40);
  CHECK(cl::pseudo_budget(0.1, 200) == 20);
  CHECK(cl::pseudo_budget(0.3, 10) == 3);
  CHECK(cl::pseudo_budget(0.25, 7) == 2);
  CHECK(cl::pseudo_budget(0.0, 200) == 0);
  CHECK(cl::pseudo_budget(1.0, 200) == 200);
}

TEST_CASE("names round trip") {
  for (auto kd : {cl::KdDivergence::js, cl::KdDivergence::kl, cl::KdDivergence::none}) {
    CHECK(cl::parse_kd(cl::to_string(kd)) == kd);
  }
  for (auto m : {cl::RunMode::continual, cl::RunMode::multitask, cl::RunMode::finetune}) {
    CHECK(cl::parse_mode(cl::to_string(m)) == m);
  }
  CHECK_THROWS(cl::parse_kd("mmd"));
  CHECK_THROWS(cl::parse_mode("joint"));
}

TEST_CASE("config validation") {
  auto cfg = small_config();
  cfg.pseudo_ratio = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg = small_config();
  cfg.batch_size = 0;
  CHECK_THROWS(cfg.validate());
  cfg = small_config();
  cfg.lr = -1;
  CHECK_THROWS(cfg.validate());
  cfg = small_config();
  cfg.mode = cl::RunMode::finetune;
  const auto eff = cfg.effective();
  CHECK_FALSE(eff.rehearsal);
  CHECK(eff.kd == cl::KdDivergence::none);
}

TEST_CASE("teacher stays frozen while the student trains and distills") {
  const auto cfg = small_config();
  const auto tasks = data::realize_stream(data::make_stream(cfg.stream));
  const auto vocab = model::Vocab::build(tasks);
  Rng rng(1);
  cl::TrainState state{model::init_params(cfg.model, vocab.size(), tasks.size(), rng), ad::Adam(), 0};
  cl::train_task(state, vocab, tasks[0].train, {}, nullptr, cfg, rng);
  const auto teacher = cl::snapshot(state.params, 0);
  const auto before = teacher.params.checksum();
  CHECK(before == state.params.checksum());

  cl::GenerationStats stats;
  const auto pseudo = cl::generate_pseudo(teacher, vocab, {tasks[0].spec.id}, 8, cfg, rng, &stats);
  CHECK(pseudo.size() <= 8);
  CHECK(stats.requested == 8);
  CHECK(stats.accepted == pseudo.size());
  CHECK(stats.failures == stats.requested - stats.accepted);
  for (const auto& s : pseudo) {
    CHECK(s.task == tasks[0].spec.id);
    CHECK(s.provenance == data::Provenance::pseudo);
  }
  cl::train_task(state, vocab, tasks[1].train, pseudo, &teacher, cfg, rng);
  CHECK(teacher.params.checksum() == before);
  CHECK(state.params.checksum() != before);
  for (const auto& t : teacher.params.trainable()) CHECK_FALSE(t.requires_grad());
}

TEST_CASE("no prior tasks means no pseudo samples") {
  const auto cfg = small_config();
  const auto tasks = data::realize_stream(data::make_stream(cfg.stream));
  const auto vocab = model::Vocab::build(tasks);
  Rng rng(1);
  const auto teacher = cl::snapshot(model::init_params(cfg.model, vocab.size(), tasks.size(), rng), 0);
  CHECK(cl::generate_pseudo(teacher, vocab, {}, 40, cfg, rng).empty());
  CHECK(cl::generate_pseudo(teacher, vocab, {0, 1}, 0, cfg, rng).empty());
}

TEST_CASE("continual run shape") {
  const auto cfg = small_config();
  const auto m = cl::run_stream(cfg);
  const std::size_t T = cfg.stream.n_tasks;
  REQUIRE(m.results.tasks() == T);
  for (std::size_t i = 0; i < T; ++i) CHECK(m.results.row_complete(i));
  CHECK(m.loss_trace.size() == T);
  for (const auto& phase : m.loss_trace) CHECK(phase.size() == cfg.epochs);
  CHECK(m.curve.size() == 1 + T * cfg.epochs);
  CHECK(m.curve.front().step == 0.0);
  for (std::size_t i = 1; i < m.curve.size(); ++i) CHECK(m.curve[i].step > m.curve[i - 1].step);
  CHECK(m.lca == doctest::Approx(metrics::lca(m.curve)));
  CHECK(m.avg_metric == doctest::Approx(metrics::avg_jga(m.results)));
  CHECK(m.metric_name == "accuracy");

  // Replay budget per prior task, tasks 2..T.
  const std::size_t per_task = cl::pseudo_budget(cfg.pseudo_ratio, cfg.stream.n_train);
  CHECK(m.pseudo_samples.size() <= per_task * (T * (T - 1) / 2));
  CHECK(m.generation.requested == per_task * (T * (T - 1) / 2));
  std::map<int, std::size_t> per_id;
  for (const auto& s : m.pseudo_samples) ++per_id[s.task];
  CHECK(per_id.count(m.task_ids.back()) == 0);
  for (const auto& [id, n] : per_id) CHECK(n <= per_task * (T - 1));

  const auto j = m.to_json("2026-01-01T00:00:00Z");
  for (const char* key : {"schema_version", "timestamp", "config", "tasks", "metric", "R", "avg_metric",
                          "lca", "curve", "loss_trace", "dist_n", "generation", "dropped_samples",
                          "final_checksum"}) {
    CHECK_MESSAGE(j.contains(key), key);
  }
  CHECK_FALSE(m.to_json().contains("timestamp"));
  CHECK(j.at("R").size() == T);
}

TEST_CASE("finetune mode equals rehearsal off with kd none") {
  auto a = small_config();
  a.mode = cl::RunMode::finetune;
  auto b = small_config();
  b.rehearsal = false;
  b.kd = cl::KdDivergence::none;
  const auto ma = cl::run_stream(a), mb = cl::run_stream(b);
  CHECK(ma.final_checksum == mb.final_checksum);
  CHECK(comparable(ma) == comparable(mb));
  CHECK(ma.pseudo_samples.empty());
}

TEST_CASE("multitask final row does not depend on the stream order") {
  auto a = small_config();
  a.mode = cl::RunMode::multitask;
  auto b = a;
  b.stream.order = 4;
  const auto ma = cl::run_stream(a), mb = cl::run_stream(b);
  const std::size_t T = a.stream.n_tasks, last = T - 1;
  std::map<int, double> ra, rb;
  for (std::size_t j = 0; j < T; ++j) {
    ra[ma.task_ids[j]] = ma.results.at(last, j);
    rb[mb.task_ids[j]] = mb.results.at(last, j);
  }
  CHECK(ra == rb);
  CHECK(ma.final_checksum == mb.final_checksum);
  CHECK(ma.loss_trace.size() == 1);
  for (std::size_t i = 0; i < T; ++i) {
    for (std::size_t j = 0; j < T; ++j) CHECK(ma.results.at(i, j) == ma.results.at(last, j));
  }
}

TEST_CASE("runs are reproducible") {
  auto cfg = small_config();
  cfg.seed = 5;
  const auto a = cl::run_stream(cfg), b = cl::run_stream(cfg);
  CHECK(a.to_json().dump() == b.to_json().dump());
  cfg.seed = 6;
  CHECK(cl::run_stream(cfg).final_checksum != a.final_checksum);
}

TEST_CASE("slot streams report span f1") {
  auto cfg = small_config();
  cfg.stream.kind = data::TaskKind::slot;
  cfg.stream.n_tasks = 2;
  cfg.epochs = 1;
  const auto m = cl::run_stream(cfg);
  CHECK(m.metric_name == "span_f1");
  CHECK(m.avg_metric >= 0.0);
  CHECK(m.avg_metric <= 1.0);
}

TEST_CASE("gaussian latent and kl distillation run end to end") {
  auto cfg = small_config();
  cfg.model.latent = model::LatentFamily::gaussian;
  cfg.kd = cl::KdDivergence::kl;
  cfg.stream.n_tasks = 2;
  cfg.epochs = 1;
  const auto m = cl::run_stream(cfg);
  CHECK(m.results.row_complete(1));
}

TEST_CASE("numerical blow-ups carry training context") {
  auto cfg = small_config();
  cfg.lr = 1e200;
  cfg.stream.n_tasks = 2;
  try {
    cl::run_stream(cfg);
    FAIL("expected a numerical error");
  } catch (const ad::NumericalError& e) {
    const std::string what = e.what();
    CHECK(what.find("epoch") != std::string::npos);
    CHECK(what.find("step") != std::string::npos);
  }
}

TEST_CASE("run artifacts") {
  const auto m = cl::run_stream(small_config());
  const auto dir = fs::temp_directory_path() / "dcl_run_artifacts";
  fs::remove_all(dir);
  cl::write_run_artifacts(dir, m, "2026-01-01T00:00:00Z");
  for (const char* f : {"metrics.json", "curve.csv", "pseudo.tsv", "model.ckpt"}) CHECK(fs::exists(dir / f));
  const auto csv = io::read_file(dir / "curve.csv");
  CHECK(csv.rfind("step,avg_metric\n", 0) == 0);
  const auto j = nlohmann::json::parse(io::read_file(dir / "metrics.json"));
  CHECK(j.at("timestamp") == "2026-01-01T00:00:00Z");
  std::ifstream in(dir / "pseudo.tsv");
  CHECK(data::read_samples(in).size() == m.pseudo_samples.size());
  const auto ckpt = model::load_checkpoint(dir / "model.ckpt");
  CHECK(ckpt.params.checksum() == m.final_checksum);
  fs::remove_all(dir);
}
