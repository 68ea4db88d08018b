#include "dcl/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "dcl/config.hpp"
#include "dcl/io.hpp"
#include "dcl/rehearsal.hpp"
#include "dcl/selftest.hpp"
#include "dcl/taskgen.hpp"

namespace dcl::cli {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path default_output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? fs::path(env) : fs::path("dcl-runs");
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v < 0) {
      throw config::ConfigError(what, "'" + item + "' is not a non-negative integer");
    }
    out.push_back(v);
  }
  if (out.empty()) throw config::ConfigError(what, "empty list");
  return out;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Flags shared by train and sweep; unset flags add no override.
struct RunFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::string mode, kd, rehearsal, latent, kind;
  std::optional<double> pseudo_ratio, lr;
  std::optional<long> seed, order, epochs, batch_size, latent_dim, n_tasks;

  void add_to(CLI::App* app, bool single_run) {
    app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "override as key.path=value (repeatable)");
    app->add_option("--kind", kind, "intent or slot");
    app->add_option("--latent", latent, "dirichlet or gaussian");
    app->add_option("--kd", kd, "js, kl or none");
    app->add_option("--rehearsal", rehearsal, "on or off");
    app->add_option("--pseudo-ratio", pseudo_ratio, "pseudo samples per current sample, in [0, 1]");
    app->add_option("--epochs", epochs, "epochs per task");
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--batch-size", batch_size, "batch size");
    app->add_option("--latent-dim", latent_dim, "latent dimension K");
    app->add_option("--tasks", n_tasks, "number of tasks in the stream");
    if (single_run) {
      app->add_option("--mode", mode, "continual, multitask or finetune");
      app->add_option("--seed", seed, "run seed");
      app->add_option("--order", order, "task order 0-5");
    }
  }

  std::vector<std::string> overrides() const {
    std::vector<std::string> o;
    auto str = [](const std::string& v) { return json(v).dump(); };
    if (!mode.empty()) o.push_back("mode=" + str(mode));
    if (!kind.empty()) o.push_back("stream.kind=" + str(kind));
    if (!latent.empty()) o.push_back("model.latent=" + str(latent));
    if (!kd.empty()) o.push_back("training.kd=" + str(kd));
    if (!rehearsal.empty()) o.push_back("training.rehearsal=" + str(rehearsal));
    auto num = [&o](const char* key, const auto& v) {
      if (v) o.push_back(std::string(key) + "=" + json(*v).dump());
    };
    num("training.pseudo_ratio", pseudo_ratio);
    num("training.lr", lr);
    num("training.epochs", epochs);
    num("training.batch_size", batch_size);
    num("model.latent_dim", latent_dim);
    num("stream.n_tasks", n_tasks);
    num("seed", seed);
    num("stream.order", order);
    o.insert(o.end(), sets.begin(), sets.end());
    return o;
  }
};

cl::RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  return config::load(path, overrides);
}

fs::path run_dir_name(const cl::RunConfig& c) {
  std::ostringstream name;
  name << cl::to_string(c.mode) << '-' << model::to_string(c.model.latent) << '-'
       << cl::to_string(c.effective().kd) << "-r" << c.pseudo_ratio << "-o" << c.stream.order
       << "-s" << c.seed;
  return name.str();
}

int cmd_gen_data(const fs::path& out_dir, const data::StreamConfig& stream, std::ostream& out) {
  const auto tasks = data::realize_stream(data::make_stream(stream));
  data::write_dataset(out_dir, tasks, stream);
  out << "wrote " << tasks.size() << " task files and manifest.json to " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const RunFlags& flags, const std::string& data_dir, fs::path out_dir,
              std::ostream& out) {
  const cl::RunConfig cfg = load_config(flags.config_path, flags.overrides());
  if (out_dir.empty()) out_dir = default_output_root() / "train" / run_dir_name(cfg);
  cl::RunMetrics m = data_dir.empty() ? cl::run_stream(cfg)
                                      : cl::run_tasks(cfg, data::read_dataset(data_dir));
  cl::write_run_artifacts(out_dir, m, utc_timestamp());
  out << "avg_" << m.metric_name << " " << fmt(m.avg_metric) << "  lca " << fmt(m.lca)
      << "  artifacts " << out_dir.string() << "\n";
  return kExitOk;
}

struct SweepCell {
  std::string arm;
  int order;
  int seed;
};

int cmd_sweep(const RunFlags& flags, const std::string& arms_arg, const std::string& orders_arg,
              const std::string& seeds_arg, std::size_t jobs, fs::path out_dir,
              std::ostream& out) {
  const auto arms = split_list(arms_arg, ';');
  const auto orders = parse_int_list(orders_arg, "--orders");
  const auto seeds = parse_int_list(seeds_arg, "--seeds");
  if (arms.empty()) throw config::ConfigError("--arms", "empty list");
  std::vector<std::string> arm_names;
  for (const auto& a : arms) arm_names.push_back(arm_name(a));

  // Validate every arm's config up front so a typo fails before any run.
  std::vector<SweepCell> cells;
  for (const auto& a : arms) {
    auto o = flags.overrides();
    const auto extra = arm_overrides(a);
    o.insert(o.end(), extra.begin(), extra.end());
    (void)load_config(flags.config_path, o);
    for (int order : orders) {
      for (int seed : seeds) cells.push_back({a, order, seed});
    }
  }
  if (out_dir.empty()) out_dir = default_output_root() / "sweep";

  std::vector<json> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex print_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& c = cells[i];
      json cell = {{"arm", arm_name(c.arm)}, {"order", c.order}, {"seed", c.seed}};
      const fs::path dir = out_dir / arm_name(c.arm) /
                           ("order" + std::to_string(c.order) + "-seed" + std::to_string(c.seed));
      try {
        auto o = flags.overrides();
        const auto extra = arm_overrides(c.arm);
        o.insert(o.end(), extra.begin(), extra.end());
        o.push_back("stream.order=" + std::to_string(c.order));
        o.push_back("seed=" + std::to_string(c.seed));
        const auto m = cl::run_stream(load_config(flags.config_path, o));
        cl::write_run_artifacts(dir, m, utc_timestamp());
        cell["ok"] = true;
        cell["avg_metric"] = m.avg_metric;
        cell["lca"] = m.lca;
        cell["metrics"] = fs::relative(dir / "metrics.json", out_dir).generic_string();
      } catch (const std::exception& e) {
        cell["ok"] = false;
        cell["error"] = e.what();
      }
      std::lock_guard lock(print_mutex);
      out << "[" << i + 1 << "/" << cells.size() << "] " << cell["arm"].get<std::string>()
          << " order " << c.order << " seed " << c.seed << ": "
          << (cell["ok"].get<bool>() ? "avg " + fmt(cell["avg_metric"].get<double>()) + " lca " +
                                           fmt(cell["lca"].get<double>())
                                     : "FAILED " + cell["error"].get<std::string>())
          << std::endl;
      results[i] = std::move(cell);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::max<std::size_t>(jobs, 1); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const auto rows = summarize(arm_names, results);
  io::write_file_atomic(out_dir / "sweep.json",
                        json{{"arms", arm_names}, {"orders", orders}, {"seeds", seeds}, {"cells", results}}
                                .dump(2) + "\n");
  io::write_file_atomic(out_dir / "summary.csv", summary_csv(rows));
  io::write_file_atomic(out_dir / "summary.txt", summary_text(rows));
  out << summary_text(rows);
  const bool partial = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.missing > 0; });
  return partial ? kExitPartialSweep : kExitOk;
}

int cmd_report(const fs::path& path, std::ostream& out) {
  if (fs::is_regular_file(path)) {
    out << run_report(json::parse(io::read_file(path)));
    return kExitOk;
  }
  if (fs::exists(path / "metrics.json")) {
    out << run_report(json::parse(io::read_file(path / "metrics.json")));
    return kExitOk;
  }
  if (fs::exists(path / "sweep.json")) {
    const json sweep = json::parse(io::read_file(path / "sweep.json"));
    std::vector<json> cells = sweep.at("cells").get<std::vector<json>>();
    const auto rows = summarize(sweep.at("arms").get<std::vector<std::string>>(), cells);
    out << summary_text(rows);
    return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.missing > 0; })
               ? kExitPartialSweep
               : kExitOk;
  }
  throw std::runtime_error("report: no metrics.json or sweep.json under " + path.string());
}

int cmd_selftest(std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto results = selftest::run_all();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << selftest::format_report(results) << "elapsed " << fmt(secs, 2) << " s\n";
  return selftest::all_passed(results) ? kExitOk : kExitFailure;
}

}  // namespace

std::vector<std::string> arm_overrides(const std::string& arm) {
  const auto colon = arm.find(':');
  if (colon != std::string::npos) return split_list(arm.substr(colon + 1), ',');
  if (arm == "dcl") {
    return {"mode=\"continual\"", "model.latent=\"dirichlet\"", "training.kd=\"js\"",
            "training.rehearsal=true"};
  }
  if (arm == "dcl-kl") {
    return {"mode=\"continual\"", "model.latent=\"dirichlet\"", "training.kd=\"kl\"",
            "training.rehearsal=true"};
  }
  if (arm == "gaussian-kl") {
    return {"mode=\"continual\"", "model.latent=\"gaussian\"", "training.kd=\"kl\"",
            "training.rehearsal=true"};
  }
  if (arm == "gaussian-js") {
    return {"mode=\"continual\"", "model.latent=\"gaussian\"", "training.kd=\"js\"",
            "training.rehearsal=true"};
  }
  if (arm == "finetune") return {"mode=\"finetune\""};
  if (arm == "multitask") return {"mode=\"multitask\""};
  if (arm.rfind("ratio-", 0) == 0) {
    auto o = arm_overrides("dcl");
    o.push_back("training.pseudo_ratio=" + arm.substr(6));
    return o;
  }
  throw config::ConfigError("--arms", "unknown arm '" + arm + "'");
}

std::string arm_name(const std::string& arm) { return arm.substr(0, arm.find(':')); }

json strip_timestamp(json metrics) {
  metrics.erase("timestamp");
  return metrics;
}

std::vector<SweepRow> summarize(const std::vector<std::string>& arms,
                                const std::vector<json>& cells) {
  std::vector<SweepRow> rows;
  for (const auto& arm : arms) {
    SweepRow row;
    row.arm = arm;
    std::vector<double> avg, lca;
    for (const auto& c : cells) {
      if (c.value("arm", "") != arm) continue;
      if (c.value("ok", false)) {
        avg.push_back(c.at("avg_metric").get<double>());
        lca.push_back(c.at("lca").get<double>());
      } else {
        ++row.missing;
      }
    }
    row.runs = avg.size();
    auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
      mean = sd = 0.0;
      if (v.empty()) return;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      if (v.size() > 1) {
        for (double x : v) sd += (x - mean) * (x - mean);
        sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
      }
    };
    stats(avg, row.avg_mean, row.avg_std);
    stats(lca, row.lca_mean, row.lca_std);
    rows.push_back(row);
  }
  return rows;
}

std::string summary_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "arm,runs,missing,avg_mean,avg_std,lca_mean,lca_std\n";
  for (const auto& r : rows) {
    out << r.arm << ',' << r.runs << ',' << r.missing << ',';
    if (r.runs == 0) {
      out << ",,,\n";
    } else {
      out << fmt(r.avg_mean, 6) << ',' << fmt(r.avg_std, 6) << ',' << fmt(r.lca_mean, 6) << ','
          << fmt(r.lca_std, 6) << '\n';
    }
  }
  return out.str();
}

std::string summary_text(const std::vector<SweepRow>& rows) {
  std::size_t w = 3;
  for (const auto& r : rows) w = std::max(w, r.arm.size());
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %4s  %7s  %-17s  %-17s\n", static_cast<int>(w), "arm",
                "runs", "missing", "avg (mean+-std)", "lca (mean+-std)");
  out << line;
  for (const auto& r : rows) {
    const std::string avg = r.runs ? fmt(r.avg_mean) + " +- " + fmt(r.avg_std) : "MISSING";
    const std::string lca = r.runs ? fmt(r.lca_mean) + " +- " + fmt(r.lca_std) : "MISSING";
    std::snprintf(line, sizeof line, "%-*s  %4zu  %7zu  %-17s  %-17s\n", static_cast<int>(w),
                  r.arm.c_str(), r.runs, r.missing, avg.c_str(), lca.c_str());
    out << line;
  }
  return out.str();
}

std::string run_report(const json& m) {
  std::ostringstream out;
  const auto& cfg = m.at("config");
  out << "mode " << cfg.value("mode", "?") << ", latent " << cfg.at("model").value("latent", "?")
      << ", kd " << cfg.at("training").value("kd", "?") << ", seed " << cfg.value("seed", 0)
      << ", order " << cfg.at("stream").value("order", 0) << "\n";
  out << "R (rows: after training task i; columns: task j, learning order)\n";
  for (const auto& row : m.at("R")) {
    out << " ";
    for (const auto& v : row) out << "  " << (v.is_null() ? "  -   " : fmt(v.get<double>()));
    out << "\n";
  }
  out << "avg " << m.value("metric", "metric") << " " << fmt(m.at("avg_metric").get<double>())
      << "\nlca " << fmt(m.at("lca").get<double>()) << "\n";
  const auto& d = m.at("dist_n");
  if (!d.is_null()) {
    out << "dist-n       1       2       3       4\n";
    for (const char* which : {"pseudo", "real"}) {
      char name[16];
      std::snprintf(name, sizeof name, "%-8s", which);
      out << name;
      for (const auto& v : d.at(which)) out << "  " << fmt(v.get<double>());
      out << "\n";
    }
    const auto p = d.at("pseudo").get<std::vector<double>>();
    const bool rising = std::is_sorted(p.begin(), p.end());
    out << "note: pseudo dist-1 <= ... <= dist-4 " << (rising ? "holds" : "does not hold") << "\n";
  }
  const auto& g = m.at("generation");
  out << "generation: requested " << g.at("requested") << ", accepted " << g.at("accepted")
      << ", attempts " << g.at("attempts") << ", failures " << g.at("failures") << "\n";
  return out.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dirichlet continual learning lab", "dcl"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  data::StreamConfig gen;
  std::string gen_out, gen_kind = "intent";
  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic task stream");
  gen_cmd->add_option("--out", gen_out, "output directory");
  gen_cmd->add_option("--kind", gen_kind, "intent or slot");
  gen_cmd->add_option("--tasks", gen.n_tasks, "number of tasks");
  gen_cmd->add_option("--seed", gen.seed, "stream seed");
  gen_cmd->add_option("--order", gen.order, "task order 0-5");
  gen_cmd->add_option("--n-train", gen.n_train, "train samples per task");
  gen_cmd->add_option("--n-dev", gen.n_dev, "dev samples per task");
  gen_cmd->add_option("--n-test", gen.n_test, "test samples per task");

  RunFlags train_flags;
  std::string train_out, train_data;
  auto* train_cmd = app.add_subcommand("train", "run one continual-learning stream");
  train_flags.add_to(train_cmd, true);
  train_cmd->add_option("--out", train_out, "artifact directory");
  train_cmd->add_option("--data", train_data, "dataset directory from gen-data")
      ->check(CLI::ExistingDirectory);

  RunFlags sweep_flags;
  std::string sweep_out, arms = "dcl;finetune", orders = "0", seeds = "0";
  std::size_t jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "run orders x seeds x arms and summarize");
  sweep_flags.add_to(sweep_cmd, false);
  sweep_cmd->add_option("--arms", arms, "arms separated by ';'");
  sweep_cmd->add_option("--orders", orders, "comma-separated orders");
  sweep_cmd->add_option("--seeds", seeds, "comma-separated seeds");
  sweep_cmd->add_option("--jobs", jobs, "parallel runs");
  sweep_cmd->add_option("--out", sweep_out, "sweep directory");

  std::string report_path;
  auto* report_cmd = app.add_subcommand("report", "summarize a run or sweep directory");
  report_cmd->add_option("path", report_path, "run directory, metrics.json or sweep directory")
      ->required();

  auto* selftest_cmd = app.add_subcommand("selftest", "fast invariant checks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*gen_cmd) {
      gen.kind = data::parse_task_kind(gen_kind);
      if (gen.order < 0 || gen.order >= data::kNumOrders) {
        throw config::ConfigError("--order", "must lie in [0, 5]");
      }
      return cmd_gen_data(gen_out.empty() ? default_output_root() / "data" : fs::path(gen_out),
                          gen, out);
    }
    if (*train_cmd) return cmd_train(train_flags, train_data, train_out, out);
    if (*sweep_cmd) return cmd_sweep(sweep_flags, arms, orders, seeds, jobs, sweep_out, out);
    if (*report_cmd) return cmd_report(report_path, out);
    if (*selftest_cmd) return cmd_selftest(out);
  } catch (const config::ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ad::NumericalError& e) {
    err << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace dcl::cli
