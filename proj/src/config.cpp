#include "dcl/config.hpp"

#include <cmath>
#include <set>

#include "dcl/io.hpp"

namespace dcl::config {

using nlohmann::json;

namespace {

std::size_t default_epochs(data::TaskKind kind) { return kind == data::TaskKind::intent ? 5 : 10; }

// Walks one object level, rejecting keys outside `allowed`.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!allowed.count(k)) throw ConfigError(at(k), "unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Reader child(const char* key) const { return Reader(j_.at(key), at(key)); }

  template <typename Fn>
  void number(const char* key, double& out, Fn check) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d) || !check(d)) throw ConfigError(at(key), "value out of range");
    out = d;
  }

  template <typename T>
  void integer(const char* key, T& out, long long min_value) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    const long long i = v.get<long long>();
    if (i < min_value) {
      throw ConfigError(at(key), "must be >= " + std::to_string(min_value));
    }
    out = static_cast<T>(i);
  }

  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (v.is_boolean()) {
      out = v.get<bool>();
    } else if (v.is_string() && (v == "on" || v == "off")) {
      out = v == "on";
    } else {
      throw ConfigError(at(key), "expected true/false or \"on\"/\"off\"");
    }
  }

  template <typename Parse, typename T>
  void choice(const char* key, T& out, Parse parse) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    try {
      out = parse(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(at(key), e.what());
    }
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
};

}  // namespace

json paper_defaults() {
  return {
      {"training.lr", 5e-5},
      {"training.batch_size", 32},
      {"training.pseudo_ratio", 0.2},
      {"training.epochs", {{"intent", 5}, {"slot", 10}}},
      {"model.latent_dim", {{"intent", 128}, {"slot", 512}}},
      {"model.max_context", {{"intent", 256}, {"slot", 50}}},
  };
}

json to_json(const cl::RunConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["mode"] = cl::to_string(c.mode);
  j["seed"] = c.seed;
  j["stream"] = {{"n_tasks", c.stream.n_tasks},
                 {"kind", data::to_string(c.stream.kind)},
                 {"seed", c.stream.seed},
                 {"order", c.stream.order},
                 {"labels_per_task", c.stream.labels_per_task},
                 {"slots_per_task", c.stream.slots_per_task},
                 {"n_train", c.stream.n_train},
                 {"n_dev", c.stream.n_dev},
                 {"n_test", c.stream.n_test}};
  j["model"] = model::to_json(c.model);
  j["training"] = {
      {"epochs", c.epochs},
      {"lr", c.lr},
      {"batch_size", c.batch_size},
      {"kd", cl::to_string(c.kd)},
      {"rehearsal", c.rehearsal},
      {"pseudo_ratio", c.pseudo_ratio},
      {"kd_alpha", c.weights.kd_alpha},
      {"tau", c.weights.tau},
      {"anneal",
       {{"mode", c.anneal_mode == loss::AnnealMode::linear ? "linear" : "cyclical"},
        {"warmup_fraction", c.anneal_warmup_fraction},
        {"cycles", c.anneal_cycles}}},
  };
  j["generation"] = {{"max_length", c.generation_max_length},
                     {"temperature", c.generation_temperature},
                     {"top_k", c.generation_top_k},
                     {"top_p", c.generation_top_p},
                     {"max_resample", c.max_resample}};
  j["evaluation"] = {{"max_new_tokens", c.eval_max_new_tokens}};
  j["paper_defaults"] = paper_defaults();
  return j;
}

cl::RunConfig from_json(const json& j) {
  cl::RunConfig c;
  const Reader root(j, "");
  root.allow_only({"schema_version", "mode", "seed", "stream", "model", "training", "generation",
                   "evaluation", "paper_defaults"});
  if (root.has("schema_version")) {
    int version = 0;
    root.integer("schema_version", version, 1);
    if (version != kSchemaVersion) {
      throw ConfigError("schema_version", "unsupported version " + std::to_string(version) +
                                              " (expected " + std::to_string(kSchemaVersion) + ")");
    }
  }
  if (root.has("paper_defaults") && !j.at("paper_defaults").is_object()) {
    throw ConfigError("paper_defaults", "expected an object");
  }
  root.choice("mode", c.mode, cl::parse_mode);
  root.integer("seed", c.seed, 0);

  if (root.has("stream")) {
    const Reader s = root.child("stream");
    s.allow_only({"n_tasks", "kind", "seed", "order", "labels_per_task", "slots_per_task",
                  "n_train", "n_dev", "n_test"});
    s.integer("n_tasks", c.stream.n_tasks, 2);
    s.choice("kind", c.stream.kind, data::parse_task_kind);
    s.integer("seed", c.stream.seed, 0);
    s.integer("order", c.stream.order, 0);
    if (c.stream.order >= data::kNumOrders) {
      throw ConfigError("stream.order", "must be < " + std::to_string(data::kNumOrders));
    }
    s.integer("labels_per_task", c.stream.labels_per_task, 1);
    s.integer("slots_per_task", c.stream.slots_per_task, 1);
    s.integer("n_train", c.stream.n_train, 1);
    s.integer("n_dev", c.stream.n_dev, 0);
    s.integer("n_test", c.stream.n_test, 1);
  }
  c.epochs = default_epochs(c.stream.kind);

  if (root.has("model")) {
    const Reader m = root.child("model");
    m.allow_only({"embed_dim", "hidden_dim", "latent_dim", "latent", "max_context"});
    m.integer("embed_dim", c.model.embed_dim, 1);
    m.integer("hidden_dim", c.model.hidden_dim, 1);
    m.integer("latent_dim", c.model.latent_dim, 2);
    m.choice("latent", c.model.latent, model::parse_latent_family);
    m.integer("max_context", c.model.max_context, 4);
  }

  if (root.has("training")) {
    const Reader t = root.child("training");
    t.allow_only({"epochs", "lr", "batch_size", "kd", "rehearsal", "pseudo_ratio", "kd_alpha", "tau",
                  "anneal"});
    t.integer("epochs", c.epochs, 1);
    t.number("lr", c.lr, [](double v) { return v > 0.0; });
    t.integer("batch_size", c.batch_size, 1);
    t.choice("kd", c.kd, cl::parse_kd);
    t.boolean("rehearsal", c.rehearsal);
    t.number("pseudo_ratio", c.pseudo_ratio, [](double v) { return v >= 0.0 && v <= 1.0; });
    t.number("kd_alpha", c.weights.kd_alpha, [](double v) { return v >= 0.0 && v <= 1.0; });
    t.number("tau", c.weights.tau, [](double v) { return v > 0.0; });
    if (t.has("anneal")) {
      const Reader a = t.child("anneal");
      a.allow_only({"mode", "warmup_fraction", "cycles"});
      a.choice("mode", c.anneal_mode, [](const std::string& s) {
        if (s == "linear") return loss::AnnealMode::linear;
        if (s == "cyclical") return loss::AnnealMode::cyclical;
        throw std::invalid_argument("unknown anneal mode '" + s + "' (expected linear or cyclical)");
      });
      a.number("warmup_fraction", c.anneal_warmup_fraction,
               [](double v) { return v >= 0.0 && v <= 1.0; });
      a.integer("cycles", c.anneal_cycles, 1);
    }
  }

  if (root.has("generation")) {
    const Reader g = root.child("generation");
    g.allow_only({"max_length", "temperature", "top_k", "top_p", "max_resample"});
    g.integer("max_length", c.generation_max_length, 3);
    g.number("temperature", c.generation_temperature, [](double v) { return v > 0.0; });
    g.integer("top_k", c.generation_top_k, 0);
    g.number("top_p", c.generation_top_p, [](double v) { return v > 0.0 && v <= 1.0; });
    g.integer("max_resample", c.max_resample, 1);
  }
  if (root.has("evaluation")) {
    const Reader e = root.child("evaluation");
    e.allow_only({"max_new_tokens"});
    e.integer("max_new_tokens", c.eval_max_new_tokens, 1);
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", e.what());
  }
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("", "override '" + assignment + "' is not of the form key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError(path, "empty path component");
    if (!node->is_object()) throw ConfigError(path, "parent is not an object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

cl::RunConfig load(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::string text;
    try {
      text = io::read_file(path);
    } catch (const std::exception& e) {
      throw ConfigError("", e.what());
    }
    doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("", "config file " + path.string() + " is not valid JSON");
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return from_json(doc);
}

}  // namespace dcl::config
