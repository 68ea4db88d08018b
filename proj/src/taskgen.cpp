#include "dcl/taskgen.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dcl/io.hpp"
#include "dcl/rng.hpp"

namespace dcl::data {

namespace {

using json = nlohmann::json;

constexpr std::size_t kKeywordsPerIntent = 4;
constexpr std::size_t kObjectsPerTask = 6;
constexpr std::size_t kValuesPerSlot = 6;
constexpr std::size_t kVerbsPerTask = 3;
constexpr std::size_t kIntentTemplatesPerTask = 4;
constexpr std::size_t kSlotTemplatesPerTask = 2;
constexpr int kMaxAttemptsPerSample = 2000;

const std::vector<std::vector<std::string>>& intent_template_pool() {
  static const std::vector<std::vector<std::string>> pool = {
      {"{F}", "{F}", "{KEY}", "{D}", "{O}"},
      {"{KEY}", "{D}", "{O}", "{F}"},
      {"{F}", "{F}", "{F}", "{KEY}", "{O}"},
      {"{KEY}", "{O}"},
      {"{F}", "{KEY}", "{D}", "{O}", "{F}", "{F}"},
      {"{F}", "{O}", "{KEY}"},
  };
  return pool;
}

const std::vector<std::vector<std::string>>& slot_template_pool() {
  static const std::vector<std::vector<std::string>> pool = {
      {"{F}", "{F}", "{V}", "{SLOTS}"},
      {"{V}", "{SLOTS}", "{F}"},
      {"{F}", "{V}", "{SLOTS}", "{F}", "{F}"},
  };
  return pool;
}

const std::vector<std::string>& determiners() {
  static const std::vector<std::string> d = {"the", "a", "my"};
  return d;
}

// Pronounceable pseudo-words, unique across one stream.
class WordMaker {
 public:
  explicit WordMaker(Rng& rng) : rng_(rng) {
    for (const auto& w : shared_function_words()) used_.insert(w);
  }

  std::string make(int syllables) {
    static const std::string consonants = "bdfgklmnprstvz";
    static const std::string vowels = "aeiou";
    for (;;) {
      std::string w;
      for (int i = 0; i < syllables; ++i) {
        w += consonants[rng_.below(consonants.size())];
        w += vowels[rng_.below(vowels.size())];
      }
      if (used_.insert(w).second) return w;
    }
  }

  std::vector<std::string> make_many(std::size_t n, int syllables) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(make(syllables));
    return out;
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

template <typename T>
const T& choose(const std::vector<T>& items, Rng& rng) {
  return items[rng.below(items.size())];
}

std::vector<std::size_t> choose_distinct(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

TaskSpec make_intent_spec(int id, const StreamConfig& cfg, WordMaker& words, Rng& rng) {
  TaskSpec spec;
  spec.id = id;
  spec.kind = TaskKind::intent;
  spec.name = words.make(2);
  for (std::size_t i = 0; i < cfg.labels_per_task; ++i) {
    spec.labels.push_back(spec.name + "." + words.make(2));
    spec.label_keywords.push_back(words.make_many(kKeywordsPerIntent, 2));
  }
  spec.fillers["{O}"] = words.make_many(kObjectsPerTask, 3);
  spec.fillers["{F}"] = shared_function_words();
  spec.fillers["{D}"] = determiners();
  const auto& pool = intent_template_pool();
  for (std::size_t i : choose_distinct(pool.size(), kIntentTemplatesPerTask, rng)) {
    spec.templates.push_back(pool[i]);
  }
  return spec;
}

TaskSpec make_slot_spec(int id, const StreamConfig& cfg, WordMaker& words, Rng& rng) {
  TaskSpec spec;
  spec.id = id;
  spec.kind = TaskKind::slot;
  spec.name = words.make(2);
  for (std::size_t i = 0; i < cfg.slots_per_task; ++i) {
    spec.labels.push_back(spec.name + "." + words.make(2));
    spec.slot_carriers.push_back(words.make(2));
    spec.slot_values.push_back(words.make_many(kValuesPerSlot, 3));
  }
  spec.fillers["{V}"] = words.make_many(kVerbsPerTask, 2);
  spec.fillers["{F}"] = shared_function_words();
  const auto& pool = slot_template_pool();
  for (std::size_t i : choose_distinct(pool.size(), kSlotTemplatesPerTask, rng)) {
    spec.templates.push_back(pool[i]);
  }
  return spec;
}

std::string fill(const TaskSpec& spec, const std::string& slot, Rng& rng) {
  auto it = spec.fillers.find(slot);
  if (it == spec.fillers.end() || it->second.empty()) {
    throw std::invalid_argument("task " + spec.name + ": no filler for " + slot);
  }
  return choose(it->second, rng);
}

Sample sample_intent(const TaskSpec& spec, std::size_t label, Rng& rng) {
  Sample s;
  s.task = spec.id;
  const auto& tmpl = choose(spec.templates, rng);
  for (const auto& part : tmpl) {
    if (part == "{KEY}") {
      s.x.push_back(choose(spec.label_keywords[label], rng));
    } else if (!part.empty() && part.front() == '{') {
      s.x.push_back(fill(spec, part, rng));
    } else {
      s.x.push_back(part);
    }
  }
  s.y = {spec.labels[label]};
  return s;
}

Sample sample_slot(const TaskSpec& spec, Rng& rng) {
  Sample s;
  s.task = spec.id;
  const std::size_t n_slots = spec.labels.size();
  const std::size_t used = 1 + rng.below(n_slots);
  std::vector<std::size_t> slots = choose_distinct(n_slots, used, rng);
  rng.shuffle(std::span<std::size_t>(slots));
  std::vector<std::pair<std::string, std::string>> pairs;
  const auto& tmpl = choose(spec.templates, rng);
  for (const auto& part : tmpl) {
    if (part == "{SLOTS}") {
      for (std::size_t k : slots) {
        const std::string& value = choose(spec.slot_values[k], rng);
        s.x.push_back(spec.slot_carriers[k]);
        s.x.push_back(value);
        pairs.emplace_back(spec.labels[k], value);
      }
    } else if (!part.empty() && part.front() == '{') {
      s.x.push_back(fill(spec, part, rng));
    } else {
      s.x.push_back(part);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  for (const auto& [slot, value] : pairs) s.y.push_back(slot + ":" + value);
  return s;
}

}  // namespace

std::string to_string(TaskKind kind) { return kind == TaskKind::intent ? "intent" : "slot"; }

TaskKind parse_task_kind(const std::string& s) {
  if (s == "intent") return TaskKind::intent;
  if (s == "slot") return TaskKind::slot;
  throw std::invalid_argument("unknown task kind '" + s + "' (expected intent or slot)");
}

std::string to_string(Provenance p) { return p == Provenance::real ? "real" : "pseudo"; }

const std::vector<std::string>& shared_function_words() {
  static const std::vector<std::string> words = {
      "please", "can", "you", "i", "want", "to", "the", "a",
      "my", "me", "for", "now", "could", "help", "with",
  };
  return words;
}

std::vector<int> order_permutation(std::size_t n_tasks, int order) {
  if (order < 0 || order >= kNumOrders) {
    throw std::invalid_argument("order must lie in [0, " + std::to_string(kNumOrders - 1) + "]");
  }
  static const int table4[kNumOrders][4] = {
      {0, 1, 2, 3}, {3, 2, 1, 0}, {1, 3, 0, 2}, {2, 0, 3, 1}, {0, 2, 1, 3}, {3, 1, 2, 0},
  };
  std::vector<int> perm(n_tasks);
  if (n_tasks == 4) {
    std::copy(std::begin(table4[order]), std::end(table4[order]), perm.begin());
    return perm;
  }
  for (std::size_t i = 0; i < n_tasks; ++i) perm[i] = static_cast<int>(i);
  if (order > 0) {
    Rng rng(Rng::mix(0x5eed0000ULL + static_cast<std::uint64_t>(order)));
    rng.shuffle(std::span<int>(perm));
  }
  return perm;
}

TaskStream make_stream(const StreamConfig& cfg) {
  if (cfg.n_tasks < 2) throw std::invalid_argument("make_stream: need at least 2 tasks");
  if (cfg.labels_per_task < 1 || cfg.slots_per_task < 1) {
    throw std::invalid_argument("make_stream: label space must be non-empty");
  }
  Rng rng(cfg.seed);
  WordMaker words(rng);
  std::vector<TaskSpec> by_id;
  for (std::size_t i = 0; i < cfg.n_tasks; ++i) {
    const int id = static_cast<int>(i);
    TaskSpec spec = cfg.kind == TaskKind::intent ? make_intent_spec(id, cfg, words, rng)
                                                 : make_slot_spec(id, cfg, words, rng);
    spec.n_train = cfg.n_train;
    spec.n_dev = cfg.n_dev;
    spec.n_test = cfg.n_test;
    spec.seed = Rng::mix(cfg.seed * 1000003ULL + i);
    by_id.push_back(std::move(spec));
  }
  TaskStream stream;
  stream.order = cfg.order;
  stream.permutation = order_permutation(cfg.n_tasks, cfg.order);
  for (int id : stream.permutation) stream.tasks.push_back(by_id[static_cast<std::size_t>(id)]);
  return stream;
}

TaskData realize(const TaskSpec& spec) {
  if (spec.labels.empty()) throw std::invalid_argument("realize: empty label space");
  if (spec.templates.empty()) throw std::invalid_argument("realize: no templates");
  Rng rng(spec.seed);
  const std::size_t total = spec.n_train + spec.n_dev + spec.n_test;
  std::set<std::vector<std::string>> seen;
  std::vector<Sample> all;
  all.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttemptsPerSample && !placed; ++attempt) {
      Sample s = spec.kind == TaskKind::intent ? sample_intent(spec, k % spec.labels.size(), rng)
                                               : sample_slot(spec, rng);
      if (seen.insert(s.x).second) {
        all.push_back(std::move(s));
        placed = true;
      }
    }
    if (!placed) {
      throw std::runtime_error("realize: grammar of task " + spec.name + " is too small: " +
                               "needs at least " + std::to_string(total) +
                               " distinct utterances, found only " + std::to_string(seen.size()));
    }
  }
  rng.shuffle(std::span<Sample>(all));
  TaskData data;
  data.spec = spec;
  const auto train_end = all.begin() + static_cast<std::ptrdiff_t>(spec.n_train);
  const auto dev_end = train_end + static_cast<std::ptrdiff_t>(spec.n_dev);
  data.train.assign(all.begin(), train_end);
  data.dev.assign(train_end, dev_end);
  data.test.assign(dev_end, all.end());
  return data;
}

std::vector<TaskData> realize_stream(const TaskStream& stream) {
  std::vector<TaskData> out;
  for (const auto& spec : stream.tasks) out.push_back(realize(spec));
  return out;
}

std::string format_line(const Sample& s) {
  return std::to_string(s.task) + "\t" + io::join(s.x) + "\t" + io::join(s.y) + "\t" +
         to_string(s.provenance);
}

Sample parse_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (fields.size() != 4) {
    throw std::invalid_argument("dataset line needs 4 tab-separated fields, got " +
                                std::to_string(fields.size()));
  }
  Sample s;
  try {
    s.task = std::stoi(fields[0]);
  } catch (const std::exception&) {
    throw std::invalid_argument("dataset line: bad task id '" + fields[0] + "'");
  }
  s.x = io::split_whitespace(fields[1]);
  s.y = io::split_whitespace(fields[2]);
  std::string prov = fields[3];
  if (!prov.empty() && prov.back() == '\r') prov.pop_back();
  if (prov == "real") {
    s.provenance = Provenance::real;
  } else if (prov == "pseudo") {
    s.provenance = Provenance::pseudo;
  } else {
    throw std::invalid_argument("dataset line: bad provenance '" + prov + "'");
  }
  if (s.y.empty()) throw std::invalid_argument("dataset line: empty target");
  return s;
}

void write_samples(std::ostream& out, const std::vector<Sample>& samples) {
  for (const auto& s : samples) out << format_line(s) << '\n';
}

std::vector<Sample> read_samples(std::istream& in) {
  std::vector<Sample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_line(line));
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<TaskData>& tasks,
                   const StreamConfig& cfg) {
  json manifest;
  manifest["format_version"] = 1;
  manifest["kind"] = to_string(cfg.kind);
  manifest["seed"] = cfg.seed;
  manifest["order"] = cfg.order;
  manifest["tasks"] = json::array();
  for (const auto& t : tasks) {
    std::ostringstream body;
    write_samples(body, t.train);
    write_samples(body, t.dev);
    write_samples(body, t.test);
    const std::string file = "task_" + std::to_string(t.spec.id) + ".tsv";
    io::write_file_atomic(dir / file, body.str());
    const std::size_t a = t.train.size(), b = a + t.dev.size(), c = b + t.test.size();
    manifest["tasks"].push_back({
        {"id", t.spec.id},
        {"name", t.spec.name},
        {"kind", to_string(t.spec.kind)},
        {"labels", t.spec.labels},
        {"file", file},
        {"splits", {{"train", {0, a}}, {"dev", {a, b}}, {"test", {b, c}}}},
    });
  }
  io::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<TaskData> read_dataset(const std::filesystem::path& dir) {
  const json manifest = json::parse(io::read_file(dir / "manifest.json"));
  std::vector<TaskData> out;
  for (const auto& t : manifest.at("tasks")) {
    TaskData data;
    data.spec.id = t.at("id").get<int>();
    data.spec.name = t.value("name", "task" + std::to_string(data.spec.id));
    data.spec.kind = parse_task_kind(t.value("kind", manifest.value("kind", "intent")));
    data.spec.labels = t.value("labels", std::vector<std::string>{});
    std::ifstream in(dir / t.at("file").get<std::string>());
    if (!in) throw std::runtime_error("cannot open task file " + t.at("file").get<std::string>());
    const std::vector<Sample> lines = read_samples(in);
    auto range = [&](const char* split) {
      const auto r = t.at("splits").at(split);
      const std::size_t lo = r.at(0).get<std::size_t>(), hi = r.at(1).get<std::size_t>();
      if (lo > hi || hi > lines.size()) {
        throw std::runtime_error(std::string("manifest: bad ") + split + " range");
      }
      return std::vector<Sample>(lines.begin() + static_cast<std::ptrdiff_t>(lo),
                                 lines.begin() + static_cast<std::ptrdiff_t>(hi));
    };
    data.train = range("train");
    data.dev = range("dev");
    data.test = range("test");
    data.spec.n_train = data.train.size();
    data.spec.n_dev = data.dev.size();
    data.spec.n_test = data.test.size();
    out.push_back(std::move(data));
  }
  return out;
}

}  // namespace dcl::data
