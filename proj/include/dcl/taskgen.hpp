#ifndef DCL_TASKGEN_HPP
#define DCL_TASKGEN_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dcl::data {

enum class TaskKind { intent, slot };
enum class Provenance { real, pseudo };

std::string to_string(TaskKind kind);
TaskKind parse_task_kind(const std::string& s);
std::string to_string(Provenance p);

/// One example. Tokens are kept as strings; the model maps them to ids.
struct Sample {
  int task = 0;
  std::vector<std::string> x;
  std::vector<std::string> y;
  Provenance provenance = Provenance::real;

  bool operator==(const Sample&) const = default;
};

/// A task grammar. Templates are token patterns whose `{NAME}` slots draw
/// from `fillers`. Intent templates use `{KEY}` for the label keyword; slot
/// templates use `{SLOTS}` for the shuffled "carrier value" phrases.
struct TaskSpec {
  int id = 0;
  std::string name;
  TaskKind kind = TaskKind::intent;
  std::vector<std::string> labels;                     // intent names or slot names
  std::vector<std::vector<std::string>> templates;
  std::map<std::string, std::vector<std::string>> fillers;
  std::vector<std::vector<std::string>> label_keywords;  // intent: keywords per label
  std::vector<std::string> slot_carriers;                // slot: carrier word per slot
  std::vector<std::vector<std::string>> slot_values;     // slot: values per slot
  std::size_t n_train = 200;
  std::size_t n_dev = 50;
  std::size_t n_test = 100;
  std::uint64_t seed = 0;
};

struct TaskData {
  TaskSpec spec;
  std::vector<Sample> train;
  std::vector<Sample> dev;
  std::vector<Sample> test;
};

struct StreamConfig {
  std::size_t n_tasks = 4;
  TaskKind kind = TaskKind::intent;
  std::uint64_t seed = 0;
  int order = 0;  // 0..5
  std::size_t labels_per_task = 5;  // intents per task
  std::size_t slots_per_task = 3;
  std::size_t n_train = 200;
  std::size_t n_dev = 50;
  std::size_t n_test = 100;
};

/// Tasks in learning order plus the permutation that produced it.
struct TaskStream {
  std::vector<TaskSpec> tasks;  // in learning order
  int order = 0;
  std::vector<int> permutation;  // permutation[i] = task id learned at position i
};

inline constexpr int kNumOrders = 6;

/// Task ids in learning order for `order` over n tasks. For n = 4 this is the
/// shipped table; other n use a fixed seeded permutation per order.
std::vector<int> order_permutation(std::size_t n_tasks, int order);

/// Function words shared by every task.
const std::vector<std::string>& shared_function_words();

TaskStream make_stream(const StreamConfig& cfg);

/// Realizes train/dev/test with exact counts and no test/dev string in train.
TaskData realize(const TaskSpec& spec);

std::vector<TaskData> realize_stream(const TaskStream& stream);

// ---------------------------------------------------------------------------
// Dataset dump: one sample per line, tab-separated
//   task_id \t x tokens \t y tokens \t provenance

std::string format_line(const Sample& s);
Sample parse_line(const std::string& line);
void write_samples(std::ostream& out, const std::vector<Sample>& samples);
std::vector<Sample> read_samples(std::istream& in);

/// Writes one file per task (train, dev, test back to back) plus
/// manifest.json recording the split line ranges. Files are written atomically.
void write_dataset(const std::filesystem::path& dir, const std::vector<TaskData>& tasks,
                   const StreamConfig& cfg);

/// Reads a directory produced by write_dataset (or converted external data).
/// Returned tasks follow the manifest's learning order.
std::vector<TaskData> read_dataset(const std::filesystem::path& dir);

}  // namespace dcl::data

#endif  // DCL_TASKGEN_HPP
