#ifndef DCL_VOCAB_HPP
#define DCL_VOCAB_HPP

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcl/taskgen.hpp"

namespace dcl::model {

/// Closed token vocabulary. Ids 0..3 are PAD, BOS, EOS, SEP; then one prompt
/// token per task id; then data tokens in sorted order.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kBos = 1;
  static constexpr std::size_t kEos = 2;
  static constexpr std::size_t kSep = 3;

  Vocab() = default;
  /// Collects every x and y token of every split.
  static Vocab build(const std::vector<data::TaskData>& tasks);
  /// Rebuilds from the full token list (reserved tokens first).
  static Vocab from_tokens(std::vector<std::string> tokens, std::size_t n_tasks);

  std::size_t size() const { return tokens_.size(); }
  std::size_t n_tasks() const { return n_tasks_; }
  std::size_t id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::size_t prompt(int task) const;
  /// Task id of a prompt token, or -1.
  int prompt_task(std::size_t id) const;
  bool is_special(std::size_t id) const { return id < 4 + n_tasks_; }

  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<std::size_t>& ids) const;

  static std::string prompt_token(int task);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t n_tasks_ = 0;
};

}  // namespace dcl::model

#endif  // DCL_VOCAB_HPP
