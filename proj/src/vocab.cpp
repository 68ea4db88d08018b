#include "dcl/vocab.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace dcl::model {

std::string Vocab::prompt_token(int task) { return "<prompt-" + std::to_string(task) + ">"; }

Vocab Vocab::build(const std::vector<data::TaskData>& tasks) {
  int max_id = -1;
  std::set<std::string> words;
  for (const auto& t : tasks) {
    max_id = std::max(max_id, t.spec.id);
    for (const auto* split : {&t.train, &t.dev, &t.test}) {
      for (const auto& s : *split) {
        words.insert(s.x.begin(), s.x.end());
        words.insert(s.y.begin(), s.y.end());
      }
    }
  }
  const std::size_t n_tasks = static_cast<std::size_t>(max_id + 1);
  std::vector<std::string> tokens = {"<pad>", "<bos>", "<eos>", "<sep>"};
  for (std::size_t i = 0; i < n_tasks; ++i) tokens.push_back(prompt_token(static_cast<int>(i)));
  for (const auto& w : words) {
    if (std::find(tokens.begin(), tokens.end(), w) != tokens.end()) {
      throw std::invalid_argument("vocab: data token collides with reserved token " + w);
    }
    tokens.push_back(w);
  }
  return from_tokens(std::move(tokens), n_tasks);
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens, std::size_t n_tasks) {
  if (tokens.size() < 4 + n_tasks) throw std::invalid_argument("vocab: token list too short");
  Vocab v;
  v.n_tasks_ = n_tasks;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], i).second) {
      throw std::invalid_argument("vocab: duplicate token " + v.tokens_[i]);
    }
  }
  return v;
}

std::size_t Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw std::out_of_range("vocab: unknown token '" + token + "'");
  return it->second;
}

std::size_t Vocab::prompt(int task) const {
  if (task < 0 || static_cast<std::size_t>(task) >= n_tasks_) {
    throw std::out_of_range("vocab: unknown task id " + std::to_string(task));
  }
  return 4 + static_cast<std::size_t>(task);
}

int Vocab::prompt_task(std::size_t id) const {
  if (id >= 4 && id < 4 + n_tasks_) return static_cast<int>(id - 4);
  return -1;
}

std::vector<std::size_t> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocab::decode(const std::vector<std::size_t>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (std::size_t i : ids) out.push_back(token(i));
  return out;
}

}  // namespace dcl::model
