#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dcl/io.hpp"
#include "dcl/model.hpp"

namespace dcl::model {

namespace {

constexpr char kMagic[8] = {'D', 'C', 'L', 'C', 'K', 'P', 'T', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoints assume little-endian");

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

}  // namespace

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"embed_dim", cfg.embed_dim},
          {"hidden_dim", cfg.hidden_dim},
          {"latent_dim", cfg.latent_dim},
          {"latent", to_string(cfg.latent)},
          {"max_context", cfg.max_context}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.embed_dim = j.value("embed_dim", cfg.embed_dim);
  cfg.hidden_dim = j.value("hidden_dim", cfg.hidden_dim);
  cfg.latent_dim = j.value("latent_dim", cfg.latent_dim);
  cfg.latent = parse_latent_family(j.value("latent", to_string(cfg.latent)));
  cfg.max_context = j.value("max_context", cfg.max_context);
  cfg.validate();
  return cfg;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const Vocab& vocab, const nlohmann::json& metadata) {
  nlohmann::json header;
  header["config"] = to_json(params.config);
  header["vocab_size"] = params.vocab_size;
  header["n_tasks"] = params.n_tasks;
  header["vocab"] = vocab.tokens();
  header["vocab_tasks"] = vocab.n_tasks();
  header["metadata"] = metadata.is_null() ? nlohmann::json::object() : metadata;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : params.named()) tensors.push_back({{"name", name}, {"shape", t.shape()}});
  header["tensors"] = tensors;
  const std::string head = header.dump();

  std::string blob(kMagic, 8);
  put_u64(blob, head.size());
  blob += head;
  for (const auto& [name, t] : params.named()) {
    const auto d = t.data();
    blob.append(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(double));
  }
  io::write_file_atomic(path, blob);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string blob = io::read_file(path);
  auto fail = [&path](const std::string& why) {
    return std::runtime_error("checkpoint " + path.string() + ": " + why);
  };
  if (blob.size() < 16 || std::memcmp(blob.data(), kMagic, 8) != 0) throw fail("bad magic");
  std::uint64_t head_len = 0;
  std::memcpy(&head_len, blob.data() + 8, 8);
  if (head_len > blob.size() - 16) throw fail("truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.substr(16, head_len));
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("corrupt header: ") + e.what());
  }

  Checkpoint ck;
  ck.vocab = Vocab::from_tokens(header.at("vocab").get<std::vector<std::string>>(),
                                header.at("vocab_tasks").get<std::size_t>());
  ck.metadata = header.value("metadata", nlohmann::json::object());
  const ModelConfig cfg = model_config_from_json(header.at("config"));
  Rng scratch(0);
  ck.params = init_params(cfg, header.at("vocab_size").get<std::size_t>(),
                          header.at("n_tasks").get<std::size_t>(), scratch);

  auto named = ck.params.named();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != named.size()) throw fail("tensor count mismatch");
  std::size_t offset = 16 + head_len;
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto& [name, t] = named[i];
    if (tensors[i].at("name").get<std::string>() != name ||
        tensors[i].at("shape").get<ad::Shape>() != t.shape()) {
      throw fail("tensor " + name + " does not match the model layout");
    }
    const std::size_t bytes = t.size() * sizeof(double);
    if (offset + bytes > blob.size()) throw fail("truncated tensor data");
    std::memcpy(t.mutable_data().data(), blob.data() + offset, bytes);
    offset += bytes;
  }
  if (offset != blob.size()) throw fail("trailing bytes");
  return ck;
}

}  // namespace dcl::model
