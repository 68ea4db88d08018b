#ifndef DCL_MODEL_HPP
#define DCL_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcl/autodiff.hpp"
#include "dcl/distributions.hpp"
#include "dcl/rng.hpp"
#include "dcl/taskgen.hpp"
#include "dcl/vocab.hpp"

namespace dcl::model {

enum class LatentFamily { dirichlet, gaussian };

std::string to_string(LatentFamily f);
LatentFamily parse_latent_family(const std::string& s);

struct ModelConfig {
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t latent_dim = 16;
  LatentFamily latent = LatentFamily::dirichlet;
  std::size_t max_context = 40;  // tokens in [prompt x SEP y EOS]

  void validate() const;
};

/// Every trainable tensor of the CVAE. The encoder (posterior q) and the
/// decoder (which doubles as the task LM) share one embedding table.
struct ModelParams {
  ModelConfig config;
  std::size_t vocab_size = 0;
  std::size_t n_tasks = 0;

  ad::Tensor embedding;  // V x E
  // encoder GRU, gates packed as [reset | update | candidate]
  ad::Tensor enc_wx;  // E x 3H
  ad::Tensor enc_wh;  // H x 3H
  ad::Tensor enc_b;   // 1 x 3H
  ad::Tensor enc_head_w;  // H x K (Dirichlet) or H x 2K (Gaussian mean | logvar)
  ad::Tensor enc_head_b;
  // decoder GRU
  ad::Tensor dec_wx;
  ad::Tensor dec_wh;
  ad::Tensor dec_b;
  ad::Tensor latent_w;  // K x E, added to every decoder input embedding
  ad::Tensor out_w;     // H x V
  ad::Tensor out_b;     // 1 x V
  // per-task prior: raw concentrations (Dirichlet) or means (Gaussian)
  ad::Tensor prior_a;  // n_tasks x K
  ad::Tensor prior_b;  // n_tasks x K log-variances; Gaussian only

  std::vector<std::pair<std::string, ad::Tensor>> named() const;
  std::vector<ad::Tensor> trainable() const;
  /// Deep copy with fresh storage.
  ModelParams clone(bool requires_grad) const;
  /// FNV-1a over every parameter's bytes.
  std::uint64_t checksum() const;
};

ModelParams init_params(const ModelConfig& cfg, std::size_t vocab_size, std::size_t n_tasks,
                        Rng& rng);

using Latent = std::variant<dist::DirichletParams, dist::GaussianParams>;

/// [PROMPT-task] followed by x.
std::vector<std::size_t> augment_input(const Vocab& vocab, const std::vector<std::size_t>& x,
                                       int task);

/// Padded, time-major batch. Row t * size + b of any per-position array
/// belongs to sample b at step t.
struct Batch {
  std::size_t size = 0;
  std::size_t enc_steps = 0;
  std::size_t dec_steps = 0;
  std::vector<int> tasks;
  std::vector<std::size_t> enc_tokens;   // augmented input [PROMPT x]
  std::vector<std::size_t> enc_last;     // row of each sample's final encoder step
  std::vector<std::size_t> dec_inputs;   // [PROMPT x SEP y]
  std::vector<std::size_t> targets;      // [x SEP y EOS], kIgnore on padding
  std::vector<std::size_t> cond_targets; // [y EOS] positions only
  std::size_t dropped = 0;               // samples over max_context
};

Batch make_batch(const Vocab& vocab, std::span<const data::Sample> samples,
                 std::size_t max_context);

/// Posterior q(z | x~, c) for every sample of the batch.
Latent encode(const ModelParams& params, const Batch& batch);
/// Posterior for one augmented input.
dist::DirichletParams encode(const ModelParams& params, const std::vector<std::size_t>& augmented);

/// Prior p(z | c), one row per task id.
Latent prior(const ModelParams& params, std::span<const int> tasks);
ad::Tensor latent_mean(const Latent& l);
ad::Tensor latent_sample(const Latent& l, Rng& rng);
/// Batch mean of KL(q || p).
ad::Tensor latent_kl(const Latent& q, const Latent& p);

struct DecodeOutput {
  ad::Tensor logits;     // (dec_steps * size) x V
  ad::Tensor joint_nll;  // per-token mean over [x SEP y EOS]
  ad::Tensor cond_nll;   // per-token mean over [y EOS]
};

/// Teacher-forced decoder pass with z (size x K) injected at every step.
DecodeOutput decode(const ModelParams& params, const Batch& batch, const ad::Tensor& z);
std::pair<ad::Tensor, ad::Tensor> decode_nll(const ModelParams& params, const Batch& batch,
                                             const ad::Tensor& z);

struct GenerationConfig {
  std::size_t max_length = 24;  // including the prompt token
  bool greedy = false;
  double temperature = 1.0;
  std::size_t top_k = 0;  // 0 keeps every token
  double top_p = 1.0;     // nucleus mass; 1 keeps every token
  std::uint64_t seed = 0;

  void validate() const;
};

struct Generated {
  int task = 0;
  std::vector<std::size_t> tokens;  // full sequence starting with the prompt
  std::optional<data::Sample> sample;  // empty when rejected
  std::string reject_reason;
};

/// Samples z from the task prior and decodes from [PROMPT-task] for each
/// requested task. Malformed sequences come back rejected, not thrown.
std::vector<Generated> generate(const ModelParams& params, const Vocab& vocab,
                                std::span<const int> tasks, const GenerationConfig& cfg,
                                Rng& rng);

/// Splits [PROMPT x SEP y EOS] into a pseudo sample, or explains the rejection.
std::optional<data::Sample> parse_generated(const Vocab& vocab,
                                            const std::vector<std::size_t>& tokens, int task,
                                            std::string* reason = nullptr);

/// Greedy targets for each sample's [PROMPT x SEP], decoded with z at the
/// task prior mean.
std::vector<std::vector<std::string>> predict_targets(const ModelParams& params,
                                                      const Vocab& vocab,
                                                      std::span<const data::Sample> samples,
                                                      std::size_t max_new_tokens = 8);

// ---------------------------------------------------------------------------
// Checkpoints: magic "DCLCKPT1", u64 header length, JSON header (config,
// vocabulary, tensor names and shapes, caller metadata), then every tensor
// as raw little-endian doubles in header order.

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const Vocab& vocab, const nlohmann::json& metadata = {});

struct Checkpoint {
  ModelParams params;
  Vocab vocab;
  nlohmann::json metadata;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace dcl::model

#endif  // DCL_MODEL_HPP
