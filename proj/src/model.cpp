#include "dcl/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dcl/losses.hpp"

namespace dcl::model {

namespace {

ad::Tensor uniform_init(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = (2.0 * rng.uniform() - 1.0) * bound;
  return ad::Tensor::matrix(rows, cols, std::move(v), true);
}

ad::Tensor constant_init(std::size_t rows, std::size_t cols, double value) {
  return ad::Tensor::full({rows, cols}, value, true);
}

// h' = n + u * (h - n) with r, u gates and candidate n; `gx` already holds
// x W_x + b for this step.
ad::Tensor gru_step(const ad::Tensor& h, const ad::Tensor& gx, const ad::Tensor& wh) {
  const std::size_t H = h.cols();
  const ad::Tensor gh = ad::matmul(h, wh);
  const ad::Tensor r = ad::sigmoid(ad::add(ad::slice_cols(gx, 0, H), ad::slice_cols(gh, 0, H)));
  const ad::Tensor u =
      ad::sigmoid(ad::add(ad::slice_cols(gx, H, 2 * H), ad::slice_cols(gh, H, 2 * H)));
  const ad::Tensor n = ad::tanh(
      ad::add(ad::slice_cols(gx, 2 * H, 3 * H), ad::mul(r, ad::slice_cols(gh, 2 * H, 3 * H))));
  return ad::add(n, ad::mul(u, ad::sub(h, n)));
}

// Decoder input projection for token ids, one row per id, z injected by row.
ad::Tensor decoder_gates(const ModelParams& p, std::span<const std::size_t> tokens,
                         const ad::Tensor& zproj, std::span<const std::size_t> z_rows) {
  const ad::Tensor emb = ad::gather_rows(p.embedding, tokens);
  const ad::Tensor inj = ad::gather_rows(zproj, z_rows);
  return ad::add(ad::matmul(ad::add(emb, inj), p.dec_wx), p.dec_b);
}

std::size_t argmax_allowed(const Vocab& vocab, std::span<const double> logits) {
  std::size_t best = Vocab::kEos;
  double best_v = -INFINITY;
  for (std::size_t v = 0; v < logits.size(); ++v) {
    const bool allowed = !vocab.is_special(v) || v == Vocab::kEos || v == Vocab::kSep;
    if (allowed && logits[v] > best_v) {
      best_v = logits[v];
      best = v;
    }
  }
  return best;
}

std::size_t sample_allowed(const Vocab& vocab, std::span<const double> logits,
                           const GenerationConfig& cfg, Rng& rng) {
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t v = 0; v < logits.size(); ++v) {
    if (!vocab.is_special(v) || v == Vocab::kEos || v == Vocab::kSep) {
      cand.emplace_back(logits[v] / cfg.temperature, v);
    }
  }
  // Descending by logit, ties by id, so filtering is deterministic.
  std::sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (cfg.top_k > 0 && cand.size() > cfg.top_k) cand.resize(cfg.top_k);
  const double mx = cand.front().first;
  std::vector<double> w;
  double total = 0.0;
  for (const auto& c : cand) total += w.emplace_back(std::exp(c.first - mx));
  if (cfg.top_p < 1.0) {
    double kept = 0.0;
    std::size_t n = 0;
    while (n < w.size() && kept < cfg.top_p * total) kept += w[n++];
    w.resize(n);
    total = kept;
  }
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    u -= w[i];
    if (u <= 0.0) return cand[i].second;
  }
  return cand[w.size() - 1].second;
}

}  // namespace

std::string to_string(LatentFamily f) {
  return f == LatentFamily::dirichlet ? "dirichlet" : "gaussian";
}

LatentFamily parse_latent_family(const std::string& s) {
  if (s == "dirichlet") return LatentFamily::dirichlet;
  if (s == "gaussian") return LatentFamily::gaussian;
  throw std::invalid_argument("unknown latent family '" + s + "' (expected dirichlet or gaussian)");
}

void ModelConfig::validate() const {
  if (embed_dim == 0 || hidden_dim == 0) throw std::invalid_argument("model widths must be > 0");
  if (latent_dim < 2) throw std::invalid_argument("latent_dim must be >= 2");
  if (max_context < 4) throw std::invalid_argument("max_context must be >= 4");
}

std::vector<std::pair<std::string, ad::Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, ad::Tensor>> out = {
      {"embedding", embedding}, {"enc_wx", enc_wx},         {"enc_wh", enc_wh},
      {"enc_b", enc_b},         {"enc_head_w", enc_head_w}, {"enc_head_b", enc_head_b},
      {"dec_wx", dec_wx},       {"dec_wh", dec_wh},         {"dec_b", dec_b},
      {"latent_w", latent_w},   {"out_w", out_w},           {"out_b", out_b},
      {"prior_a", prior_a},
  };
  if (prior_b.defined()) out.emplace_back("prior_b", prior_b);
  return out;
}

std::vector<ad::Tensor> ModelParams::trainable() const {
  std::vector<ad::Tensor> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

ModelParams ModelParams::clone(bool requires_grad) const {
  ModelParams c = *this;
  auto copy = [requires_grad](ad::Tensor& t) {
    if (!t.defined()) return;
    t = ad::Tensor::from(t.shape(), {t.data().begin(), t.data().end()}, requires_grad);
  };
  for (ad::Tensor* t : {&c.embedding, &c.enc_wx, &c.enc_wh, &c.enc_b, &c.enc_head_w,
                        &c.enc_head_b, &c.dec_wx, &c.dec_wh, &c.dec_b, &c.latent_w, &c.out_w,
                        &c.out_b, &c.prior_a, &c.prior_b}) {
    copy(*t);
  }
  return c;
}

std::uint64_t ModelParams::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& [name, t] : named()) {
    for (double v : t.data()) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(&v);
      for (std::size_t i = 0; i < sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

ModelParams init_params(const ModelConfig& cfg, std::size_t vocab_size, std::size_t n_tasks,
                        Rng& rng) {
  cfg.validate();
  if (vocab_size < 5 || n_tasks < 1) throw std::invalid_argument("init_params: empty vocabulary");
  const std::size_t E = cfg.embed_dim, H = cfg.hidden_dim, K = cfg.latent_dim, V = vocab_size;
  const double gru_bound = 1.0 / std::sqrt(static_cast<double>(H));
  ModelParams p;
  p.config = cfg;
  p.vocab_size = V;
  p.n_tasks = n_tasks;
  p.embedding = uniform_init(V, E, 0.5, rng);
  p.enc_wx = uniform_init(E, 3 * H, gru_bound, rng);
  p.enc_wh = uniform_init(H, 3 * H, gru_bound, rng);
  p.enc_b = constant_init(1, 3 * H, 0.0);
  p.dec_wx = uniform_init(E, 3 * H, gru_bound, rng);
  p.dec_wh = uniform_init(H, 3 * H, gru_bound, rng);
  p.dec_b = constant_init(1, 3 * H, 0.0);
  p.latent_w = uniform_init(K, E, 1.0 / std::sqrt(static_cast<double>(K)), rng);
  p.out_w = uniform_init(H, V, gru_bound, rng);
  p.out_b = constant_init(1, V, 0.0);
  if (cfg.latent == LatentFamily::dirichlet) {
    // Posterior starts near, and the prior exactly at, the flat Dirichlet.
    const double raw_one = dist::raw_for_concentration(1.0);
    p.enc_head_w = uniform_init(H, K, 0.1 * gru_bound, rng);
    p.enc_head_b = constant_init(1, K, raw_one);
    p.prior_a = constant_init(n_tasks, K, raw_one);
  } else {
    p.enc_head_w = uniform_init(H, 2 * K, 0.1 * gru_bound, rng);
    p.enc_head_b = constant_init(1, 2 * K, 0.0);
    p.prior_a = constant_init(n_tasks, K, 0.0);
    p.prior_b = constant_init(n_tasks, K, 0.0);
  }
  return p;
}

std::vector<std::size_t> augment_input(const Vocab& vocab, const std::vector<std::size_t>& x,
                                       int task) {
  std::vector<std::size_t> out;
  out.reserve(x.size() + 1);
  out.push_back(vocab.prompt(task));
  out.insert(out.end(), x.begin(), x.end());
  return out;
}

Batch make_batch(const Vocab& vocab, std::span<const data::Sample> samples,
                 std::size_t max_context) {
  struct Encoded {
    int task;
    std::vector<std::size_t> enc;
    std::vector<std::size_t> seq;
    std::size_t y_start;  // index in seq of the first y token
  };
  std::vector<Encoded> kept;
  Batch b;
  for (const auto& s : samples) {
    Encoded e;
    e.task = s.task;
    e.enc = augment_input(vocab, vocab.encode(s.x), s.task);
    e.seq = e.enc;
    e.seq.push_back(Vocab::kSep);
    e.y_start = e.seq.size();
    for (std::size_t id : vocab.encode(s.y)) e.seq.push_back(id);
    e.seq.push_back(Vocab::kEos);
    if (e.seq.size() > max_context) {
      ++b.dropped;
      continue;
    }
    kept.push_back(std::move(e));
  }
  const std::size_t B = kept.size();
  b.size = B;
  for (const auto& e : kept) {
    b.enc_steps = std::max(b.enc_steps, e.enc.size());
    b.dec_steps = std::max(b.dec_steps, e.seq.size() - 1);
  }
  b.enc_tokens.assign(b.enc_steps * B, Vocab::kPad);
  b.dec_inputs.assign(b.dec_steps * B, Vocab::kPad);
  b.targets.assign(b.dec_steps * B, loss::kIgnore);
  b.cond_targets.assign(b.dec_steps * B, loss::kIgnore);
  for (std::size_t i = 0; i < B; ++i) {
    const auto& e = kept[i];
    b.tasks.push_back(e.task);
    for (std::size_t t = 0; t < e.enc.size(); ++t) b.enc_tokens[t * B + i] = e.enc[t];
    b.enc_last.push_back((e.enc.size() - 1) * B + i);
    for (std::size_t t = 0; t + 1 < e.seq.size(); ++t) {
      b.dec_inputs[t * B + i] = e.seq[t];
      b.targets[t * B + i] = e.seq[t + 1];
      if (t + 1 >= e.y_start) b.cond_targets[t * B + i] = e.seq[t + 1];
    }
  }
  return b;
}

Latent encode(const ModelParams& p, const Batch& b) {
  if (b.size == 0) throw std::invalid_argument("encode: empty batch");
  const std::size_t B = b.size, H = p.config.hidden_dim, K = p.config.latent_dim;
  const ad::Tensor emb = ad::gather_rows(p.embedding, b.enc_tokens);
  const ad::Tensor gx = ad::add(ad::matmul(emb, p.enc_wx), p.enc_b);
  ad::Tensor h = ad::Tensor::zeros({B, H});
  std::vector<ad::Tensor> states;
  for (std::size_t t = 0; t < b.enc_steps; ++t) {
    h = gru_step(h, ad::slice_rows(gx, t * B, (t + 1) * B), p.enc_wh);
    states.push_back(h);
  }
  const ad::Tensor pooled = ad::gather_rows(ad::concat(states, 0), b.enc_last);
  const ad::Tensor raw = ad::add(ad::matmul(pooled, p.enc_head_w), p.enc_head_b);
  if (p.config.latent == LatentFamily::dirichlet) {
    return dist::DirichletParams(dist::positive_concentration(raw));
  }
  return dist::GaussianParams(ad::slice_cols(raw, 0, K), ad::slice_cols(raw, K, 2 * K));
}

dist::DirichletParams encode(const ModelParams& params,
                             const std::vector<std::size_t>& augmented) {
  if (augmented.empty()) throw std::invalid_argument("encode: empty input");
  if (params.config.latent != LatentFamily::dirichlet) {
    throw std::logic_error("encode: model has a Gaussian latent");
  }
  for (std::size_t id : augmented) {
    if (id >= params.vocab_size) throw std::out_of_range("encode: token id out of range");
  }
  Batch b;
  b.size = 1;
  b.enc_steps = augmented.size();
  b.enc_tokens = augmented;
  b.enc_last = {augmented.size() - 1};
  return std::get<dist::DirichletParams>(encode(params, b));
}

Latent prior(const ModelParams& p, std::span<const int> tasks) {
  std::vector<std::size_t> rows;
  for (int t : tasks) {
    if (t < 0 || static_cast<std::size_t>(t) >= p.n_tasks) {
      throw std::out_of_range("prior: unknown task id " + std::to_string(t));
    }
    rows.push_back(static_cast<std::size_t>(t));
  }
  if (p.config.latent == LatentFamily::dirichlet) {
    return dist::DirichletParams(dist::positive_concentration(ad::gather_rows(p.prior_a, rows)));
  }
  return dist::GaussianParams(ad::gather_rows(p.prior_a, rows), ad::gather_rows(p.prior_b, rows));
}

ad::Tensor latent_mean(const Latent& l) {
  if (const auto* d = std::get_if<dist::DirichletParams>(&l)) return d->mean();
  return std::get<dist::GaussianParams>(l).mean();
}

ad::Tensor latent_sample(const Latent& l, Rng& rng) {
  if (const auto* d = std::get_if<dist::DirichletParams>(&l)) return dist::dirichlet_rsample(*d, rng);
  return dist::gaussian_rsample(std::get<dist::GaussianParams>(l), rng);
}

ad::Tensor latent_kl(const Latent& q, const Latent& p) {
  if (q.index() != p.index()) throw std::invalid_argument("latent_kl: latent families differ");
  if (const auto* d = std::get_if<dist::DirichletParams>(&q)) {
    return dist::dirichlet_kl(*d, std::get<dist::DirichletParams>(p));
  }
  return dist::gaussian_kl(std::get<dist::GaussianParams>(q), std::get<dist::GaussianParams>(p));
}

DecodeOutput decode(const ModelParams& p, const Batch& b, const ad::Tensor& z) {
  if (b.size == 0) throw std::invalid_argument("decode: empty batch");
  if (z.rows() != b.size || z.cols() != p.config.latent_dim) {
    throw std::invalid_argument("decode: z must be batch x latent_dim");
  }
  const std::size_t B = b.size, T = b.dec_steps, H = p.config.hidden_dim;
  const ad::Tensor zproj = ad::matmul(z, p.latent_w);
  std::vector<std::size_t> z_rows(T * B);
  for (std::size_t i = 0; i < z_rows.size(); ++i) z_rows[i] = i % B;
  const ad::Tensor gx = decoder_gates(p, b.dec_inputs, zproj, z_rows);
  ad::Tensor h = ad::Tensor::zeros({B, H});
  std::vector<ad::Tensor> states;
  states.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    h = gru_step(h, ad::slice_rows(gx, t * B, (t + 1) * B), p.dec_wh);
    states.push_back(h);
  }
  DecodeOutput out;
  out.logits = ad::add(ad::matmul(ad::concat(states, 0), p.out_w), p.out_b);
  out.joint_nll = loss::cross_entropy(out.logits, b.targets);
  out.cond_nll = loss::cross_entropy(out.logits, b.cond_targets);
  return out;
}

std::pair<ad::Tensor, ad::Tensor> decode_nll(const ModelParams& params, const Batch& batch,
                                             const ad::Tensor& z) {
  DecodeOutput out = decode(params, batch, z);
  return {out.joint_nll, out.cond_nll};
}

void GenerationConfig::validate() const {
  if (max_length < 5) {
    throw std::invalid_argument("generation max_length must be >= 5, the shortest well-formed sequence");
  }
  if (!greedy && !(temperature > 0.0)) {
    throw std::invalid_argument("generation temperature must be > 0");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("generation top_p must lie in (0, 1]");
}

std::optional<data::Sample> parse_generated(const Vocab& vocab,
                                            const std::vector<std::size_t>& tokens, int task,
                                            std::string* reason) {
  auto reject = [reason](const char* why) -> std::optional<data::Sample> {
    if (reason) *reason = why;
    return std::nullopt;
  };
  if (tokens.empty() || tokens.front() != vocab.prompt(task)) return reject("missing prompt");
  if (tokens.back() != Vocab::kEos) return reject("no EOS within max_length");
  const auto sep_count = std::count(tokens.begin(), tokens.end(), Vocab::kSep);
  if (sep_count == 0) return reject("missing SEP");
  if (sep_count > 1) return reject("duplicated SEP");
  const auto sep = std::find(tokens.begin(), tokens.end(), Vocab::kSep);
  data::Sample s;
  s.task = task;
  s.provenance = data::Provenance::pseudo;
  for (auto it = tokens.begin() + 1; it != sep; ++it) {
    if (vocab.is_special(*it)) return reject("special token in utterance");
    s.x.push_back(vocab.token(*it));
  }
  for (auto it = sep + 1; it != tokens.end() - 1; ++it) {
    if (vocab.is_special(*it)) return reject("special token in target");
    s.y.push_back(vocab.token(*it));
  }
  if (s.x.empty()) return reject("empty utterance");
  if (s.y.empty()) return reject("empty target");
  return s;
}

std::vector<Generated> generate(const ModelParams& p, const Vocab& vocab,
                                std::span<const int> tasks, const GenerationConfig& cfg,
                                Rng& rng) {
  cfg.validate();
  std::vector<Generated> out(tasks.size());
  if (tasks.empty()) return out;
  ad::NoGradGuard no_grad;
  const std::size_t N = tasks.size(), H = p.config.hidden_dim, V = p.vocab_size;
  const ad::Tensor z = latent_sample(prior(p, tasks), rng);
  const ad::Tensor zproj = ad::matmul(z, p.latent_w);
  std::vector<std::size_t> z_rows(N);
  std::vector<std::size_t> current(N);
  std::vector<bool> done(N, false);
  for (std::size_t i = 0; i < N; ++i) {
    z_rows[i] = i;
    out[i].task = tasks[i];
    current[i] = vocab.prompt(tasks[i]);
    out[i].tokens.push_back(current[i]);
  }
  ad::Tensor h = ad::Tensor::zeros({N, H});
  for (std::size_t len = 1; len < cfg.max_length; ++len) {
    h = gru_step(h, decoder_gates(p, current, zproj, z_rows), p.dec_wh);
    const ad::Tensor logits = ad::add(ad::matmul(h, p.out_w), p.out_b);
    bool all_done = true;
    for (std::size_t i = 0; i < N; ++i) {
      if (done[i]) continue;
      const auto row = logits.data().subspan(i * V, V);
      const std::size_t next = cfg.greedy ? argmax_allowed(vocab, row)
                                          : sample_allowed(vocab, row, cfg, rng);
      out[i].tokens.push_back(next);
      current[i] = next;
      if (next == Vocab::kEos) done[i] = true;
      all_done = all_done && done[i];
    }
    if (all_done) break;
  }
  for (auto& g : out) g.sample = parse_generated(vocab, g.tokens, g.task, &g.reject_reason);
  return out;
}

std::vector<std::vector<std::string>> predict_targets(const ModelParams& p, const Vocab& vocab,
                                                      std::span<const data::Sample> samples,
                                                      std::size_t max_new_tokens) {
  std::vector<std::vector<std::string>> out(samples.size());
  if (samples.empty()) return out;
  ad::NoGradGuard no_grad;
  const std::size_t N = samples.size(), H = p.config.hidden_dim, V = p.vocab_size;
  std::vector<int> tasks;
  std::vector<std::vector<std::size_t>> prefixes;
  std::size_t L = 0;
  for (const auto& s : samples) {
    tasks.push_back(s.task);
    auto pre = augment_input(vocab, vocab.encode(s.x), s.task);
    pre.push_back(Vocab::kSep);
    L = std::max(L, pre.size());
    prefixes.push_back(std::move(pre));
  }
  const ad::Tensor zproj = ad::matmul(latent_mean(prior(p, tasks)), p.latent_w);
  std::vector<std::size_t> z_rows(N);
  for (std::size_t i = 0; i < N; ++i) z_rows[i] = i;

  // Prefixes are right-aligned; a sample's state is held until its prefix starts.
  ad::Tensor h = ad::Tensor::zeros({N, H});
  std::vector<std::size_t> step_tokens(N);
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t offset = L - prefixes[i].size();
      step_tokens[i] = t >= offset ? prefixes[i][t - offset] : Vocab::kPad;
    }
    const ad::Tensor next = gru_step(h, decoder_gates(p, step_tokens, zproj, z_rows), p.dec_wh);
    std::vector<double> blended(next.data().begin(), next.data().end());
    for (std::size_t i = 0; i < N; ++i) {
      if (t < L - prefixes[i].size()) {
        std::copy_n(h.data().data() + i * H, H, blended.data() + i * H);
      }
    }
    h = ad::Tensor::matrix(N, H, std::move(blended));
  }

  std::vector<bool> done(N, false);
  for (std::size_t k = 0; k < max_new_tokens; ++k) {
    const ad::Tensor logits = ad::add(ad::matmul(h, p.out_w), p.out_b);
    bool all_done = true;
    for (std::size_t i = 0; i < N; ++i) {
      if (done[i]) {
        step_tokens[i] = Vocab::kEos;
        continue;
      }
      const std::size_t next = argmax_allowed(vocab, logits.data().subspan(i * V, V));
      step_tokens[i] = next;
      if (next == Vocab::kEos || next == Vocab::kSep) {
        done[i] = true;
      } else {
        out[i].push_back(vocab.token(next));
      }
      all_done = all_done && done[i];
    }
    if (all_done) break;
    h = gru_step(h, decoder_gates(p, step_tokens, zproj, z_rows), p.dec_wh);
  }
  return out;
}

}  // namespace dcl::model
