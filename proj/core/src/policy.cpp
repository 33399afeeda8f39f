#include "grouprl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace grouprl {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv_mix(std::uint64_t h, std::uint32_t value) {
  for (int byte = 0; byte < 4; ++byte) {
    h ^= (value >> (8 * byte)) & 0xffU;
    h *= kFnvPrime;
  }
  return h;
}

void check_token(const PolicyParams& params, Token token) {
  if (token < 0 || token >= params.vocab_size()) {
    throw std::out_of_range("token id " + std::to_string(token) + " outside vocabulary of size " +
                            std::to_string(params.vocab_size()));
  }
}

}  // namespace

std::uint64_t prompt_hash(std::span<const Token> prompt) {
  std::uint64_t h = kFnvOffset;
  for (Token t : prompt) h = fnv_mix(h, static_cast<std::uint32_t>(t));
  return fnv_mix(h, static_cast<std::uint32_t>(prompt.size()));
}

PolicyParams::PolicyParams(int vocab_size, int context_order, int max_len)
    : vocab_size_(vocab_size),
      context_order_(context_order),
      max_len_(max_len),
      zero_row_(static_cast<std::size_t>(std::max(vocab_size, 0)), 0.0) {
  if (vocab_size < 2) throw ConfigError("policy.vocab_size must be >= 2", "policy.vocab_size");
  if (context_order < 0) {
    throw ConfigError("policy.context_order must be >= 0", "policy.context_order");
  }
  if (max_len < 1) throw ConfigError("policy.max_len must be >= 1", "policy.max_len");
}

ContextKey PolicyParams::context_key(std::uint64_t prompt_id,
                                     std::span<const Token> generated) const {
  std::uint64_t h = fnv_mix(prompt_id, 0x9e3779b9U);
  const auto n = static_cast<std::ptrdiff_t>(generated.size());
  for (std::ptrdiff_t j = n - context_order_; j < n; ++j) {
    const Token t = j < 0 ? Token{-1} : generated[static_cast<std::size_t>(j)];
    h = fnv_mix(h, static_cast<std::uint32_t>(t));
  }
  return h;
}

std::span<const double> PolicyParams::row(ContextKey key) const {
  auto it = rows_.find(key);
  if (it == rows_.end()) return zero_row_;
  return it->second;
}

std::span<double> PolicyParams::mutable_row(ContextKey key) {
  auto [it, inserted] = rows_.try_emplace(key);
  if (inserted) it->second.assign(static_cast<std::size_t>(vocab_size_), 0.0);
  return it->second;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double x : logits) sum += std::exp(x - peak);
  const double lse = peak + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t b = 0; b < logits.size(); ++b) out[b] = logits[b] - lse;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out = log_softmax(logits);
  for (double& v : out) v = std::exp(v);
  return out;
}

std::span<double> Gradient::row(ContextKey key) {
  auto [it, inserted] = rows.try_emplace(key);
  if (inserted) it->second.assign(static_cast<std::size_t>(vocab_size), 0.0);
  return it->second;
}

void Gradient::add(const Gradient& other, double factor) {
  for (const auto& [key, values] : other.rows) {
    std::span<double> dst = row(key);
    for (std::size_t b = 0; b < values.size(); ++b) dst[b] += factor * values[b];
  }
}

void Gradient::scale(double factor) {
  for (auto& [key, values] : rows) {
    for (double& v : values) v *= factor;
  }
}

double Gradient::squared_norm() const {
  double ss = 0.0;
  for (const auto& [key, values] : rows) {
    for (double v : values) ss += v * v;
  }
  return ss;
}

double Gradient::norm() const { return std::sqrt(squared_norm()); }

bool Gradient::all_finite() const {
  for (const auto& [key, values] : rows) {
    for (double v : values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void accumulate_logprob_grad(Gradient& grad, ContextKey key, std::span<const double> probs,
                             Token token, double coef) {
  std::span<double> dst = grad.row(key);
  for (std::size_t b = 0; b < probs.size(); ++b) dst[b] -= coef * probs[b];
  dst[static_cast<std::size_t>(token)] += coef;
}

std::size_t ResponseGroup::total_tokens() const {
  std::size_t n = 0;
  for (const TokenSeq& r : responses) n += r.size();
  return n;
}

ResponseGroup make_group(const TokenSeq& prompt, std::vector<TokenSeq> responses) {
  ResponseGroup group;
  group.prompt = prompt;
  group.prompt_id = prompt_hash(prompt);
  group.responses = std::move(responses);
  return group;
}

ResponseGroup sample_group(const PolicyParams& params, const TokenSeq& prompt, int group_size,
                           Rng& rng) {
  if (group_size < 1) throw std::invalid_argument("sample_group: group size must be >= 1");
  ResponseGroup group = make_group(prompt, {});
  group.responses.reserve(static_cast<std::size_t>(group_size));
  group.logprobs.reserve(static_cast<std::size_t>(group_size));
  for (int i = 0; i < group_size; ++i) {
    TokenSeq response;
    std::vector<double> lps;
    for (int t = 0; t < params.max_len(); ++t) {
      const ContextKey key = params.context_key(group.prompt_id, response);
      const std::vector<double> lp = log_softmax(params.row(key));
      const double u = uniform01(rng);
      double cumulative = 0.0;
      std::size_t chosen = lp.size();
      std::size_t last_positive = 0;
      for (std::size_t b = 0; b < lp.size(); ++b) {
        const double p = std::exp(lp[b]);
        if (p > 0.0) last_positive = b;
        cumulative += p;
        if (u < cumulative) {
          chosen = b;
          break;
        }
      }
      if (chosen == lp.size()) chosen = last_positive;
      response.push_back(static_cast<Token>(chosen));
      lps.push_back(lp[chosen]);
      if (static_cast<Token>(chosen) == params.eos()) break;
    }
    group.responses.push_back(std::move(response));
    group.logprobs.push_back(std::move(lps));
  }
  return group;
}

TokenSeq greedy_decode(const PolicyParams& params, const TokenSeq& prompt) {
  const std::uint64_t id = prompt_hash(prompt);
  TokenSeq response;
  for (int t = 0; t < params.max_len(); ++t) {
    std::span<const double> logits = params.row(params.context_key(id, response));
    const auto best = std::max_element(logits.begin(), logits.end());
    const auto token = static_cast<Token>(best - logits.begin());
    response.push_back(token);
    if (token == params.eos()) break;
  }
  return response;
}

LogProb logprob(const PolicyParams& params, const TokenSeq& prompt,
                std::span<const Token> response) {
  const std::uint64_t id = prompt_hash(prompt);
  LogProb out;
  out.per_token.reserve(response.size());
  for (std::size_t t = 0; t < response.size(); ++t) {
    check_token(params, response[t]);
    const ContextKey key = params.context_key(id, response.first(t));
    const std::vector<double> lp = log_softmax(params.row(key));
    const double v = lp[static_cast<std::size_t>(response[t])];
    out.per_token.push_back(v);
    out.total += v;
  }
  return out;
}

Gradient grad_logprob(const PolicyParams& params, const TokenSeq& prompt,
                      std::span<const Token> response) {
  const std::uint64_t id = prompt_hash(prompt);
  Gradient grad(params.vocab_size());
  for (std::size_t t = 0; t < response.size(); ++t) {
    check_token(params, response[t]);
    const ContextKey key = params.context_key(id, response.first(t));
    accumulate_logprob_grad(grad, key, softmax(params.row(key)), response[t], 1.0);
  }
  return grad;
}

namespace {

// max_a ||e_a - p||_2 for one row: ||e_a - p||^2 = 1 - 2 p_a + sum_b p_b^2,
// maximized at the smallest p_a.
double row_score_norm(std::span<const double> logits) {
  const std::vector<double> p = softmax(logits);
  double sum_sq = 0.0;
  for (double v : p) sum_sq += v * v;
  const double p_min = *std::min_element(p.begin(), p.end());
  return std::sqrt(std::max(0.0, 1.0 - 2.0 * p_min + sum_sq));
}

}  // namespace

double per_token_grad_norm_bound(const PolicyParams& params) {
  const std::vector<double> uniform(static_cast<std::size_t>(params.vocab_size()), 0.0);
  double best = row_score_norm(uniform);
  for (const auto& [key, logits] : params.rows()) best = std::max(best, row_score_norm(logits));
  return best;
}

double parameter_distance(const PolicyParams& a, const PolicyParams& b) {
  double ss = 0.0;
  for (const auto& [key, row_a] : a.rows()) {
    std::span<const double> row_b = b.row(key);
    for (std::size_t j = 0; j < row_a.size(); ++j) {
      const double d = row_a[j] - row_b[j];
      ss += d * d;
    }
  }
  for (const auto& [key, row_b] : b.rows()) {
    if (a.has_row(key)) continue;
    for (double v : row_b) ss += v * v;
  }
  return std::sqrt(ss);
}

ReferenceModel snapshot_reference(const PolicyParams& params, std::optional<int> update_every) {
  if (update_every && *update_every < 1) {
    throw ConfigError("reference update interval must be >= 1", "train.reference_update_every");
  }
  return ReferenceModel{params, update_every};
}

bool maybe_update_reference(ReferenceModel& ref, const PolicyParams& params, int step) {
  if (!ref.update_every || step <= 0 || step % *ref.update_every != 0) return false;
  ref.params = params;
  return true;
}

}  // namespace grouprl
