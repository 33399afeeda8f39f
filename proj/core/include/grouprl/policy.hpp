#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "grouprl/types.hpp"

namespace grouprl {

using ContextKey = std::uint64_t;

// 64-bit FNV-1a over the prompt tokens.
std::uint64_t prompt_hash(std::span<const Token> prompt);

// Tabular categorical policy: one logit row per context, where a context is
// the prompt plus the last `context_order` generated tokens. Rows that were
// never written read as all-zero logits (uniform).
class PolicyParams {
 public:
  using RowMap = std::map<ContextKey, std::vector<double>>;

  PolicyParams(int vocab_size, int context_order, int max_len);

  int vocab_size() const { return vocab_size_; }
  int context_order() const { return context_order_; }
  int max_len() const { return max_len_; }
  Token eos() const { return eos_token(vocab_size_); }
  Token think_end() const { return think_end_token(vocab_size_); }

  // Context of the next token given the prompt hash and the tokens generated
  // so far.
  ContextKey context_key(std::uint64_t prompt_hash, std::span<const Token> generated) const;

  std::span<const double> row(ContextKey key) const;
  std::span<double> mutable_row(ContextKey key);
  bool has_row(ContextKey key) const { return rows_.contains(key); }
  const RowMap& rows() const { return rows_; }
  std::size_t parameter_count() const { return rows_.size() * static_cast<std::size_t>(vocab_size_); }

  bool operator==(const PolicyParams& other) const = default;

 private:
  int vocab_size_;
  int context_order_;
  int max_len_;
  RowMap rows_;
  std::vector<double> zero_row_;
};

// log-softmax of one logit row, max-shifted.
std::vector<double> log_softmax(std::span<const double> logits);
std::vector<double> softmax(std::span<const double> logits);

// Sparse gradient over logit rows; missing rows are zero.
struct Gradient {
  int vocab_size = 0;
  std::map<ContextKey, std::vector<double>> rows;

  explicit Gradient(int vocab = 0) : vocab_size(vocab) {}

  std::span<double> row(ContextKey key);
  void add(const Gradient& other, double scale = 1.0);
  void scale(double factor);
  double squared_norm() const;
  double norm() const;
  bool all_finite() const;
};

// Adds coef * (onehot(token) - softmax(row)) into grad row `key`.
void accumulate_logprob_grad(Gradient& grad, ContextKey key, std::span<const double> probs,
                             Token token, double coef);

struct ResponseGroup {
  TokenSeq prompt;
  std::uint64_t prompt_id = 0;
  std::vector<TokenSeq> responses;
  // Per-token log-probabilities under the sampling model, recorded at
  // sampling time.
  std::vector<std::vector<double>> logprobs;

  std::size_t size() const { return responses.size(); }
  int length(std::size_t i) const { return static_cast<int>(responses[i].size()); }
  std::size_t total_tokens() const;
};

ResponseGroup make_group(const TokenSeq& prompt, std::vector<TokenSeq> responses);

// G independent ancestral samples at temperature 1. Each response stops at
// eos (inclusive) or after max_len tokens.
ResponseGroup sample_group(const PolicyParams& params, const TokenSeq& prompt, int group_size,
                           Rng& rng);

// Argmax decoding, lowest token id on ties.
TokenSeq greedy_decode(const PolicyParams& params, const TokenSeq& prompt);

struct LogProb {
  double total = 0.0;
  std::vector<double> per_token;
};

// Throws std::out_of_range for token ids outside the vocabulary.
LogProb logprob(const PolicyParams& params, const TokenSeq& prompt, std::span<const Token> response);

// Gradient of the total log-probability: per visited context, onehot - softmax,
// summed over tokens.
Gradient grad_logprob(const PolicyParams& params, const TokenSeq& prompt,
                      std::span<const Token> response);

// Largest per-token score-function norm ||onehot(a) - softmax(row)||_2 over
// every stored row and every token a, including the implicit uniform row.
// Never exceeds sqrt(2).
double per_token_grad_norm_bound(const PolicyParams& params);

// Euclidean distance between two parameter tables over the union of rows.
double parameter_distance(const PolicyParams& a, const PolicyParams& b);

struct ReferenceModel {
  PolicyParams params;
  std::optional<int> update_every;  // nullopt: frozen for the whole run
};

ReferenceModel snapshot_reference(const PolicyParams& params, std::optional<int> update_every);

// Copies the policy into the reference when `step` is a positive multiple of
// update_every. Returns true when a copy happened.
bool maybe_update_reference(ReferenceModel& ref, const PolicyParams& params, int step);

}  // namespace grouprl
