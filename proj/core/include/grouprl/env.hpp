#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "grouprl/reward.hpp"
#include "grouprl/types.hpp"

namespace grouprl {

enum class TaskKind { mod_sum, parity, copy };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

struct TaskConfig {
  TaskKind kind = TaskKind::mod_sum;
  int modulus = 8;        // mod_sum: operands and answers in [0, modulus)
  int prompt_length = 3;  // parity: number of bits; copy: number of tokens
  int answer_domain = 8;  // copy: tokens drawn from [0, answer_domain)

  bool operator==(const TaskConfig&) const = default;
};

struct Prompt {
  TokenSeq tokens;
  Token ground_truth = 0;
};

struct PromptBatch {
  std::vector<Prompt> prompts;
  std::size_t size() const { return prompts.size(); }
};

// Verifiable toy task. Prompts and answers use tokens below the two reserved
// ids (THINK_END and eos) at the top of the vocabulary.
//
//   mod_sum  prompt [a, b]          answer (a + b) mod m
//   parity   prompt [b_1 .. b_n]    answer xor of the bits
//   copy     prompt [x_1 .. x_n]    answer x_1
class Task {
 public:
  Task(TaskConfig cfg, int vocab_size);

  const TaskConfig& config() const { return cfg_; }
  int vocab_size() const { return vocab_size_; }
  Token eos() const { return eos_token(vocab_size_); }
  Token think_end() const { return think_end_token(vocab_size_); }
  // Number of distinct answer values.
  int answer_count() const;

  Token ground_truth(std::span<const Token> prompt) const;
  Prompt sample_prompt(Rng& rng) const;
  PromptBatch generate_batch(int batch_size, Rng& rng) const;
  // Every prompt of the task in a fixed order; empty when the prompt space
  // exceeds `limit`.
  std::vector<Prompt> enumerate_prompts(std::size_t limit = 4096) const;

  // Answer = last token that is neither eos nor THINK_END, searched in the
  // part of the response before the first eos and after the last THINK_END.
  std::optional<Token> extract_answer(std::span<const Token> response) const;
  AnswerExtractor extractor() const;

  // Canonical correct response: [THINK_END, answer, eos].
  TokenSeq oracle_response(const Prompt& prompt) const;

 private:
  TaskConfig cfg_;
  int vocab_size_;
};

}  // namespace grouprl
