#include "grouprl/env.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace grouprl {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::mod_sum:
      return "mod_sum";
    case TaskKind::parity:
      return "parity";
    case TaskKind::copy:
      return "copy";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "mod_sum") return TaskKind::mod_sum;
  if (name == "parity") return TaskKind::parity;
  if (name == "copy") return TaskKind::copy;
  throw ConfigError("unknown task kind '" + std::string(name) + "'", "task.kind");
}

Task::Task(TaskConfig cfg, int vocab_size) : cfg_(cfg), vocab_size_(vocab_size) {
  if (vocab_size < 3) throw ConfigError("task needs vocab_size >= 3", "policy.vocab_size");
  const int usable = vocab_size - 2;
  switch (cfg_.kind) {
    case TaskKind::mod_sum:
      if (cfg_.modulus < 1 || cfg_.modulus > usable) {
        throw ConfigError("task.modulus must lie in [1, vocab_size - 2]", "task.modulus");
      }
      break;
    case TaskKind::parity:
      if (usable < 2) throw ConfigError("parity needs vocab_size >= 4", "policy.vocab_size");
      if (cfg_.prompt_length < 1) {
        throw ConfigError("task.prompt_length must be >= 1", "task.prompt_length");
      }
      break;
    case TaskKind::copy:
      if (cfg_.answer_domain < 1 || cfg_.answer_domain > usable) {
        throw ConfigError("task.answer_domain must lie in [1, vocab_size - 2]",
                          "task.answer_domain");
      }
      if (cfg_.prompt_length < 1) {
        throw ConfigError("task.prompt_length must be >= 1", "task.prompt_length");
      }
      break;
  }
}

int Task::answer_count() const {
  switch (cfg_.kind) {
    case TaskKind::mod_sum:
      return cfg_.modulus;
    case TaskKind::parity:
      return 2;
    case TaskKind::copy:
      return cfg_.answer_domain;
  }
  return 0;
}

Token Task::ground_truth(std::span<const Token> prompt) const {
  switch (cfg_.kind) {
    case TaskKind::mod_sum:
      if (prompt.size() != 2) throw std::invalid_argument("mod_sum prompt must have 2 tokens");
      return (prompt[0] + prompt[1]) % cfg_.modulus;
    case TaskKind::parity: {
      Token bit = 0;
      for (Token t : prompt) bit ^= (t & 1);
      return bit;
    }
    case TaskKind::copy:
      if (prompt.empty()) throw std::invalid_argument("copy prompt must be non-empty");
      return prompt.front();
  }
  throw std::logic_error("ground_truth: unhandled task");
}

Prompt Task::sample_prompt(Rng& rng) const {
  auto draw = [&rng](int n) { return static_cast<Token>(rng() % static_cast<std::uint64_t>(n)); };
  Prompt p;
  switch (cfg_.kind) {
    case TaskKind::mod_sum:
      p.tokens = {draw(cfg_.modulus), draw(cfg_.modulus)};
      break;
    case TaskKind::parity:
      for (int j = 0; j < cfg_.prompt_length; ++j) p.tokens.push_back(draw(2));
      break;
    case TaskKind::copy:
      for (int j = 0; j < cfg_.prompt_length; ++j) p.tokens.push_back(draw(cfg_.answer_domain));
      break;
  }
  p.ground_truth = ground_truth(p.tokens);
  return p;
}

PromptBatch Task::generate_batch(int batch_size, Rng& rng) const {
  if (batch_size < 1) throw std::invalid_argument("generate_batch: batch size must be >= 1");
  PromptBatch batch;
  batch.prompts.reserve(static_cast<std::size_t>(batch_size));
  for (int b = 0; b < batch_size; ++b) batch.prompts.push_back(sample_prompt(rng));
  return batch;
}

std::vector<Prompt> Task::enumerate_prompts(std::size_t limit) const {
  int base = 0;
  int length = 0;
  switch (cfg_.kind) {
    case TaskKind::mod_sum:
      base = cfg_.modulus;
      length = 2;
      break;
    case TaskKind::parity:
      base = 2;
      length = cfg_.prompt_length;
      break;
    case TaskKind::copy:
      base = cfg_.answer_domain;
      length = cfg_.prompt_length;
      break;
  }
  std::size_t total = 1;
  for (int j = 0; j < length; ++j) {
    total *= static_cast<std::size_t>(base);
    if (total > limit) return {};
  }
  std::vector<Prompt> out;
  out.reserve(total);
  for (std::size_t index = 0; index < total; ++index) {
    Prompt p;
    p.tokens.assign(static_cast<std::size_t>(length), 0);
    std::size_t rest = index;
    for (int j = length - 1; j >= 0; --j) {
      p.tokens[static_cast<std::size_t>(j)] = static_cast<Token>(rest % static_cast<std::size_t>(base));
      rest /= static_cast<std::size_t>(base);
    }
    p.ground_truth = ground_truth(p.tokens);
    out.push_back(std::move(p));
  }
  return out;
}

std::optional<Token> Task::extract_answer(std::span<const Token> response) const {
  auto end = std::find(response.begin(), response.end(), eos());
  auto begin = response.begin();
  for (auto it = begin; it != end; ++it) {
    if (*it == think_end()) begin = it + 1;
  }
  for (auto it = end; it != begin;) {
    --it;
    if (*it != think_end() && *it != eos()) return *it;
  }
  return std::nullopt;
}

AnswerExtractor Task::extractor() const {
  return [task = *this](std::span<const Token> response) { return task.extract_answer(response); };
}

TokenSeq Task::oracle_response(const Prompt& prompt) const {
  return {think_end(), prompt.ground_truth, eos()};
}

}  // namespace grouprl
