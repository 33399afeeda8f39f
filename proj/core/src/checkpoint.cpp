#include "grouprl/checkpoint.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "grouprl/metrics_io.hpp"

namespace grouprl {

namespace {

constexpr const char* kMagic = "grouprl-checkpoint 1";

[[noreturn]] void malformed(const std::string& what) {
  throw std::runtime_error("checkpoint: malformed " + what);
}

std::string expect_line(std::istream& in, const std::string& prefix) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(prefix, 0) != 0) malformed(prefix);
  return line.substr(prefix.size());
}

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& cp) {
  const PolicyParams& p = cp.params;
  out << kMagic << '\n';
  out << "config_hash " << cp.config_hash << '\n';
  out << "step " << cp.step << '\n';
  out << "shape " << p.vocab_size() << ' ' << p.context_order() << ' ' << p.max_len() << '\n';
  out << "rng " << cp.rng_state << '\n';
  out << "rows " << p.rows().size() << '\n';
  for (const auto& [key, logits] : p.rows()) {
    for (std::size_t b = 0; b < logits.size(); ++b) {
      out << key << ' ' << b << ' ' << format_shortest(logits[b]) << '\n';
    }
  }
}

Checkpoint load_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) malformed("header");
  const std::uint64_t hash = std::stoull(expect_line(in, "config_hash "));
  const int step = std::stoi(expect_line(in, "step "));
  std::istringstream shape(expect_line(in, "shape "));
  int vocab = 0;
  int order = 0;
  int max_len = 0;
  if (!(shape >> vocab >> order >> max_len)) malformed("shape");
  std::string rng = expect_line(in, "rng ");
  const std::size_t rows = std::stoull(expect_line(in, "rows "));

  Checkpoint cp{PolicyParams(vocab, order, max_len), hash, step, std::move(rng)};
  const std::size_t entries = rows * static_cast<std::size_t>(vocab);
  for (std::size_t e = 0; e < entries; ++e) {
    if (!std::getline(in, line)) malformed("parameter list (truncated)");
    std::istringstream fields(line);
    ContextKey key = 0;
    int token = -1;
    std::string text;
    if (!(fields >> key >> token >> text) || token < 0 || token >= vocab) {
      malformed("parameter triple '" + line + "'");
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) malformed("logit '" + text + "'");
    cp.params.mutable_row(key)[static_cast<std::size_t>(token)] = value;
  }
  return cp;
}

}  // namespace grouprl
