#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace grouprl {

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;

// Every random stream in the library is a 64-bit Mersenne twister; its state
// streams losslessly through operator<< / operator>>.
using Rng = std::mt19937_64;

// Draws a double in [0, 1) from the top 53 bits of one engine output. Used
// instead of std::uniform_real_distribution so samples do not depend on the
// standard library implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Reserved tokens sit at the top of the vocabulary: eos = |V|-1 and the
// reasoning delimiter THINK_END = |V|-2.
inline Token eos_token(int vocab_size) { return vocab_size - 1; }
inline Token think_end_token(int vocab_size) { return vocab_size - 2; }

// Raised for invalid user-facing configuration. key() names the offending
// config key when one is known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message, std::string key = {})
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace grouprl
