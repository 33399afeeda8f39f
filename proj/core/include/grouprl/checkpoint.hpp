#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "grouprl/policy.hpp"

namespace grouprl {

// Plain-text checkpoint: header, config hash, step, RNG state, then one
// "context-key token-id logit" triple per parameter. Logits are written in
// shortest round-trip form, so save followed by load is exact.
struct Checkpoint {
  PolicyParams params;
  std::uint64_t config_hash = 0;
  int step = 0;
  std::string rng_state;
};

void save_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(std::istream& in);

}  // namespace grouprl
