#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "faultfabric/common/packet.hpp"
#include "faultfabric/common/rng.hpp"
#include "faultfabric/faultengine/fault_spec.hpp"

namespace faultfabric::faultengine {

namespace outcome {
struct Deliver {
  friend bool operator==(const Deliver&, const Deliver&) = default;
};
struct Drop {
  friend bool operator==(const Drop&, const Drop&) = default;
};
struct Delay {
  double extra_ms = 0;
  friend bool operator==(const Delay&, const Delay&) = default;
};
struct DeliverCorrupted {
  std::vector<std::uint8_t> payload;
  friend bool operator==(const DeliverCorrupted&, const DeliverCorrupted&) = default;
};
struct DeliverAndDuplicate {
  double copy_delay_ms = 0;
  friend bool operator==(const DeliverAndDuplicate&, const DeliverAndDuplicate&) = default;
};
}  // namespace outcome

using PacketOutcome = std::variant<outcome::Deliver, outcome::Drop, outcome::Delay,
                                   outcome::DeliverCorrupted, outcome::DeliverAndDuplicate>;

inline bool is_deliver(const PacketOutcome& o) { return std::holds_alternative<outcome::Deliver>(o); }

struct TokenBucket {
  double rate_pkts_per_s = 0;
  double burst_pkts = 1;
  double tokens = 1;
  SimTime last_refill = 0;

  // Starts full.
  static TokenBucket full(double rate, double burst, SimTime now) { return {rate, burst, burst, now}; }
};

// Refills at rate * elapsed (capped at burst), then admits iff a whole token
// is available, consuming it.
bool rate_admit(TokenBucket& bucket, SimTime t);

// Probability that a matching packet arriving `t_since_start` ms into the
// injection window is affected. Throws OutOfWindow outside [0, inject_ms).
double activation_probability(const Pattern& pattern, double intensity, double t_since_start,
                              double inject_ms);

bool matches_filter(const Packet& packet, const std::optional<ProtocolFilter>& filter);

// XORs min(bytes_affected, size) distinct positions with non-zero bytes.
// Throws EmptyPayload on an empty input.
std::vector<std::uint8_t> corrupt_payload(std::span<const std::uint8_t> payload, int bytes_affected,
                                          Rng& rng);

// Per-item mutable state for one active injection. The injection window is
// [origin + pre_ms, origin + pre_ms + inject_ms); outside it every packet is
// passed through untouched.
struct ItemInjectionState {
  FaultSpec spec;
  SimTime origin = 0;
  Rng rng;
  std::optional<TokenBucket> bucket;
  double hop_latency_ms = 0.5;
  std::uint64_t matched = 0;
  std::uint64_t affected = 0;

  ItemInjectionState(FaultSpec s, SimTime timeline_origin, std::uint64_t rng_seed,
                     double hop_latency = 0.5);

  SimTime window_start() const { return origin + spec.timing.pre_ms; }
  SimTime window_end() const { return window_start() + spec.timing.inject_ms; }
  bool in_window(SimTime t) const { return t >= window_start() && t < window_end(); }
};

PacketOutcome apply_fault(ItemInjectionState& state, const Packet& packet, SimTime t);

}  // namespace faultfabric::faultengine
