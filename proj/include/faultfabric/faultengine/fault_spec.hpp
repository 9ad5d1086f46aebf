#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "faultfabric/common/types.hpp"

namespace faultfabric::faultengine {

struct Loss {
  friend bool operator==(const Loss&, const Loss&) = default;
};
struct Delay {
  double amount_ms = 0;
  double jitter_ms = 0;
  friend bool operator==(const Delay&, const Delay&) = default;
};
struct Corruption {
  int bytes_affected = 1;
  friend bool operator==(const Corruption&, const Corruption&) = default;
};
struct Duplication {
  friend bool operator==(const Duplication&, const Duplication&) = default;
};
struct RateLimit {
  double rate_pkts_per_s = 0;
  double burst_pkts = 1;
  friend bool operator==(const RateLimit&, const RateLimit&) = default;
};

using FaultType = std::variant<Loss, Delay, Corruption, Duplication, RateLimit>;

struct Random {
  friend bool operator==(const Random&, const Random&) = default;
};
struct Persistent {
  friend bool operator==(const Persistent&, const Persistent&) = default;
};
struct Bursty {
  double period_ms = 1000;
  double duty_fraction = 0.5;
  friend bool operator==(const Bursty&, const Bursty&) = default;
};
struct Degradation {
  friend bool operator==(const Degradation&, const Degradation&) = default;
};

using Pattern = std::variant<Random, Persistent, Bursty, Degradation>;

struct ProtocolFilter {
  Protocol protocol = Protocol::TCP;
  std::optional<int> service_port;
  friend bool operator==(const ProtocolFilter&, const ProtocolFilter&) = default;
};

struct Timing {
  double pre_ms = 0;
  double inject_ms = 1;
  double post_ms = 0;
  friend bool operator==(const Timing&, const Timing&) = default;
};

struct FaultSpec {
  FaultType fault_type = Loss{};
  double intensity = 1.0;
  Pattern pattern = Persistent{};
  std::optional<ProtocolFilter> protocol_filter;
  Timing timing;
  std::uint64_t seed = 0;

  friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

// Throws Error(InvalidSpec) when a field is out of its domain.
void validate(const FaultSpec& spec);

std::string_view fault_type_name(const FaultType& t);
std::string_view pattern_name(const Pattern& p);

// Flat JSON object; parameters of the fault type and pattern sit next to the
// discriminants ("fault_type": "delay", "amount_ms": 500, ...).
nlohmann::json to_json(const FaultSpec& spec);
// Parses and validates. Missing optional fields take their defaults
// (bursty 1000 ms / 0.5 duty, rate-limit burst max(1, rate/10)).
FaultSpec fault_spec_from_json(const nlohmann::json& j);

}  // namespace faultfabric::faultengine
