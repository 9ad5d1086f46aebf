#include "faultfabric/faultengine/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faultfabric/common/error.hpp"

namespace faultfabric::faultengine {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

bool rate_admit(TokenBucket& bucket, SimTime t) {
  if (t > bucket.last_refill) {
    bucket.tokens = std::min(bucket.burst_pkts,
                             bucket.tokens + bucket.rate_pkts_per_s * (t - bucket.last_refill) / 1000.0);
    bucket.last_refill = t;
  }
  // Refills of r*dt drift below a whole token in floating point (ten 0.1
  // refills sum to 0.9999...), so a token is counted a hair early.
  constexpr double kSlack = 1e-9;
  if (bucket.tokens >= 1.0 - kSlack) {
    bucket.tokens = std::max(0.0, bucket.tokens - 1.0);
    return true;
  }
  return false;
}

double activation_probability(const Pattern& pattern, double intensity, double t_since_start,
                              double inject_ms) {
  if (!(t_since_start >= 0.0 && t_since_start < inject_ms)) {
    throw Error(ErrorCode::OutOfWindow, "time outside the injection window");
  }
  return std::visit(overloaded{
                        [&](const Random&) { return intensity; },
                        [](const Persistent&) { return 1.0; },
                        [&](const Bursty& b) {
                          return std::fmod(t_since_start, b.period_ms) < b.duty_fraction * b.period_ms ? 1.0
                                                                                                       : 0.0;
                        },
                        [&](const Degradation&) { return intensity * (t_since_start / inject_ms); },
                    },
                    pattern);
}

bool matches_filter(const Packet& packet, const std::optional<ProtocolFilter>& filter) {
  if (!filter) return true;
  if (packet.protocol != filter->protocol) return false;
  if (filter->service_port) return packet.service_port == filter->service_port;
  return true;
}

std::vector<std::uint8_t> corrupt_payload(std::span<const std::uint8_t> payload, int bytes_affected,
                                          Rng& rng) {
  if (payload.empty()) throw Error(ErrorCode::EmptyPayload, "cannot corrupt an empty payload");
  std::vector<std::uint8_t> out(payload.begin(), payload.end());
  const std::size_t n = out.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(bytes_affected, 1)), n);
  // Partial Fisher-Yates picks k distinct offsets.
  std::vector<std::size_t> offsets(n);
  std::iota(offsets.begin(), offsets.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(offsets[i], offsets[j]);
    out[offsets[i]] ^= rng.nonzero_byte();
  }
  return out;
}

ItemInjectionState::ItemInjectionState(FaultSpec s, SimTime timeline_origin, std::uint64_t rng_seed,
                                       double hop_latency)
    : spec(std::move(s)), origin(timeline_origin), rng(rng_seed), hop_latency_ms(hop_latency) {
  if (const auto* r = std::get_if<RateLimit>(&spec.fault_type)) {
    bucket = TokenBucket::full(r->rate_pkts_per_s, r->burst_pkts, window_start());
  }
}

PacketOutcome apply_fault(ItemInjectionState& state, const Packet& packet, SimTime t) {
  if (packet.duplicate || !state.in_window(t) || !matches_filter(packet, state.spec.protocol_filter)) {
    return outcome::Deliver{};
  }
  ++state.matched;
  const FaultSpec& spec = state.spec;
  const double p = activation_probability(spec.pattern, spec.intensity, t - state.window_start(),
                                          spec.timing.inject_ms);

  if (std::holds_alternative<RateLimit>(spec.fault_type)) {
    if (p <= 0.0) return outcome::Deliver{};
    if (rate_admit(*state.bucket, t)) return outcome::Deliver{};
    ++state.affected;
    return outcome::Drop{};
  }

  if (state.rng.uniform01() >= p) return outcome::Deliver{};

  const bool persistent = std::holds_alternative<Persistent>(spec.pattern);
  // Under Persistent every matching packet is hit; intensity then scales the
  // magnitude of the effect instead of the probability.
  const double magnitude = persistent ? spec.intensity : 1.0;

  PacketOutcome result = std::visit(
      overloaded{
          [](const Loss&) -> PacketOutcome { return outcome::Drop{}; },
          [&](const Delay& d) -> PacketOutcome {
            double extra = d.amount_ms;
            if (d.jitter_ms > 0.0) extra += state.rng.uniform(-d.jitter_ms, d.jitter_ms);
            return outcome::Delay{std::max(0.0, extra * magnitude)};
          },
          [&](const Corruption& c) -> PacketOutcome {
            // Nothing to flip in an empty payload.
            if (packet.payload.empty()) return outcome::Deliver{};
            const int bytes = persistent ? std::max(1, static_cast<int>(std::lround(c.bytes_affected * magnitude)))
                                         : c.bytes_affected;
            return outcome::DeliverCorrupted{corrupt_payload(packet.payload, bytes, state.rng)};
          },
          [&](const Duplication&) -> PacketOutcome {
            return outcome::DeliverAndDuplicate{state.hop_latency_ms};
          },
          [](const RateLimit&) -> PacketOutcome { return outcome::Deliver{}; },
      },
      spec.fault_type);
  if (!is_deliver(result)) ++state.affected;
  return result;
}

}  // namespace faultfabric::faultengine
