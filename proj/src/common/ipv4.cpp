#include "faultfabric/common/ipv4.hpp"

#include <arpa/inet.h>

#include <charconv>

namespace faultfabric {

std::optional<std::uint32_t> parse_ipv4(std::string_view text) {
  std::string buf(text);
  in_addr addr{};
  if (inet_pton(AF_INET, buf.c_str(), &addr) != 1) return std::nullopt;
  return ntohl(addr.s_addr);
}

std::string format_ipv4(std::uint32_t addr) {
  in_addr a{};
  a.s_addr = htonl(addr);
  char out[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &a, out, sizeof(out));
  return out;
}

bool Cidr::overlaps(const Cidr& other) const {
  const int p = prefix < other.prefix ? prefix : other.prefix;
  const std::uint32_t m = p == 0 ? 0 : ~std::uint32_t{0} << (32 - p);
  return (base & m) == (other.base & m);
}

std::optional<Cidr> parse_cidr(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto addr = parse_ipv4(text.substr(0, slash));
  if (!addr) return std::nullopt;
  int prefix = -1;
  const auto digits = text.substr(slash + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), prefix);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || prefix < 0 || prefix > 32) {
    return std::nullopt;
  }
  return Cidr{*addr, prefix};
}

}  // namespace faultfabric
