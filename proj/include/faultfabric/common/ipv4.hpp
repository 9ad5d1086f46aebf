#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace faultfabric {

std::optional<std::uint32_t> parse_ipv4(std::string_view text);
std::string format_ipv4(std::uint32_t addr);

struct Cidr {
  std::uint32_t base = 0;
  int prefix = 0;

  std::uint32_t mask() const { return prefix == 0 ? 0 : ~std::uint32_t{0} << (32 - prefix); }
  bool contains(std::uint32_t addr) const { return (addr & mask()) == (base & mask()); }
  bool overlaps(const Cidr& other) const;
};

std::optional<Cidr> parse_cidr(std::string_view text);

}  // namespace faultfabric
