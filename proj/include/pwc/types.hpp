#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>

#include <openssl/evp.h>

namespace pwc {

// Strongly typed integer identifier. Tag only distinguishes the kinds.
template <typename Tag, typename Rep = std::uint32_t>
struct Id {
  using rep_type = Rep;
  Rep value{};

  constexpr Id() = default;
  constexpr explicit Id(Rep v) : value(v) {}

  friend constexpr auto operator<=>(const Id&, const Id&) = default;
  friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << Tag::prefix << id.value; }
};

struct ReplicaTag { static constexpr const char* prefix = "r"; };
struct ClientTag { static constexpr const char* prefix = "c"; };
struct InstanceTag { static constexpr const char* prefix = "I"; };

/// Replica identifier in [0, n).
using ReplicaId = Id<ReplicaTag>;
/// Client identifier in [0, |C|).
using ClientId = Id<ClientTag>;
/// Instance identifier, 1-based: [1, m].
using InstanceId = Id<InstanceTag>;

using RoundNum = std::uint64_t;

using Duration = std::chrono::nanoseconds;
using SimTime = std::chrono::nanoseconds;  // offset from simulation start

constexpr Duration micros(double us) {
  return Duration{static_cast<Duration::rep>(us * 1000.0 + (us >= 0 ? 0.5 : -0.5))};
}
constexpr double to_micros(Duration d) { return static_cast<double>(d.count()) / 1000.0; }

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(std::span<const std::uint8_t> bytes) {
  Digest out{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr);
  return out;
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xf]);
  }
  return s;
}

// Big-endian byte helpers used by every canonical serialization.
inline void put_u64_be(std::string& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

inline std::uint64_t read_u64_be(std::span<const std::uint8_t> b) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | b[i];
  return v;
}

}  // namespace pwc

template <typename Tag, typename Rep>
struct std::hash<pwc::Id<Tag, Rep>> {
  std::size_t operator()(const pwc::Id<Tag, Rep>& id) const noexcept { return std::hash<Rep>{}(id.value); }
};
