#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>

#include "pwc/types.hpp"

namespace pwc {

using AccountId = std::string;
using Amount = std::uint64_t;

/// Conditional transfer: moves `value` from `from` to `to` iff amount(from) > threshold.
struct Transfer {
  AccountId from;
  AccountId to;
  Amount threshold = 0;
  Amount value = 0;

  friend bool operator==(const Transfer&, const Transfer&) = default;
};

struct Noop {
  std::uint64_t tag = 0;

  friend bool operator==(const Noop&, const Noop&) = default;
};

using Operation = std::variant<Transfer, Noop>;

namespace detail {
inline void put_string(std::string& out, const std::string& s) {
  put_u64_be(out, s.size());
  out.append(s);
}
}  // namespace detail

// Canonical form: tag byte (0 = Transfer, 1 = Noop), then
//   Transfer: from, to as u64-length-prefixed UTF-8; threshold, value as u64 BE
//   Noop:     tag as u64 BE
inline void append_canonical(std::string& out, const Operation& op) {
  std::visit(
      [&out](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Transfer>) {
          out.push_back('\x00');
          detail::put_string(out, o.from);
          detail::put_string(out, o.to);
          put_u64_be(out, o.threshold);
          put_u64_be(out, o.value);
        } else {
          out.push_back('\x01');
          put_u64_be(out, o.tag);
        }
      },
      op);
}

inline std::ostream& operator<<(std::ostream& os, const Operation& op) {
  if (const auto* t = std::get_if<Transfer>(&op))
    return os << "transfer(" << t->from << ", " << t->to << ", " << t->threshold << ", " << t->value << ")";
  return os << "noop(" << std::get<Noop>(op).tag << ")";
}

}  // namespace pwc
