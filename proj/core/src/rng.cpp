#include "prefbo/rng.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace prefbo {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

RngStream::RngStream(std::uint64_t master_seed, std::string_view name,
                     std::uint64_t index) {
  const std::uint64_t tag = fnv1a64(name);
  // seed_seq's mixing is fully specified by the standard, so the derived
  // stream is identical on every platform.
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(tag),
                    static_cast<std::uint32_t>(tag >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  gen_.seed(seq);
}

std::uint64_t RngStream::next_u64() { return gen_(); }

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  if (!(lo < hi)) {
    throw std::invalid_argument("RngStream::uniform: requires lo < hi");
  }
  return lo + (hi - lo) * uniform();
}

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("RngStream::uniform_index: requires n > 0");
  }
  const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

double RngStream::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::string RngStream::save_state() const {
  std::ostringstream os;
  os << gen_ << ' ' << (have_spare_ ? 1 : 0) << ' ' << std::hexfloat << spare_;
  return os.str();
}

void RngStream::restore_state(const std::string& state) {
  std::istringstream is(state);
  is >> gen_;
  int flag = 0;
  std::string spare_text;
  is >> flag >> spare_text;
  if (!is) {
    throw std::invalid_argument("RngStream::restore_state: malformed state");
  }
  // operator>> for double does not accept hexfloat, strtod does.
  spare_ = std::strtod(spare_text.c_str(), nullptr);
  have_spare_ = flag != 0;
}

}  // namespace prefbo
