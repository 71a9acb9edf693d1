#include "pots/rng.hpp"

#include <cmath>
#include <sstream>

namespace pots {

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::Epsilon: return "epsilon";
    case Channel::Eta: return "eta";
    case Channel::Zeta: return "zeta";
    case Channel::U: return "u";
    case Channel::Assignment: return "assignment";
    case Channel::Counterfactual: return "counterfactual";
  }
  return "?";
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t master, std::uint64_t rep, Channel label, std::uint64_t sub) {
  // seed_seq's mixing is fully specified by the standard, so this is portable.
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32),
                    static_cast<std::uint32_t>(label), static_cast<std::uint32_t>(sub),
                    static_cast<std::uint32_t>(sub >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

SeedStream::SeedStream(std::uint64_t master_seed, std::uint64_t replication_id, Channel label,
                       std::uint64_t substream)
    : master_(master_seed),
      replication_(replication_id),
      label_(label),
      engine_(seeded_engine(master_seed, replication_id, label, substream)) {}

double SeedStream::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double SeedStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

std::string SeedStream::state() const {
  std::ostringstream os;
  os << engine_ << ' ' << has_spare_ << ' ' << spare_;
  return os.str();
}

SeedStream& StreamSet::operator[](Channel c) {
  switch (c) {
    case Channel::Epsilon: return epsilon;
    case Channel::Eta: return eta;
    case Channel::Zeta: return zeta;
    case Channel::U: return u;
    case Channel::Assignment: return assignment;
    case Channel::Counterfactual: break;
  }
  return counterfactual;
}

StreamSet derive_streams(std::uint64_t master_seed, std::uint64_t replication_id) {
  return StreamSet{SeedStream(master_seed, replication_id, Channel::Epsilon),
                   SeedStream(master_seed, replication_id, Channel::Eta),
                   SeedStream(master_seed, replication_id, Channel::Zeta),
                   SeedStream(master_seed, replication_id, Channel::U),
                   SeedStream(master_seed, replication_id, Channel::Assignment),
                   SeedStream(master_seed, replication_id, Channel::Counterfactual)};
}

}  // namespace pots
