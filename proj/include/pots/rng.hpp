#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace pots {

enum class Channel : std::uint8_t { Epsilon = 1, Eta, Zeta, U, Assignment, Counterfactual };

std::string_view to_string(Channel c);

/// One independent random stream, keyed by (master seed, replication, channel, substream).
/// Derivation is a pure function of the key, so replications may run in any order.
class SeedStream {
 public:
  SeedStream(std::uint64_t master_seed, std::uint64_t replication_id, Channel label,
             std::uint64_t substream = 0);

  std::uint64_t next() { return engine_(); }
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal, Marsaglia polar method.
  double normal();

  /// Textual engine state; equal streams serialize identically.
  std::string state() const;

  std::uint64_t master_seed() const noexcept { return master_; }
  std::uint64_t replication_id() const noexcept { return replication_; }
  Channel label() const noexcept { return label_; }

 private:
  std::uint64_t master_;
  std::uint64_t replication_;
  Channel label_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct StreamSet {
  SeedStream epsilon, eta, zeta, u, assignment, counterfactual;
  SeedStream& operator[](Channel c);
};

StreamSet derive_streams(std::uint64_t master_seed, std::uint64_t replication_id);

}  // namespace pots
