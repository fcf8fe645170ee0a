#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace marc {

// Static MARC parameters. SNRs are received SNRs in dB; rates are in bits per
// (complex, vector) channel use.
struct MarcConfig {
  int K = 2;       // users
  int Mu = 1;      // antennas per user
  int Mr = 1;      // relay antennas
  int N = 1;       // destination antennas
  int L = 2;       // slots per codeword
  int T = 1;       // vector symbols per slot
  double rho_r_db = 20.0;
  double rho_d_db = 20.0;
  double sr_offset_db = 10.0;  // extra gain on every source-relay link
  std::vector<double> rates = {2.0, 2.0};
  double relay_rate = 4.0;

  // Throws ConfigError when an invariant is violated.
  void validate() const;

  int symbols() const { return L * T; }
  // Real dimension of one user's / the relay's codeword.
  int user_dim() const { return 2 * Mu * L * T; }
  int relay_dim() const { return 2 * Mr * L * T; }

  double rho_d() const;
  // Relay SNR including the source-relay offset.
  double rho_r() const;
};

enum class Scheme { OMLC, MSMLC };
enum class DecoderKind { KStage, OneStage };

std::string_view to_string(Scheme s);
std::string_view to_string(DecoderKind d);
// Accept "omlc"/"msmlc" and "kstage"/"onestage"; throw ConfigError otherwise.
Scheme parse_scheme(std::string_view s);
DecoderKind parse_decoder(std::string_view s);


}  // namespace marc
