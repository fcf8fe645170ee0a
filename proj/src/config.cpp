#include "marc/config.hpp"

#include <cmath>
#include <string>

#include "marc/types.hpp"

namespace marc {

void MarcConfig::validate() const {
  if (K < 1) throw ConfigError("K must be >= 1");
  if (L < 2) throw ConfigError("L must be >= 2");
  if (T < 1) throw ConfigError("T must be >= 1");
  if (Mu < 1 || Mr < 1 || N < 1) throw ConfigError("antenna counts must be >= 1");
  if (static_cast<int>(rates.size()) != K) {
    throw ConfigError("rates has " + std::to_string(rates.size()) + " entries, expected K=" +
                      std::to_string(K));
  }
  for (double r : rates) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("rates must be finite and >= 0");
  }
  if (!(relay_rate >= 0.0) || !std::isfinite(relay_rate)) {
    throw ConfigError("relay_rate must be finite and >= 0");
  }
  if (!std::isfinite(rho_r_db) || !std::isfinite(rho_d_db) || !std::isfinite(sr_offset_db)) {
    throw ConfigError("SNR values must be finite");
  }
}

double MarcConfig::rho_d() const { return std::pow(10.0, rho_d_db / 10.0); }

double MarcConfig::rho_r() const { return std::pow(10.0, (rho_r_db + sr_offset_db) / 10.0); }

std::string_view to_string(Scheme s) { return s == Scheme::OMLC ? "omlc" : "msmlc"; }

std::string_view to_string(DecoderKind d) {
  return d == DecoderKind::KStage ? "kstage" : "onestage";
}

Scheme parse_scheme(std::string_view s) {
  if (s == "omlc" || s == "OMLC") return Scheme::OMLC;
  if (s == "msmlc" || s == "MSMLC") return Scheme::MSMLC;
  throw ConfigError("unknown scheme '" + std::string(s) + "' (expected omlc|msmlc)");
}

DecoderKind parse_decoder(std::string_view s) {
  if (s == "kstage") return DecoderKind::KStage;
  if (s == "onestage") return DecoderKind::OneStage;
  throw ConfigError("unknown decoder '" + std::string(s) + "' (expected kstage|onestage)");
}

}  // namespace marc
