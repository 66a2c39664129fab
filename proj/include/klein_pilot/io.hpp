#pragma once

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "klein_pilot/accounting.hpp"
#include "klein_pilot/error.hpp"
#include "klein_pilot/trajectories.hpp"
#include "klein_pilot/wavepacket.hpp"

namespace klein_pilot {

/// 17 significant digits: round-trips every double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_field_csv(std::ostream& os, const FieldGrid& g) {
  os << "t,x,re_phi_plus,im_phi_plus,re_phi_minus,im_phi_minus,density,current\n";
  for (std::size_t it = 0; it < g.t.size(); ++it)
    for (std::size_t ix = 0; ix < g.x.size(); ++ix) {
      const std::size_t k = g.index(it, ix);
      const Spinor2& p = g.psi[k];
      os << format_double(g.t[it]) << ',' << format_double(g.x[ix]) << ',' << format_double(p.upper.real()) << ','
         << format_double(p.upper.imag()) << ',' << format_double(p.lower.real()) << ','
         << format_double(p.lower.imag()) << ',' << format_double(g.density[k]) << ','
         << format_double(g.current[k]) << '\n';
    }
}

inline void write_trajectories_csv(std::ostream& os, const std::vector<Trajectory>& trs) {
  os << "trajectory_id,t,x,density,velocity\n";
  for (const auto& tr : trs)
    for (const auto& br : tr.branches)
      for (const auto& s : br.samples)
        os << tr.id << ',' << format_double(s.t) << ',' << format_double(s.x) << ',' << format_double(s.density)
           << ',' << format_double(s.velocity) << '\n';
}

/// SHA-1 of "blob <size>\0<content>", the object id git assigns to a file.
inline std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw error(errc::invalid_argument, "SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::config_error, "cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error(errc::config_error, "cannot write '" + path + "'");
  out << content;
  if (!out) throw error(errc::config_error, "write failed for '" + path + "'");
}

}  // namespace klein_pilot
