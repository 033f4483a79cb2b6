#pragma once

#include <stdexcept>
#include <string>

namespace gto {

enum class Errc {
  invalid_parameter,
  dimension,
  domain,
  numerical,
  empty_graph,
  too_large,
  overflow,
  decode,
  io,
  config,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_parameter: return "invalid parameter";
    case Errc::dimension: return "dimension mismatch";
    case Errc::domain: return "domain error";
    case Errc::numerical: return "numerical error";
    case Errc::empty_graph: return "empty graph";
    case Errc::too_large: return "problem too large";
    case Errc::overflow: return "overflow";
    case Errc::decode: return "decode error";
    case Errc::io: return "i/o error";
    case Errc::config: return "config error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace gto
