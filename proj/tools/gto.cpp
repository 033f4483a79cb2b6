// gto: command-line front end for the graph-transform codec.
//
// Exit codes: 0 ok, 1 I/O, 2 bad config or arguments, 3 internal, 4 bitstream.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gto/gto.hpp"

namespace fs = std::filesystem;
using namespace gto;

namespace {

int exit_code_for(Errc c) {
  switch (c) {
    case Errc::io: return 1;
    case Errc::config:
    case Errc::invalid_parameter: return 2;
    case Errc::decode: return 4;
    default: return 3;
  }
}

struct CommonOptions {
  std::string config;
  std::optional<double> q;
  std::optional<std::string> mode;
  std::optional<unsigned> threads;
};

void require_readable(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) fail(Errc::io, "cannot read " + path);
}

void require_writable_target(const std::string& path) {
  const fs::path parent = fs::absolute(path).parent_path();
  std::error_code ec;
  if (!fs::is_directory(parent, ec)) fail(Errc::io, "output directory does not exist: " + parent.string());
}

EncoderConfig build_config(const CommonOptions& o) {
  EncoderConfig cfg;
  if (!o.config.empty()) {
    require_readable(o.config);
    apply_config(read_config(o.config), cfg);
  }
  if (o.q) cfg.q = *o.q;
  if (o.mode) cfg.mode = parse_mode(*o.mode);
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

DecodeOptions decode_options(const CommonOptions& o) {
  DecodeOptions opt;
  if (o.threads) opt.threads = *o.threads;
  if (o.config.empty()) return opt;
  require_readable(o.config);
  const ConfigMap m = read_config(o.config);
  EncoderConfig cfg;
  apply_config(m, cfg);
  if (m.count("delta_set")) opt.delta_set = cfg.delta_set;
  if (m.count("m_tilde")) opt.m_tilde = cfg.m_tilde;
  if (!o.threads) opt.threads = cfg.threads;
  return opt;
}

std::vector<double> parse_qlist(const std::string& s) {
  std::vector<double> out = parse_double_list("qlist", s);
  if (out.empty()) fail(Errc::config, "q list is empty");
  return out;
}

std::vector<Method> parse_methods(const std::string& s) {
  std::vector<Method> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(parse_method(item));
  }
  if (out.empty()) fail(Errc::config, "method list is empty");
  return out;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool with_q) {
  cmd->add_option("--config", o.config, "key=value config file (flags override it)");
  if (with_q) cmd->add_option("--q", o.q, "quantizer step for transform coefficients");
  cmd->add_option("--mode", o.mode, "natural or depth");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block image codec with learned graph Fourier transforms"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string in, out, methods = "LearnedGFT,DCT", qlist;
  bool verify = false;

  auto* enc = app.add_subcommand("encode", "encode a PGM image");
  enc->add_option("input", in, "input .pgm")->required();
  enc->add_option("output", out, "output .gto")->required();
  add_common(enc, common, true);

  auto* dec = app.add_subcommand("decode", "decode a .gto stream");
  dec->add_option("input", in, "input .gto")->required();
  dec->add_option("output", out, "output .pgm")->required();
  dec->add_option("--config", common.config, "config supplying non-default delta_set / m_tilde");
  dec->add_option("--threads", common.threads, "worker threads (0 = all cores)");

  auto* sw = app.add_subcommand("sweep", "rate-distortion sweep to CSV");
  sw->add_option("input", in, "input .pgm")->required();
  sw->add_option("output", out, "output .csv")->required();
  sw->add_option("--methods", methods, "comma list of LearnedGFT, GaussianGFT, DCT, KLT");
  sw->add_option("--qlist", qlist, "comma list of q values")->required();
  sw->add_flag("--verify", verify, "decode every stream and compare with the encoder");
  add_common(sw, common, false);

  auto* val = app.add_subcommand("validate", "rate and distortion model check to CSV");
  val->add_option("input", in, "input .pgm")->required();
  val->add_option("output", out, "output .csv")->required();
  val->add_option("--qlist", qlist, "comma list of q values (default 3,5,8,12,20,30,40)");
  add_common(val, common, false);

  auto* ins = app.add_subcommand("inspect", "summarize a .gto stream");
  ins->add_option("input", in, "input .gto")->required();
  ins->add_option("--config", common.config, "config supplying non-default delta_set / m_tilde");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*enc) {
      require_readable(in);
      require_writable_target(out);
      const EncoderConfig cfg = build_config(common);
      const Image img = read_pgm(in);
      const EncodeResult r = encode_image(img, cfg);
      write_file(out, r.bitstream);
      std::cout << "bpp=" << format_number(r.bpp()) << " psnr=" << format_number(psnr(img, r.reconstruction).value)
                << "\n";
    } else if (*dec) {
      require_readable(in);
      require_writable_target(out);
      const DecodeOptions opt = decode_options(common);
      write_pgm(out, decode_image(read_file(in), opt));
    } else if (*sw) {
      require_readable(in);
      require_writable_target(out);
      const EncoderConfig cfg = build_config(common);
      const std::vector<double> qs = parse_qlist(qlist);
      const std::vector<Method> ms = parse_methods(methods);
      const Image img = read_pgm(in);
      std::string csv = kSweepCsvHeader;
      for (Method m : ms) csv += sweep_csv_rows(stem(in), m, sweep(img, cfg, qs, m, verify));
      write_file(out, std::vector<std::uint8_t>(csv.begin(), csv.end()));
    } else if (*val) {
      require_readable(in);
      require_writable_target(out);
      EncoderConfig cfg = build_config(common);
      cfg.method = GraphMethod::learned;
      const std::vector<double> qs = qlist.empty() ? std::vector<double>{3, 5, 8, 12, 20, 30, 40} : parse_qlist(qlist);
      const Image img = read_pgm(in);
      const auto rows = validation_rows(encode_image_multi(img, cfg, qs), cfg.block_side);
      const std::string csv = std::string(kValidationCsvHeader) + validation_csv_rows(stem(in), rows);
      write_file(out, std::vector<std::uint8_t>(csv.begin(), csv.end()));
      std::cout << "rate_correlation=" << format_number(rate_model_correlation(rows)) << "\n";
    } else if (*ins) {
      require_readable(in);
      const ParsedStream ps = parse_stream(read_file(in), decode_options(common));
      std::size_t gft = 0;
      std::vector<std::size_t> delta_hist(ps.delta_set.size(), 0);
      for (const auto& b : ps.blocks) {
        if (!b.use_gft) continue;
        ++gft;
        ++delta_hist[static_cast<std::size_t>(b.delta_index)];
      }
      std::cout << "width=" << ps.header.width << " height=" << ps.header.height
                << " block_side=" << ps.header.block_side << " mode=" << mode_name(ps.header.mode)
                << " q=" << format_number(ps.header.q) << "\n";
      std::cout << "blocks=" << ps.blocks.size() << " dct=" << ps.blocks.size() - gft << " gft=" << gft << "\n";
      std::cout << "delta_hist=";
      for (std::size_t i = 0; i < delta_hist.size(); ++i) std::cout << (i ? "," : "") << delta_hist[i];
      std::cout << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "gto: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "gto: internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
