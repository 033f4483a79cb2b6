#include <gtest/gtest.h>

#include <atomic>

#include "support.hpp"

using namespace gto;
using namespace gto::test;

namespace {

Image load_crop(const std::string& name, int size) {
  const Image img = read_pgm(data_path(name));
  return crop(img, (img.width - size) / 2, (img.height - size) / 2, size, size);
}

template <class F>
Errc error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no gto::Error thrown";
  return Errc::numerical;
}

Vector block_from_image(const Image& img) {
  Vector u(img.width * img.height);
  for (int i = 0; i < u.size(); ++i) u[i] = img.pixels[static_cast<std::size_t>(i)];
  return u;
}

}  // namespace

// ---------------------------------------------------------------------------
// DCT

TEST(Dct, MatchesNaiveSum) {
  std::mt19937 rng(10);
  for (int n : {2, 4, 8, 16}) {
    Matrix x(n, n);
    for (int i = 0; i < n * n; ++i) x.data()[i] = std::uniform_real_distribution<double>(0, 255)(rng);
    EXPECT_LE((dct2_forward(x) - naive_dct2(x)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Dct, ConstantBlockIsDcOnly) {
  const Matrix c = dct2_forward(Matrix::Constant(16, 16, 7.0));
  EXPECT_NEAR(c(0, 0), 16.0 * 7.0, 1e-9);
  Matrix rest = c;
  rest(0, 0) = 0.0;
  EXPECT_LE(rest.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Dct, RoundtripAndParseval) {
  std::mt19937 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    Matrix x(16, 16);
    for (int i = 0; i < 256; ++i) x.data()[i] = std::uniform_real_distribution<double>(-300, 300)(rng);
    const Matrix c = dct2_forward(x);
    EXPECT_LE((dct2_inverse(c) - x).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(c.squaredNorm(), x.squaredNorm(), 1e-9 * x.squaredNorm());
  }
}

TEST(Dct, NonSquareIsDimensionError) {
  EXPECT_EQ(error_code_of([] { dct2_forward(Matrix::Zero(3, 4)); }), Errc::dimension);
}

TEST(Dct, ZigzagOrder) {
  const std::vector<int> z = zigzag_order(16);
  ASSERT_EQ(z.size(), 256u);
  const std::vector<int> prefix = {0, 1, 16, 32, 17, 2};
  EXPECT_TRUE(std::equal(prefix.begin(), prefix.end(), z.begin()));
  std::vector<int> sorted = z;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 256; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
  // Diagonal index never decreases.
  for (std::size_t i = 1; i < z.size(); ++i) EXPECT_GE(z[i] / 16 + z[i] % 16, z[i - 1] / 16 + z[i - 1] % 16);
}

TEST(Dct, BasisDiagonalizesUniformGrid) {
  // The DCT basis vectors are eigenvectors of the unit-weight grid Laplacian.
  for (int n : {4, 8}) {
    const Matrix l = dense_laplacian(n, Vector::Ones(2 * n * (n - 1)));
    const Matrix c = dct_matrix(n);
    const Vector lam = dct_grid_eigenvalues(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Vector v(n * n);
        for (int r = 0; r < n; ++r)
          for (int col = 0; col < n; ++col) v[r * n + col] = c(a, r) * c(b, col);
        EXPECT_LE((l * v - lam[a * n + b] * v).cwiseAbs().maxCoeff(), 1e-9);
      }
  }
}

// ---------------------------------------------------------------------------
// Rate proxies

TEST(RateProxy, RcExamples) {
  const GridGraph path(1, 2);
  const Spectrum s = eigendecompose(build_laplacian(path, Vector::Ones(1)));
  Vector u(2);
  u << 0, 1;
  EXPECT_NEAR(theoretical_rate_rc(s, u), 1.0, 1e-12);
  EXPECT_NEAR(theoretical_rate_rc(s, Vector::Constant(2, 5.0)), 0.0, 1e-12);
  EXPECT_EQ(error_code_of([&] { theoretical_rate_rc(s, Vector::Ones(3)); }), Errc::dimension);
}

TEST(RateProxy, RcEqualsQuadraticForm) {
  std::mt19937 rng(12);
  const GridGraph g(8);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector w = random_weights(rng, g.edge_count());
    const Vector u = random_vector(rng, 64, 50.0);
    const Matrix l = dense_laplacian(8, w);
    const double ref = u.dot(l * u);
    EXPECT_NEAR(theoretical_rate_rc(eigendecompose(build_laplacian(g, w)), u), ref, 1e-6 * ref);
  }
}

TEST(RateProxy, RgExamples) {
  const GridGraph path(1, 3);
  const DualGraph d = build_dual_graph(path);
  EXPECT_NEAR(theoretical_rate_rg(d, Vector::Ones(2)), std::sqrt(2.0), 1e-12);
  EXPECT_EQ(theoretical_rate_rg(d, Vector::Zero(2)), 0.0);
  EXPECT_EQ(error_code_of([&] { theoretical_rate_rg(d, Vector::Ones(3)); }), Errc::dimension);
}

TEST(RateProxy, RgIgnoresEigenvectorSigns) {
  std::mt19937 rng(13);
  const DualGraph d = build_dual_graph(GridGraph(4));
  DualGraph flipped = d;
  for (int j = 0; j < d.node_count; j += 2) flipped.spectrum.vectors.col(j) *= -1.0;
  const Vector w = random_weights(rng, d.node_count);
  EXPECT_NEAR(theoretical_rate_rg(d, w), theoretical_rate_rg(flipped, w), 1e-12);
}

TEST(RdCost, Definition) {
  EXPECT_EQ(rd_cost(0.0, 0.0, 3.0), 0.0);
  EXPECT_EQ(rd_cost(2.0, 10.0, 0.5), 7.0);
  EXPECT_LT(rd_cost(1.0, 5.0, 0.5), rd_cost(1.5, 5.0, 0.5));
  EXPECT_LT(rd_cost(1.0, 5.0, 0.5), rd_cost(1.0, 6.0, 0.5));
  EncoderConfig cfg;
  cfg.gamma_scale = 0.2;
  EXPECT_DOUBLE_EQ(cfg.gamma(10.0), 20.0);
  EXPECT_DOUBLE_EQ(EncoderConfig{}.gamma(12.0), 0.85 / 12.0 * 144.0);
}

// ---------------------------------------------------------------------------
// Weight reconstruction plumbing

TEST(Plumbing, UniformWeightsGiveGridTransform) {
  const GridGeometry& geo = geometry_for(16);
  // The first dual eigenvector is constant (zero eigenvalue of a connected
  // dual graph), so a large first coefficient clamps every weight to 1.
  std::vector<std::int64_t> kw(64, 0);
  kw[0] = 1000;
  const EdgeWeights w = reconstruct_weights(geo, kw, 0.6);
  EXPECT_EQ(w, Vector::Ones(geo.grid.edge_count()));
  const Spectrum a = graph_spectrum(geo, kw, 0.6);
  const Spectrum b = eigendecompose(build_laplacian(geo.grid, Vector::Ones(geo.grid.edge_count())));
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.vectors, b.vectors);
  std::mt19937 rng(14);
  const Vector u = random_block(rng);
  EXPECT_EQ(gft_forward(a, u), gft_forward(b, u));
  // Same energy as the DCT, which shares the unit-grid eigenvalues.
  const Vector lam = dct_grid_eigenvalues(16);
  std::vector<double> sorted(lam.data(), lam.data() + lam.size());
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 256; ++i) EXPECT_NEAR(a.values[i], sorted[static_cast<std::size_t>(i)], 1e-9);
}

TEST(Plumbing, ReconstructedWeightsAreClamped) {
  std::mt19937 rng(15);
  const GridGeometry& geo = geometry_for(16);
  std::uniform_int_distribution<std::int64_t> d(-200, 200);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::int64_t> kw(64);
    for (auto& v : kw) v = d(rng);
    const EdgeWeights w = reconstruct_weights(geo, kw, 0.08);
    EXPECT_GE(w.minCoeff(), kMinReconWeight);
    EXPECT_LE(w.maxCoeff(), 1.0);
  }
}

// ---------------------------------------------------------------------------
// Block decisions

TEST(Block, ConstantChoosesDct) {
  EncoderConfig cfg;
  for (double a : {0.0, 37.0, 128.0, 255.0}) {
    for (double q : {1.0, 10.0, 40.0}) {
      const std::array<double, 1> qs = {q};
      const BlockAnalysis an = analyze_block(Vector::Constant(256, a), cfg, qs);
      const BlockChoice& ch = an.per_q[0];
      EXPECT_FALSE(ch.syntax.use_gft) << a << " " << q;
      for (auto px : ch.reconstruction) EXPECT_LE(std::abs(px - a), q / 2) << a << " " << q;
    }
  }
}

TEST(Block, DepthStepEdgeChoosesGraph) {
  Image img(16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 8; c < 16; ++c) img.at(r, c) = 255;
  EncoderConfig cfg;
  cfg.mode = CodingMode::depth;
  cfg.q = 10.0;
  const EncodeResult learned = encode_image(img, cfg);
  ASSERT_EQ(learned.blocks.size(), 1u);
  EXPECT_TRUE(learned.blocks[0].use_gft);
  cfg.method = GraphMethod::dct_only;
  const EncodeResult dct = encode_image(img, cfg);
  EXPECT_LT(learned.bitstream.size(), dct.bitstream.size());
  EXPECT_EQ(decode_image(learned.bitstream), learned.reconstruction);
}

TEST(Block, DistortionBound) {
  std::mt19937 rng(16);
  EncoderConfig cfg;
  const std::vector<double> qs = {2.0, 7.5, 20.0, 45.0};
  for (int rep = 0; rep < 12; ++rep) {
    const Vector u = random_block(rng);
    const BlockAnalysis an = analyze_block(u, cfg, qs);
    for (std::size_t qi = 0; qi < qs.size(); ++qi) {
      const BlockChoice& ch = an.per_q[qi];
      const double q = qs[qi];
      EXPECT_LE(ch.distortion / 256.0, q * q / 4.0);
      double sse = 0.0;
      for (int i = 0; i < 256; ++i) {
        const double e = ch.reconstruction[static_cast<std::size_t>(i)] - u[i];
        sse += e * e;
      }
      EXPECT_LE(std::sqrt(sse / 256.0), q / 2.0 + 0.5 + 1e-9);
      EXPECT_LE(ch.cost, ch.dct_cost);
    }
  }
}

TEST(Block, MultiQMatchesSingleQ) {
  std::mt19937 rng(17);
  EncoderConfig cfg;
  const std::vector<double> qs = {4.0, 12.0, 30.0};
  for (int rep = 0; rep < 4; ++rep) {
    const Vector u = random_block(rng);
    const BlockAnalysis all = analyze_block(u, cfg, qs);
    for (std::size_t qi = 0; qi < qs.size(); ++qi) {
      const std::array<double, 1> one = {qs[qi]};
      const BlockAnalysis single = analyze_block(u, cfg, one);
      EXPECT_EQ(single.per_q[0].syntax.use_gft, all.per_q[qi].syntax.use_gft);
      EXPECT_EQ(single.per_q[0].syntax.ku, all.per_q[qi].syntax.ku);
      EXPECT_EQ(single.per_q[0].syntax.kw, all.per_q[qi].syntax.kw);
    }
  }
}

// ---------------------------------------------------------------------------
// Image codec

TEST(ImageCodec, SingleBlockRoundtrip) {
  std::mt19937 rng(18);
  for (int rep = 0; rep < 10; ++rep) {
    const Image img = image_from_block(random_block(rng));
    EncoderConfig cfg;
    cfg.q = std::uniform_real_distribution<double>(2.0, 40.0)(rng);
    cfg.mode = rep % 3 == 0 ? CodingMode::depth : CodingMode::natural;
    const EncodeResult r = encode_image(img, cfg);
    EXPECT_EQ(r.blocks.size(), 1u);
    EXPECT_EQ(decode_image(r.bitstream), r.reconstruction);
  }
}

TEST(ImageCodec, PaddingAndCrop) {
  std::mt19937 rng(19);
  const Image img = random_image(rng, 17, 16);
  EncoderConfig cfg;
  const EncodeResult r = encode_image(img, cfg);
  EXPECT_EQ(r.blocks.size(), 2u);
  const Image dec = decode_image(r.bitstream);
  EXPECT_EQ(dec.width, 17);
  EXPECT_EQ(dec.height, 16);
  EXPECT_EQ(dec, r.reconstruction);
}

TEST(ImageCodec, HeaderLayout) {
  Image img(20, 300, 90);
  EncoderConfig cfg;
  cfg.q = 12.5;
  cfg.mode = CodingMode::depth;
  const EncodeResult r = encode_image(img, cfg);
  const auto& b = r.bitstream;
  ASSERT_GT(b.size(), kHeaderSize);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "GTO1");
  EXPECT_EQ(b[4], 0);
  EXPECT_EQ(b[5], 20);
  EXPECT_EQ(b[6], 1);
  EXPECT_EQ(b[7], 44);
  EXPECT_EQ(b[8], 16);
  EXPECT_EQ(b[9], 1);
  // 12.5f = 0x41480000
  EXPECT_EQ(b[10], 0x41);
  EXPECT_EQ(b[11], 0x48);
  EXPECT_EQ(b[12], 0x00);
  EXPECT_EQ(b[13], 0x00);
  EXPECT_EQ(b[14], 0x00);  // range coder's leading byte
}

TEST(ImageCodec, StoredStepIsFloat) {
  Image img(16, 16, 100);
  EncoderConfig cfg;
  cfg.q = 0.1;
  const EncodeResult r = encode_image(img, cfg);
  EXPECT_EQ(r.q, static_cast<double>(0.1f));
  EXPECT_EQ(decode_image(r.bitstream), r.reconstruction);
}

TEST(ImageCodec, CorruptStreams) {
  const Image img = load_crop("camera.pgm", 32);
  const EncodeResult r = encode_image(img, EncoderConfig{});
  const auto decode = [](std::vector<std::uint8_t> b) { return [b] { decode_image(b); }; };

  auto bad_magic = r.bitstream;
  bad_magic[3] = '2';
  EXPECT_EQ(error_code_of(decode(bad_magic)), Errc::decode);

  auto bad_mode = r.bitstream;
  bad_mode[9] = 2;
  EXPECT_EQ(error_code_of(decode(bad_mode)), Errc::decode);

  auto zero_q = r.bitstream;
  zero_q[10] = zero_q[11] = zero_q[12] = zero_q[13] = 0;
  EXPECT_EQ(error_code_of(decode(zero_q)), Errc::decode);

  auto bad_side = r.bitstream;
  bad_side[8] = 200;
  EXPECT_EQ(error_code_of(decode(bad_side)), Errc::decode);

  EXPECT_EQ(error_code_of(decode({r.bitstream.begin(), r.bitstream.begin() + 10})), Errc::decode);
  EXPECT_EQ(error_code_of(decode({r.bitstream.begin(), r.bitstream.end() - 4})), Errc::decode);

  auto trailing = r.bitstream;
  trailing.push_back(0x55);
  EXPECT_EQ(error_code_of(decode(trailing)), Errc::decode);

  try {
    decode_image(std::vector<std::uint8_t>(r.bitstream.begin(), r.bitstream.begin() + r.bitstream.size() / 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::decode);
    EXPECT_NE(std::string(e.what()).find("block ("), std::string::npos) << e.what();
  }
}

TEST(ImageCodec, DeterministicAcrossThreadCounts) {
  const Image img = load_crop("astronaut.pgm", 64);
  EncoderConfig cfg;
  cfg.q = 8.0;
  cfg.threads = 1;
  const EncodeResult a = encode_image(img, cfg);
  cfg.threads = 3;
  const EncodeResult b = encode_image(img, cfg);
  EXPECT_EQ(a.bitstream, b.bitstream);
  EXPECT_EQ(a.reconstruction, b.reconstruction);
  EXPECT_EQ(decode_image(a.bitstream, DecodeOptions{{}, {}, 1}), a.reconstruction);
  EXPECT_EQ(decode_image(a.bitstream, DecodeOptions{{}, {}, 4}), a.reconstruction);
  EXPECT_GT(a.gft_blocks(), 0);
}

TEST(ImageCodec, DepthImageRoundtrip) {
  const Image img = crop(synthetic_depth(3, 64), 0, 0, 48, 40);
  EncoderConfig cfg;
  cfg.mode = CodingMode::depth;
  const EncodeResult r = encode_image(img, cfg);
  EXPECT_EQ(decode_image(r.bitstream), r.reconstruction);
  EXPECT_GT(r.gft_blocks(), 0);
}

TEST(ImageCodec, NonDefaultSyntaxNeedsMatchingDecoder) {
  const Image img = load_crop("coffee.pgm", 32);
  EncoderConfig cfg;
  cfg.delta_set = {0.05, 0.1, 0.3};
  cfg.m_tilde = 32;
  const EncodeResult r = encode_image(img, cfg);
  DecodeOptions opt;
  opt.delta_set = cfg.delta_set;
  opt.m_tilde = 32;
  EXPECT_EQ(decode_image(r.bitstream, opt), r.reconstruction);
}

TEST(ImageCodec, BitAccountingMatchesStream) {
  const Image img = load_crop("camera.pgm", 64);
  const EncodeResult r = encode_image(img, EncoderConfig{});
  const double payload = 8.0 * static_cast<double>(r.bitstream.size() - kHeaderSize);
  EXPECT_LE(r.payload_bits(), payload);
  EXPECT_GE(r.payload_bits(), payload - 48.0);
  EXPECT_GE(r.graph_fraction(), 0.0);
  EXPECT_LE(r.graph_fraction(), 1.0);
  const Psnr p = psnr(img, r.reconstruction);
  double sse = 0.0;
  for (const auto& b : r.blocks) sse += b.sse;
  EXPECT_NEAR(psnr_from_mse(sse / (64.0 * 64.0)).value, p.value, 1e-9);
}

TEST(ImageCodec, InvalidConfig) {
  const Image img(16, 16, 1);
  auto with = [&](auto mutate) {
    EncoderConfig cfg;
    mutate(cfg);
    return [cfg, &img] { encode_image(img, cfg); };
  };
  EXPECT_EQ(error_code_of(with([](EncoderConfig& c) { c.q = 0.0; })), Errc::config);
  EXPECT_EQ(error_code_of(with([](EncoderConfig& c) { c.q = -1.0; })), Errc::config);
  EXPECT_EQ(error_code_of(with([](EncoderConfig& c) { c.block_side = 1; })), Errc::config);
  EXPECT_EQ(error_code_of(with([](EncoderConfig& c) { c.block_side = 64; })), Errc::config);
  EXPECT_EQ(error_code_of(with([](EncoderConfig& c) { c.delta_set = {}; })), Errc::config);
  EXPECT_EQ(error_code_of(with([](EncoderConfig& c) { c.delta_set = {0.2, 0.1}; })), Errc::config);
  EXPECT_EQ(error_code_of(with([](EncoderConfig& c) { c.m_tilde = 481; })), Errc::config);
  EXPECT_EQ(error_code_of(with([](EncoderConfig& c) { c.beta = 0.0; })), Errc::config);
  EXPECT_EQ(error_code_of([] { encode_image(Image{}, EncoderConfig{}); }), Errc::invalid_parameter);
}

TEST(ImageCodec, OtherBlockSides) {
  const Image img = load_crop("camera.pgm", 24);
  for (int side : {4, 8}) {
    EncoderConfig cfg;
    cfg.block_side = side;
    const EncodeResult r = encode_image(img, cfg);
    EXPECT_EQ(decode_image(r.bitstream), r.reconstruction);
  }
}

// ---------------------------------------------------------------------------
// Config, PGM and helpers

TEST(Config, ParseAndApply) {
  const ConfigMap m = parse_config("# comment\nq = 7.5\nmode=depth  # trailing\n\ndelta_set=0.1, 0.2,0.4\nalpha=50\n");
  EncoderConfig cfg;
  apply_config(m, cfg);
  EXPECT_EQ(cfg.q, 7.5);
  EXPECT_EQ(cfg.mode, CodingMode::depth);
  EXPECT_EQ(cfg.delta_set, (std::vector<double>{0.1, 0.2, 0.4}));
  ASSERT_TRUE(cfg.alpha.has_value());
  EXPECT_EQ(*cfg.alpha, 50.0);
  EXPECT_EQ(cfg.effective_m_tilde(), 256);
}

TEST(Config, Errors) {
  EncoderConfig cfg;
  EXPECT_EQ(error_code_of([] { parse_config("q 10\n"); }), Errc::config);
  EXPECT_EQ(error_code_of([&] { apply_config(parse_config("speed=3"), cfg); }), Errc::config);
  EXPECT_EQ(error_code_of([&] { apply_config(parse_config("q=ten"), cfg); }), Errc::config);
  EXPECT_EQ(error_code_of([&] { apply_config(parse_config("mode=color"), cfg); }), Errc::config);
  EXPECT_EQ(error_code_of([&] { apply_config(parse_config("block_side=8.5"), cfg); }), Errc::config);
  EXPECT_EQ(error_code_of([] { read_config("/nonexistent/gto.cfg"); }), Errc::io);
}

TEST(Pgm, ParseWithComments) {
  const std::string text = "P5\n# made by hand\n3 2\n# max\n255\n";
  std::vector<std::uint8_t> data(text.begin(), text.end());
  for (std::uint8_t v : {1, 2, 3, 4, 5, 255}) data.push_back(v);
  const Image img = parse_pgm(data);
  EXPECT_EQ(img.width, 3);
  EXPECT_EQ(img.height, 2);
  EXPECT_EQ(img.at(1, 2), 255);
  EXPECT_EQ(parse_pgm(format_pgm(img)), img);
}

TEST(Pgm, Errors) {
  auto parse = [](const std::string& s) { return [s] { parse_pgm(std::vector<std::uint8_t>(s.begin(), s.end())); }; };
  EXPECT_EQ(error_code_of(parse("P2\n1 1\n255\n0")), Errc::io);
  EXPECT_EQ(error_code_of(parse("P5\n2 2\n255\n\x01")), Errc::io);
  EXPECT_EQ(error_code_of(parse("P5\n1 1\n65535\n\x01\x01")), Errc::io);
  EXPECT_EQ(error_code_of([] { read_pgm("/nonexistent/x.pgm"); }), Errc::io);
}

TEST(ImageOps, PadReplicatesEdges) {
  Image img(3, 2);
  for (int i = 0; i < 6; ++i) img.pixels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(10 * i);
  const Image p = pad_to_multiple(img, 4);
  EXPECT_EQ(p.width, 4);
  EXPECT_EQ(p.height, 4);
  EXPECT_EQ(p.at(0, 3), img.at(0, 2));
  EXPECT_EQ(p.at(3, 1), img.at(1, 1));
  EXPECT_EQ(p.at(3, 3), img.at(1, 2));
  EXPECT_EQ(crop(p, 0, 0, 3, 2), img);
  EXPECT_EQ(error_code_of([&] { crop(p, 2, 0, 3, 2); }), Errc::dimension);
}

TEST(Parallel, CoversEveryIndexOnceAndRethrows) {
  for (unsigned t : {1u, 2u, 5u}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), t, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(100, t, [](std::size_t i) {
                   if (i == 37) fail(Errc::numerical, "boom");
                 }),
                 Error);
  }
}

TEST(Inspect, ParsedSyntaxMatchesEncoder) {
  const Image img = load_crop("camera.pgm", 48);
  const EncodeResult r = encode_image(img, EncoderConfig{});
  const ParsedStream ps = parse_stream(r.bitstream);
  ASSERT_EQ(ps.blocks.size(), r.blocks.size());
  for (std::size_t i = 0; i < ps.blocks.size(); ++i) {
    EXPECT_EQ(ps.blocks[i].use_gft, r.blocks[i].use_gft);
    if (ps.blocks[i].use_gft) EXPECT_EQ(ps.blocks[i].delta_index, r.blocks[i].delta_index);
  }
  EncoderConfig dct;
  dct.method = GraphMethod::dct_only;
  const ParsedStream pd = parse_stream(encode_image(img, dct).bitstream);
  for (const auto& b : pd.blocks) EXPECT_FALSE(b.use_gft);
}

TEST(ImageCodec, BlockSignalRasterOrder) {
  std::mt19937 rng(20);
  const Image img = random_image(rng, 32, 16);
  const Vector u = block_signal(img, 1, 0, 16);
  EXPECT_EQ(u[0], img.at(0, 16));
  EXPECT_EQ(u[17], img.at(1, 17));
  EXPECT_EQ(block_from_image(crop(img, 16, 0, 16, 16)), u);
}
