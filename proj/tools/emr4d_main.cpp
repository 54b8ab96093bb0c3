// Copyright 2026 The EMR4D Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// emr4d command-line tool.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "emr4d/bitstream.hpp"
#include "emr4d/codec.hpp"
#include "emr4d/error.hpp"
#include "emr4d/image_io.hpp"
#include "emr4d/parallel.hpp"
#include "emr4d/quality.hpp"
#include "emr4d/synth.hpp"
#include "json.hpp"

namespace {

using namespace emr4d;
using nlohmann::ordered_json;

enum ExitCode { kOk = 0, kUsage = 1, kContainer = 2, kPayload = 3, kFailure = 4 };

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path);
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path);
  out << text << '\n';
  if (!out) throw Error("cannot write " + path);
}

struct Geometry {
  int rows = 0;
  int cols = 0;
  int ei_size = 75;
};

void add_geometry(CLI::App* cmd, Geometry& g) {
  cmd->add_option("--rows,-m", g.rows, "EI rows")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--cols,-n", g.cols, "EI columns")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--ei-size", g.ei_size, "EI side in pixels")->capture_default_str()->check(CLI::Range(8, 4096));
}

ordered_json shadow_json(const ShadowModel& s) {
  ordered_json q = ordered_json::array();
  for (const auto& qs : s.quadrant) {
    q.push_back({{"a1", qs.line1.a}, {"b1", qs.line1.b}, {"a2", qs.line2.a}, {"b2", qs.line2.b}});
  }
  return q;
}

ordered_json parallax_json(const ParallaxMap& p) {
  return {{"rows", p.rows}, {"cols", p.cols}, {"col_offsets", p.col_offsets}, {"row_offsets", p.row_offsets}};
}

struct EncodeArgs {
  std::string input, output, stats, dump_key;
  Geometry geo;
  std::string profile;
  double lambda = 1000;
  int interval = 5;
  int gop = 4;
  std::uint64_t seed = EncoderOptions{}.seed;
  bool no_post = false;
};

int run_encode(const EncodeArgs& a, int threads, CLI::App* cmd) {
  EncoderOptions opt;
  opt.threads = threads;
  opt.seed = a.seed;
  opt.post.enabled = !a.no_post;
  opt.config.gop = a.gop;
  if (!a.profile.empty()) {
    const Profile& p = find_profile(a.profile);
    opt.config.lambda = p.lambda;
    opt.config.interval = p.interval;
  } else {
    if (cmd->count("--lambda") == 0 && cmd->count("--interval") == 0) {
      const Profile& p = find_profile("p1000");
      opt.config.lambda = p.lambda;
      opt.config.interval = p.interval;
    } else {
      opt.config.lambda = a.lambda;
      opt.config.interval = a.interval;
    }
  }
  const RgbImage img = read_image(a.input);
  const EncodeResult r = encode_eia(img, a.geo.rows, a.geo.cols, a.geo.ei_size, opt);
  write_file(a.output, r.bitstream);
  if (!a.dump_key.empty()) write_image(a.dump_key, yuv_to_rgb(r.key_reconstruction));
  if (!a.stats.empty()) write_text(a.stats, stats_json(r.stats));
  std::fprintf(stderr, "%zu bytes, %.5f bpp, %.2f s\n", r.stats.total_bytes, r.stats.bpp, r.stats.seconds);
  return kOk;
}

struct DecodeArgs {
  std::string input, output, dump_key, dump_regressed, dump_deblocked;
};

int run_decode(const DecodeArgs& a, int threads) {
  const auto bytes = read_file(a.input);
  const DecodeResult d = decode_eia(bytes, threads);
  write_image(a.output, d.image);
  if (!a.dump_key.empty()) write_image(a.dump_key, yuv_to_rgb(d.key_eia));
  if (!a.dump_regressed.empty()) write_image(a.dump_regressed, yuv_to_rgb(d.stages.regressed));
  if (!a.dump_deblocked.empty()) write_image(a.dump_deblocked, yuv_to_rgb(d.stages.deblocked));
  return kOk;
}

struct MetricsArgs {
  std::string reference, decoded, stream, output = "-";
  Geometry geo;
};

int run_metrics(const MetricsArgs& a) {
  const RgbImage ref = read_image(a.reference);
  const RgbImage dec = read_image(a.decoded);
  if (ref.width != dec.width || ref.height != dec.height) {
    throw InvalidArgument("image sizes differ: " + std::to_string(ref.width) + "x" + std::to_string(ref.height) +
                          " vs " + std::to_string(dec.width) + "x" + std::to_string(dec.height));
  }
  std::size_t bits = 0;
  if (!a.stream.empty()) bits = read_file(a.stream).size() * 8;
  const auto r = compare(rgb_to_yuv(ref, a.geo.rows, a.geo.cols, a.geo.ei_size),
                         rgb_to_yuv(dec, a.geo.rows, a.geo.cols, a.geo.ei_size), bits);
  write_text(a.output, to_json_line(r));
  return kOk;
}

struct RenderArgs {
  std::string input, output;
  Geometry geo;
};

int run_render(const RenderArgs& a) {
  const RgbImage img = read_image(a.input);
  write_image(a.output, yuv_to_rgb(render_central_view(rgb_to_yuv(img, a.geo.rows, a.geo.cols, a.geo.ei_size))));
  return kOk;
}

struct SynthArgs {
  std::string output, truth, texture = "mosaic";
  SceneSpec spec;
  bool no_shadows = false;
};

int run_synth(SynthArgs a) {
  a.spec.texture = parse_texture(a.texture);
  a.spec.shadows = !a.no_shadows;
  const Scene s = generate(a.spec);
  write_image(a.output, s.image);
  if (!a.truth.empty()) {
    ordered_json j;
    j["rows"] = a.spec.rows;
    j["cols"] = a.spec.cols;
    j["ei_size"] = a.spec.ei_size;
    j["texture"] = texture_name(a.spec.texture);
    j["seed"] = a.spec.seed;
    j["parallax"] = parallax_json(s.parallax);
    j["shadow"] = shadow_json(s.shadow);
    write_text(a.truth, j.dump(2));
  }
  return kOk;
}

int run_inspect(const std::string& input, const std::string& output) {
  const auto bytes = read_file(input);
  const auto sections = read_container(bytes);
  const DecodeResult d = parse_stream(bytes);
  const StreamHeader& h = d.header;
  ordered_json j;
  j["bitstream_version"] = kBitstreamVersion;
  j["bytes"] = bytes.size();
  for (const auto& s : sections) j["sections"].push_back({{"tag", s.tag}, {"bytes", s.payload.size()}});
  j["geometry"] = {{"rows", h.rows},   {"cols", h.cols},   {"ei_size", h.ei_size}, {"interval", h.interval},
                   {"gop", h.gop},     {"cb_y", h.cb_y},   {"cb_uv", h.cb_uv},     {"uv_size", h.uv_size},
                   {"lambda", h.lambda}, {"key_rows", h.key_rows}, {"key_cols", h.key_cols}};
  j["post_filter"] = {{"enabled", h.post.enabled}, {"strength", h.post.strength}};
  j["shadow"] = shadow_json(d.shadow);
  j["parallax"] = parallax_json(d.parallax);
  for (Channel ch : kChannels) {
    const auto& q = d.channels[static_cast<int>(ch)];
    std::vector<int> hist(static_cast<std::size_t>(q.table().max_models()), 0);
    for (const auto& b : q.blocks) ++hist[static_cast<std::size_t>(b.k - 1)];
    ordered_json marks = ordered_json::array();
    for (int p = 0; p < kParamCount; ++p) {
      if (q.table().multi[p] == 0 && q.table().single[p] == 0) continue;
      marks.push_back({{"param", param_name(static_cast<Param>(p))}, {"min", q.marks[p].min}, {"span", q.marks[p].span}});
    }
    j["channels"][channel_name(ch)] = {{"kernel", kernel_name(q.kind)}, {"blocks", q.blocks.size()},
                                       {"raw_bits", raw_bits(q)},        {"k_histogram", hist},
                                       {"marks", marks}};
  }
  write_text(output, j.dump(2));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-field elemental image array codec"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  int threads = default_thread_count();
  app.add_option("--threads,-j", threads, "Worker threads (default: EMR4D_THREADS or 1)")->check(CLI::Range(1, 256));

  EncodeArgs enc;
  auto* c_enc = app.add_subcommand("encode", "Encode an EIA image");
  c_enc->add_option("--input,-i", enc.input, "Input PNG/PPM")->required()->check(CLI::ExistingFile);
  c_enc->add_option("--output,-o", enc.output, "Output .emr4d file")->required();
  add_geometry(c_enc, enc.geo);
  auto* o_prof = c_enc->add_option("--profile", enc.profile, "Operating point: p75, p150, p300, p1000")
                     ->check(CLI::IsMember({"p75", "p150", "p300", "p1000"}));
  auto* o_lambda = c_enc->add_option("--lambda", enc.lambda, "Lagrange multiplier")->check(CLI::NonNegativeNumber);
  auto* o_iv = c_enc->add_option("--interval", enc.interval, "Key-EI interval")->check(CLI::PositiveNumber);
  o_prof->excludes(o_lambda)->excludes(o_iv);
  c_enc->add_option("--gop", enc.gop, "Frames per group")->capture_default_str()->check(CLI::Range(1, 255));
  c_enc->add_option("--seed", enc.seed, "Fit seed")->capture_default_str();
  c_enc->add_flag("--no-postfilter", enc.no_post, "Disable the key-EI post filter");
  c_enc->add_option("--stats", enc.stats, "Write JSON stats ('-' for stdout)");
  c_enc->add_option("--dump-key-eia", enc.dump_key, "Write the reconstructed key EIA");

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "Decode an .emr4d file");
  c_dec->add_option("--input,-i", dec.input, "Input .emr4d file")->required()->check(CLI::ExistingFile);
  c_dec->add_option("--output,-o", dec.output, "Output PNG/PPM")->required();
  c_dec->add_option("--dump-key-eia", dec.dump_key, "Write the filtered key EIA");
  c_dec->add_option("--dump-regressed", dec.dump_regressed, "Write the key EIA straight from regression");
  c_dec->add_option("--dump-deblocked", dec.dump_deblocked, "Write the deblocked key EIA");

  MetricsArgs met;
  auto* c_met = app.add_subcommand("metrics", "PSNR/SSIM between two EIA images");
  c_met->add_option("--reference,-r", met.reference, "Reference image")->required()->check(CLI::ExistingFile);
  c_met->add_option("--decoded,-d", met.decoded, "Decoded image")->required()->check(CLI::ExistingFile);
  c_met->add_option("--stream", met.stream, "Bitstream, for bpp")->check(CLI::ExistingFile);
  c_met->add_option("--output,-o", met.output, "JSON output ('-' for stdout)")->capture_default_str();
  add_geometry(c_met, met.geo);

  RenderArgs ren;
  auto* c_ren = app.add_subcommand("render", "Central view of an EIA");
  c_ren->add_option("--input,-i", ren.input, "EIA image")->required()->check(CLI::ExistingFile);
  c_ren->add_option("--output,-o", ren.output, "Output image")->required();
  add_geometry(c_ren, ren.geo);

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Generate a synthetic EIA");
  c_syn->add_option("--output,-o", syn.output, "Output image")->required();
  c_syn->add_option("--truth", syn.truth, "Write ground-truth parallax and shadow JSON");
  c_syn->add_option("--rows,-m", syn.spec.rows, "EI rows")->capture_default_str()->check(CLI::PositiveNumber);
  c_syn->add_option("--cols,-n", syn.spec.cols, "EI columns")->capture_default_str()->check(CLI::PositiveNumber);
  c_syn->add_option("--ei-size", syn.spec.ei_size, "EI side")->capture_default_str()->check(CLI::Range(8, 4096));
  c_syn->add_option("--texture", syn.texture, "mosaic, noise, ramp or checker")
      ->capture_default_str()
      ->check(CLI::IsMember({"mosaic", "noise", "ramp", "checker"}));
  c_syn->add_option("--parallax-x", syn.spec.parallax_x, "Offset between columns")
      ->capture_default_str()
      ->check(CLI::Range(0, 15));
  c_syn->add_option("--parallax-y", syn.spec.parallax_y, "Offset between rows")
      ->capture_default_str()
      ->check(CLI::Range(0, 15));
  c_syn->add_flag("--no-shadows", syn.no_shadows, "Omit corner shadows");
  c_syn->add_option("--seed", syn.spec.seed, "Texture seed")->capture_default_str();

  std::string insp_in, insp_out = "-";
  auto* c_ins = app.add_subcommand("inspect", "Dump header and model statistics of an .emr4d file");
  c_ins->add_option("--input,-i", insp_in, "Input .emr4d file")->required()->check(CLI::ExistingFile);
  c_ins->add_option("--output,-o", insp_out, "JSON output ('-' for stdout)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*c_enc) return run_encode(enc, threads, c_enc);
    if (*c_dec) return run_decode(dec, threads);
    if (*c_met) return run_metrics(met);
    if (*c_ren) return run_render(ren);
    if (*c_syn) return run_synth(syn);
    if (*c_ins) return run_inspect(insp_in, insp_out);
  } catch (const PayloadError& e) {
    std::fprintf(stderr, "payload error in section %s\n", e.what());
    return kPayload;
  } catch (const ContainerError& e) {
    std::fprintf(stderr, "container error: %s\n", e.what());
    return kContainer;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kUsage;
}
