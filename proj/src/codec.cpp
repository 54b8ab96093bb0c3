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

#include "emr4d/codec.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "emr4d/amls.hpp"
#include "emr4d/bitstream.hpp"
#include "emr4d/bytes.hpp"
#include "emr4d/error.hpp"
#include "emr4d/parallel.hpp"
#include "json.hpp"

namespace emr4d {

namespace {

constexpr const char* kChannelTags[3] = {"CHNY", "CHNU", "CHNV"};
constexpr const char* kSectionOrder[6] = {"GEOM", "SHAD", "PARX", "CHNY", "CHNU", "CHNV"};

int tile_size(const StreamHeader& h, Channel ch) { return ch == Channel::Y ? h.ei_size : h.uv_size; }
int block_size(const StreamHeader& h, Channel ch) { return ch == Channel::Y ? h.cb_y : h.cb_uv; }

std::vector<BlockGeometry> geometry_of(const std::vector<PvsBlock>& layout) {
  std::vector<BlockGeometry> g;
  g.reserve(layout.size());
  for (const auto& b : layout) g.push_back({b.width, b.height, b.frames});
  return g;
}

EiaGrid assemble_upsampled(const StreamHeader& h, const std::array<std::vector<Plane>, 3>& frames) {
  std::array<std::vector<Plane>, 3> full;
  for (Channel ch : kChannels) {
    const int c = static_cast<int>(ch);
    full[c].reserve(frames[c].size());
    for (const auto& t : frames[c]) full[c].push_back(t.width == h.ei_size ? t : upsample_uv(t, h.ei_size));
  }
  return assemble_key_eia(full, h.key_rows, h.key_cols, h.ei_size);
}

std::vector<Section> build_sections(const StreamHeader& h, const ShadowModel& s, const ParallaxMap& p,
                                    const std::array<QuantizedChannel, 3>& ch) {
  std::vector<Section> out;
  out.push_back({"GEOM", encode_header(h)});
  out.push_back({"SHAD", encode_shadow(s)});
  out.push_back({"PARX", encode_parallax(p)});
  for (int c = 0; c < 3; ++c) out.push_back({kChannelTags[c], encode_channel(ch[c])});
  return out;
}

bool valid_keys(const std::vector<int>& ids, int count) {
  if (ids.empty() || ids.front() != 1 || ids.back() != count) return false;
  for (std::size_t i = 1; i < ids.size(); ++i)
    if (ids[i] <= ids[i - 1]) return false;
  return true;
}

}  // namespace

const Profile& find_profile(const std::string& name) {
  for (const auto& p : kProfiles)
    if (name == p.name) return p;
  throw InvalidArgument("unknown profile '" + name + "' (expected p75, p150, p300 or p1000)");
}

bool StreamHeader::operator==(const StreamHeader& o) const {
  return rows == o.rows && cols == o.cols && ei_size == o.ei_size && interval == o.interval && gop == o.gop &&
         cb_y == o.cb_y && cb_uv == o.cb_uv && uv_size == o.uv_size && lambda == o.lambda && key_rows == o.key_rows &&
         key_cols == o.key_cols && post.enabled == o.post.enabled && post.strength == o.post.strength;
}

std::vector<std::uint8_t> encode_header(const StreamHeader& h) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(h.rows));
  w.u16(static_cast<std::uint16_t>(h.cols));
  w.u16(static_cast<std::uint16_t>(h.ei_size));
  w.u16(static_cast<std::uint16_t>(h.interval));
  w.u8(static_cast<std::uint8_t>(h.gop));
  w.u8(static_cast<std::uint8_t>(h.cb_y));
  w.u8(static_cast<std::uint8_t>(h.cb_uv));
  w.u8(static_cast<std::uint8_t>(h.uv_size));
  w.f64(h.lambda);
  w.u16(static_cast<std::uint16_t>(h.key_rows.size()));
  for (int r : h.key_rows) w.u16(static_cast<std::uint16_t>(r));
  w.u16(static_cast<std::uint16_t>(h.key_cols.size()));
  for (int c : h.key_cols) w.u16(static_cast<std::uint16_t>(c));
  w.u8(h.post.enabled ? 1 : 0);
  for (double s : h.post.strength) w.f64(s);
  return w.take();
}

StreamHeader decode_header(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "GEOM");
  StreamHeader h;
  h.rows = r.u16();
  h.cols = r.u16();
  h.ei_size = r.u16();
  h.interval = r.u16();
  h.gop = r.u8();
  h.cb_y = r.u8();
  h.cb_uv = r.u8();
  h.uv_size = r.u8();
  h.lambda = r.f64();
  h.key_rows.resize(r.u16());
  for (auto& v : h.key_rows) v = r.u16();
  h.key_cols.resize(r.u16());
  for (auto& v : h.key_cols) v = r.u16();
  const std::uint8_t pf = r.u8();
  if (pf > 1) r.fail("invalid post-filter flag");
  h.post.enabled = pf == 1;
  for (auto& s : h.post.strength) {
    s = r.f64();
    if (!std::isfinite(s) || s < 0) r.fail("invalid post-filter strength");
  }
  r.expect_end();
  if (h.rows < 1 || h.cols < 1 || h.ei_size < 8 || h.interval < 1 || h.gop < 1) r.fail("invalid geometry");
  if (h.uv_size != (h.ei_size + 1) / 2) r.fail("chroma tile size does not match EI size");
  if (!std::isfinite(h.lambda) || h.lambda < 0) r.fail("invalid lambda");
  if (!valid_keys(h.key_rows, h.rows) || !valid_keys(h.key_cols, h.cols)) r.fail("invalid key-EI selection");
  try {
    partition_axis(h.ei_size, h.cb_y);
    partition_axis(h.uv_size, h.cb_uv);
  } catch (const InvalidArgument& e) {
    r.fail(e.what());
  }
  return h;
}

std::vector<PvsBlock> channel_layout(const StreamHeader& h, Channel ch) {
  return block_layout(h.frame_count(), tile_size(h, ch), block_size(h, ch), h.gop);
}

EiaGrid reconstruct_key_eia(const StreamHeader& h, const std::array<QuantizedChannel, 3>& channels, int threads,
                            KeyStages* stages) {
  std::array<std::vector<Plane>, 3> regressed, deblocked, filtered;
  for (Channel ch : kChannels) {
    const int c = static_cast<int>(ch);
    const auto layout = channel_layout(h, ch);
    const auto geom = geometry_of(layout);
    const auto models = dequantize_channel(channels[c], geom);
    regressed[c] = synthesize_frames(models, layout, h.frame_count(), tile_size(h, ch), threads);
    deblocked[c] = regressed[c];
    for (auto& t : deblocked[c]) deblock_tile(t, block_size(h, ch));
    filtered[c] = deblocked[c];
    if (h.post.enabled) {
      for (auto& t : filtered[c]) post_filter_tile(t, h.post.strength[c]);
    }
  }
  if (stages) {
    stages->regressed = assemble_upsampled(h, regressed);
    stages->deblocked = assemble_upsampled(h, deblocked);
    stages->filtered = assemble_upsampled(h, filtered);
    return stages->filtered;
  }
  return assemble_upsampled(h, filtered);
}

EncodeResult encode_eia(const RgbImage& image, int rows, int cols, int ei_size, const EncoderOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const CodecConfig& cfg = opt.config;
  if (cfg.lambda < 0 || !std::isfinite(cfg.lambda)) throw InvalidArgument("lambda must be a non-negative number");
  if (cfg.interval < 1) throw InvalidArgument("interval must be >= 1");
  if (cfg.gop < 1 || cfg.gop > 255) throw InvalidArgument("gop must lie in [1, 255]");
  EncodeResult res;
  res.source = rgb_to_yuv(image, rows, cols, ei_size);
  res.shadow = fit_shadow_model(res.source).model;
  res.parallax = detect_parallax(res.source, opt.threads);

  const int max_iv = max_interval(res.parallax, ei_size);
  if (cfg.interval > max_iv) {
    throw InvalidArgument("interval " + std::to_string(cfg.interval) + " violates interval x max offset (" +
                          std::to_string(res.parallax.max_offset()) + ") <= " + std::to_string(ei_size) +
                          "; the largest legal interval is " + std::to_string(max_iv));
  }
  const EiaGrid key = extract_key_eia(res.source, cfg.interval);

  StreamHeader& h = res.header;
  h.rows = rows;
  h.cols = cols;
  h.ei_size = ei_size;
  h.interval = cfg.interval;
  h.gop = cfg.gop;
  h.cb_y = cfg.cb_y;
  h.uv_size = (ei_size + 1) / 2;
  h.cb_uv = cfg.cb_uv == cfg.uv_ei_size ? h.uv_size : cfg.cb_uv;
  h.lambda = cfg.lambda;
  h.key_rows = key.row_ids;
  h.key_cols = key.col_ids;
  h.post = opt.post;

  const auto order = serpentine_scan(key);
  for (Channel ch : kChannels) {
    const int c = static_cast<int>(ch);
    std::vector<Plane> frames;
    frames.reserve(order.size());
    for (const auto& e : order) {
      Plane t = key.ei(ch, e.row - 1, e.col - 1);
      frames.push_back(ch == Channel::Y ? t : downsample_uv(t));
    }
    auto blocks = channel_layout(h, ch);
    RdoConfig rc = RdoConfig::for_channel(ch, cfg.lambda);
    rc.kind = ch == Channel::Y ? opt.y_kernel : opt.uv_kernel;
    std::vector<MixtureModel> models(blocks.size());
    std::vector<double> dist(blocks.size());
    parallel_for(blocks.size(), opt.threads, [&](std::size_t b) {
      gather_samples(blocks[b], frames);
      RdoResult r = select_model_count(blocks[b], rc, opt.seed, 1);
      dist[b] = r.distortion[r.chosen_k - 1];
      models[b] = std::move(r.fit.model);
      blocks[b].samples.clear();
      blocks[b].samples.shrink_to_fit();
    });
    ChannelStats& st = res.stats.channels[c];
    st.blocks = blocks.size();
    st.k_histogram.assign(rc.max_k, 0);
    for (std::size_t b = 0; b < models.size(); ++b) {
      ++st.k_histogram[models[b].size() - 1];
      st.distortion += dist[b];
    }
    res.channels[c] = quantize_channel(ch, cfg.lambda, models, &st.clamped);
    st.raw_bits = raw_bits(res.channels[c]);
  }

  const auto sections = build_sections(h, res.shadow, res.parallax, res.channels);
  res.bitstream = write_container(sections);
  res.key_reconstruction = reconstruct_key_eia(h, res.channels, opt.threads);

  EncodeStats& s = res.stats;
  s.rows = rows;
  s.cols = cols;
  s.ei_size = ei_size;
  s.interval = cfg.interval;
  s.max_interval = max_iv;
  s.lambda = cfg.lambda;
  s.key_rows = static_cast<int>(h.key_rows.size());
  s.key_cols = static_cast<int>(h.key_cols.size());
  s.total_bytes = res.bitstream.size();
  s.side_bytes = s.total_bytes;
  for (int c = 0; c < 3; ++c) {
    s.channels[c].bytes = sections[3 + c].payload.size();
    s.side_bytes -= s.channels[c].bytes;
  }
  s.bpp = static_cast<double>(s.total_bytes) * 8.0 / (static_cast<double>(rows) * cols * ei_size * ei_size);
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

DecodeResult parse_stream(std::span<const std::uint8_t> bytes) {
  const auto sections = read_container(bytes);
  for (std::size_t i = 0; i < 6; ++i) {
    if (i >= sections.size()) throw ContainerError(std::string("missing section ") + kSectionOrder[i]);
    if (sections[i].tag != kSectionOrder[i]) {
      throw ContainerError("expected section " + std::string(kSectionOrder[i]) + ", found " + sections[i].tag);
    }
  }
  if (sections.size() > 6) throw ContainerError("unexpected section " + sections[6].tag);

  DecodeResult d;
  d.header = decode_header(sections[0].payload);
  d.shadow = decode_shadow(sections[1].payload);
  d.parallax = decode_parallax(sections[2].payload);
  if (d.parallax.rows != d.header.rows || d.parallax.cols != d.header.cols) {
    throw PayloadError("PARX", "offset matrices do not match the EIA geometry");
  }
  for (Channel ch : kChannels) {
    const int c = static_cast<int>(ch);
    d.channels[c] = decode_channel(sections[3 + c].payload, ch, kChannelTags[c]);
    const auto layout = channel_layout(d.header, ch);
    if (d.channels[c].blocks.size() != layout.size()) {
      throw PayloadError(kChannelTags[c], "block count " + std::to_string(d.channels[c].blocks.size()) +
                                               " does not match the " + std::to_string(layout.size()) +
                                               " blocks of the geometry");
    }
  }
  return d;
}

DecodeResult decode_eia(std::span<const std::uint8_t> bytes, int threads) {
  DecodeResult d = parse_stream(bytes);
  d.key_eia = reconstruct_key_eia(d.header, d.channels, threads, &d.stages);
  try {
    d.eia = reconstruct_full_eia(d.key_eia, d.parallax, d.shadow, threads);
  } catch (const InvalidArgument& e) {
    throw PayloadError("PARX", e.what());
  }
  d.image = yuv_to_rgb(d.eia);
  return d;
}

std::vector<std::uint8_t> reencode(const DecodeResult& d) {
  return write_container(build_sections(d.header, d.shadow, d.parallax, d.channels));
}

std::string stats_json(const EncodeStats& s) {
  nlohmann::ordered_json j;
  j["schema_version"] = kStatsSchemaVersion;
  j["bitstream_version"] = kBitstreamVersion;
  j["geometry"] = {{"rows", s.rows}, {"cols", s.cols}, {"ei_size", s.ei_size}};
  j["interval"] = s.interval;
  j["max_interval"] = s.max_interval;
  j["lambda"] = s.lambda;
  j["key_eia"] = {{"rows", s.key_rows}, {"cols", s.key_cols}};
  j["total_bytes"] = s.total_bytes;
  j["side_bytes"] = s.side_bytes;
  j["bpp"] = s.bpp;
  for (Channel ch : kChannels) {
    const auto& c = s.channels[static_cast<int>(ch)];
    j["channels"][channel_name(ch)] = {{"bytes", c.bytes},           {"raw_bits", c.raw_bits},
                                       {"blocks", c.blocks},         {"k_histogram", c.k_histogram},
                                       {"clamped", c.clamped},       {"distortion", c.distortion}};
  }
  j["seconds"] = s.seconds;
  return j.dump(2);
}

}  // namespace emr4d
