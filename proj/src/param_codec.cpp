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

#include "emr4d/param_codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "emr4d/aac.hpp"
#include "emr4d/bytes.hpp"
#include "emr4d/emr.hpp"
#include "emr4d/error.hpp"

namespace emr4d {

namespace {

constexpr int idx(Param p) { return static_cast<int>(p); }

bool is_multi(int k) { return k > 1; }

const std::array<int, kParamCount>& row(const BitTable& t, int k) { return is_multi(k) ? t.multi : t.single; }

}  // namespace

const char* param_name(Param p) {
  static constexpr const char* kNames[kParamCount] = {"mu_x", "mu_y", "mu_z", "mu_w", "u11",      "u12",      "u13",
                                                      "u22",  "u23",  "u33",  "sigma_xw", "sigma_yw", "sigma_zw", "alpha"};
  return kNames[idx(p)];
}

Mat3 CholeskyFactors::upper() const {
  Mat3 u;
  u << u11, u12, u13, 0, u22, u23, 0, 0, u33;
  return u;
}

Mat3 CholeskyFactors::product() const {
  const Mat3 u = upper();
  return u.transpose() * u;
}

CholeskyFactors cholesky_r(const Mat3& r) {
  const Mat3 s = 0.5 * (r + r.transpose());
  const double tol = 1e-9 * std::max(1.0, std::abs(s.trace()));
  Eigen::SelfAdjointEigenSolver<Mat3> eig(s, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues()(0) < -tol) throw InvalidArgument("position covariance is not positive semi-definite");
  // Plain outer-product Cholesky with zero pivots allowed, so rank-deficient
  // matrices still factor.
  CholeskyFactors f;
  const double tiny = 1e-300;
  f.u11 = std::sqrt(std::max(s(0, 0), 0.0));
  if (f.u11 > tiny) {
    f.u12 = s(0, 1) / f.u11;
    f.u13 = s(0, 2) / f.u11;
  }
  f.u22 = std::sqrt(std::max(s(1, 1) - f.u12 * f.u12, 0.0));
  if (f.u22 > tiny) f.u23 = (s(1, 2) - f.u12 * f.u13) / f.u22;
  f.u33 = std::sqrt(std::max(s(2, 2) - f.u13 * f.u13 - f.u23 * f.u23, 0.0));
  return f;
}

int BitTable::multi_bits() const {
  int s = 0;
  for (int b : multi) s += b;
  return s;
}

int BitTable::single_bits() const {
  int s = 0;
  for (int b : single) s += b;
  return s;
}

int BitTable::block_bits(int k) const {
  if (k < 1 || k > max_models()) throw InvalidArgument("model count out of range: " + std::to_string(k));
  return nm_bits + (k == 1 ? single_bits() : k * multi_bits());
}

BitTable bit_table_for_mu_z(ChannelClass cls, int mu_z_bits) {
  if (mu_z_bits != 4 && mu_z_bits != 5) throw InvalidArgument("mu_z width must be 4 or 5");
  BitTable t;
  if (cls == ChannelClass::Y19) {
    t.nm_bits = 4;
    t.multi = {4, 4, mu_z_bits, 6, 7, 6, 6, 7, 6, 7, 6, 6, 5, 6};
    t.single = {0, 0, 0, 6, 0, 0, 0, 0, 0, 0, 6, 6, 5, 0};
  } else {
    t.nm_bits = 3;
    t.multi = {4, 4, mu_z_bits, 5, 4, 3, 3, 4, 3, 4, 0, 0, 0, 0};
    t.single = {0, 0, 0, 5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  }
  return t;
}

BitTable bit_table(ChannelClass cls, double lambda) { return bit_table_for_mu_z(cls, lambda >= 300.0 ? 4 : 5); }

QuantMark make_mark(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) throw InvalidArgument("invalid quantisation range");
  float m = static_cast<float>(lo);
  if (static_cast<double>(m) > lo) m = std::nextafter(m, -std::numeric_limits<float>::infinity());
  float e = static_cast<float>(hi - static_cast<double>(m));
  if (e < 0) e = 0;
  while (static_cast<double>(m) + static_cast<double>(e) < hi) e = std::nextafter(e, std::numeric_limits<float>::infinity());
  return {m, e};
}

QuantMark make_mark(double lo, double hi, int bits) {
  const QuantMark plain = make_mark(lo, hi);
  if (!(lo < 0.0 && hi > 0.0) || bits < 2 || bits > 16) return plain;
  const int levels = (1 << bits) - 1;
  // Candidate zero positions, smallest step first.
  std::vector<std::pair<double, int>> cand;
  for (int a = 1; a < levels; ++a) cand.emplace_back(std::max(-lo / a, hi / (levels - a)), a);
  std::sort(cand.begin(), cand.end());
  for (const auto& [step, below] : cand) {
    // Short mantissa so that below * s and levels * s are exact floats.
    int ex = 0;
    std::frexp(step, &ex);
    const double quantum = std::ldexp(1.0, ex - 16);
    double s = std::ceil(step / quantum) * quantum;
    for (int tries = 0; tries < 4; ++tries, s += quantum) {
      const QuantMark m{static_cast<float>(-below * s), static_cast<float>(levels * s)};
      if (static_cast<double>(m.min) > lo || static_cast<double>(m.min) + static_cast<double>(m.span) < hi) continue;
      if (dequantize(static_cast<std::uint32_t>(below) + 1, m, bits) == 0.0) return m;
    }
  }
  return plain;
}

QuantMark make_frame_mark(double lo, double hi, int bits) {
  const QuantMark plain = make_mark(lo, hi);
  if (bits < 1 || bits > 16 || !std::isfinite(lo) || !std::isfinite(hi)) return plain;
  const double base = std::floor(lo);
  const double top = std::ceil(hi);
  const int levels = (1 << bits) - 1;
  if (top <= base || top - base > levels || std::abs(base) > 1e6) return plain;
  const auto hits_integers = [&](const QuantMark& m, int per_unit) {
    for (int k = 0; k <= levels; k += per_unit) {
      const double v = dequantize(static_cast<std::uint32_t>(k) + 1, m, bits);
      if (v != base + k / per_unit) return false;
    }
    return true;
  };
  int r = static_cast<int>(levels / (top - base));
  const QuantMark m{static_cast<float>(base), static_cast<float>(static_cast<double>(levels) / r)};
  if (hits_integers(m, r)) return m;
  while (r & (r - 1)) r &= r - 1;
  const QuantMark p2{static_cast<float>(base), static_cast<float>(static_cast<double>(levels) / r)};
  return hits_integers(p2, r) ? p2 : plain;
}

std::uint32_t quantize(double value, const QuantMark& mark, int bits, std::size_t* clamped) {
  if (bits < 1 || bits > 16) throw InvalidArgument("quantiser width out of range");
  const std::uint32_t levels = (1u << bits) - 1;
  const double m = mark.min;
  const double e = mark.span;
  double t = e > 0 ? (value - m) / e * levels : 0.0;
  const bool outside = e > 0 ? (t < -1e-9 || t > levels + 1e-9) : std::abs(value - m) > 1e-9 * std::max(1.0, std::abs(m));
  if (outside && clamped) ++*clamped;
  if (!(t > 0)) t = 0;
  if (t > levels) t = levels;
  // Nearest level; an exact half goes down.
  auto k = static_cast<std::uint32_t>(std::ceil(t - 0.5));
  if (k > levels) k = levels;
  return k + 1;
}

double dequantize(std::uint32_t k, const QuantMark& mark, int bits) {
  const std::uint32_t levels = (1u << bits) - 1;
  if (k < 1 || k > levels + 1) throw InvalidArgument("quantiser index out of range");
  return static_cast<double>(mark.min) + static_cast<double>(mark.span) * (static_cast<double>(k - 1) / levels);
}

std::array<double, kParamCount> coded_values(const ExpertParams& e) {
  std::array<double, kParamCount> v{};
  v[idx(Param::MuX)] = e.mu(0);
  v[idx(Param::MuY)] = e.mu(1);
  v[idx(Param::MuZ)] = e.mu(2);
  v[idx(Param::MuW)] = e.mu(3);
  const auto f = cholesky_r(e.r());
  v[idx(Param::U11)] = f.u11;
  v[idx(Param::U12)] = f.u12;
  v[idx(Param::U13)] = f.u13;
  v[idx(Param::U22)] = f.u22;
  v[idx(Param::U23)] = f.u23;
  v[idx(Param::U33)] = f.u33;
  const Vec3 sw = e.sigma_w();
  v[idx(Param::SigmaXW)] = sw(0);
  v[idx(Param::SigmaYW)] = sw(1);
  v[idx(Param::SigmaZW)] = sw(2);
  v[idx(Param::Alpha)] = e.alpha;
  return v;
}

MixtureModel codable_projection(const MixtureModel& m, Channel ch) {
  if (ch == Channel::Y) return m;
  MixtureModel p = m;
  const double a = 1.0 / static_cast<double>(p.experts.size());
  for (auto& e : p.experts) {
    if (p.experts.size() > 1) e.alpha = a;
    e.sigma.block<3, 1>(0, 3).setZero();
    e.sigma.block<1, 3>(3, 0).setZero();
  }
  return p;
}

QuantizedChannel quantize_channel(Channel ch, double lambda, std::span<const MixtureModel> models, std::size_t* clamped) {
  QuantizedChannel q;
  q.channel = ch;
  q.kind = models.empty() ? (ch == Channel::Y ? KernelKind::Epanechnikov : KernelKind::Gaussian) : models.front().kind;
  const BitTable table = bit_table(channel_class(ch), lambda);
  q.mu_z_bits = table.multi[idx(Param::MuZ)];

  std::vector<std::vector<std::array<double, kParamCount>>> values(models.size());
  std::array<double, kParamCount> lo, hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t b = 0; b < models.size(); ++b) {
    const auto& m = models[b];
    const int k = static_cast<int>(m.size());
    if (k < 1 || k > table.max_models()) throw InvalidArgument("block model count out of range: " + std::to_string(k));
    if (m.kind != q.kind) throw InvalidArgument("mixed kernel kinds within one channel");
    const auto& bits = row(table, k);
    for (const auto& e : m.experts) {
      values[b].push_back(coded_values(e));
      for (int p = 0; p < kParamCount; ++p) {
        if (bits[p] == 0) continue;
        lo[p] = std::min(lo[p], values[b].back()[p]);
        hi[p] = std::max(hi[p], values[b].back()[p]);
      }
    }
  }
  for (int p = 0; p < kParamCount; ++p) {
    if (lo[p] > hi[p]) continue;
    const int b = std::max(table.multi[p], table.single[p]);
    q.marks[p] = p == idx(Param::MuZ) ? make_frame_mark(lo[p], hi[p], b) : make_mark(lo[p], hi[p], b);
  }

  q.blocks.resize(models.size());
  for (std::size_t b = 0; b < models.size(); ++b) {
    auto& qb = q.blocks[b];
    qb.k = static_cast<int>(models[b].size());
    const auto& bits = row(table, qb.k);
    for (const auto& v : values[b]) {
      std::array<std::uint32_t, kParamCount> ix{};
      for (int p = 0; p < kParamCount; ++p) {
        if (bits[p] > 0) ix[p] = quantize(v[p], q.marks[p], bits[p], clamped);
      }
      qb.index.push_back(ix);
    }
  }
  return q;
}

std::vector<MixtureModel> dequantize_channel(const QuantizedChannel& q, std::span<const BlockGeometry> geometry) {
  if (geometry.size() != q.blocks.size()) {
    throw InvalidArgument("block geometry count " + std::to_string(geometry.size()) + " does not match " +
                          std::to_string(q.blocks.size()) + " coded blocks");
  }
  const BitTable table = q.table();
  const bool luma = q.channel == Channel::Y;
  std::vector<MixtureModel> out(q.blocks.size());
  for (std::size_t b = 0; b < q.blocks.size(); ++b) {
    const auto& qb = q.blocks[b];
    const auto& bits = row(table, qb.k);
    auto deq = [&](const std::array<std::uint32_t, kParamCount>& ix, Param p) {
      return dequantize(ix[idx(p)], q.marks[idx(p)], bits[idx(p)]);
    };
    MixtureModel& m = out[b];
    m.kind = q.kind;
    if (qb.k == 1) {
      const auto& g = geometry[b];
      ExpertParams e = single_kernel_geometry(g.width, g.height, g.frames);
      e.alpha = 1.0;
      const auto& ix = qb.index.at(0);
      e.mu(3) = deq(ix, Param::MuW);
      Vec3 sw = Vec3::Zero();
      if (luma) sw << deq(ix, Param::SigmaXW), deq(ix, Param::SigmaYW), deq(ix, Param::SigmaZW);
      e.sigma.block<3, 1>(0, 3) = sw;
      e.sigma.block<1, 3>(3, 0) = sw.transpose();
      e.sigma(3, 3) = 0;
      m.experts.push_back(e);
      continue;
    }
    double alpha_sum = 0;
    for (const auto& ix : qb.index) {
      ExpertParams e;
      e.mu << deq(ix, Param::MuX), deq(ix, Param::MuY), deq(ix, Param::MuZ), deq(ix, Param::MuW);
      CholeskyFactors f;
      f.u11 = deq(ix, Param::U11);
      f.u12 = deq(ix, Param::U12);
      f.u13 = deq(ix, Param::U13);
      f.u22 = deq(ix, Param::U22);
      f.u23 = deq(ix, Param::U23);
      f.u33 = deq(ix, Param::U33);
      e.sigma.setZero();
      e.sigma.topLeftCorner<3, 3>() = f.product();
      if (luma) {
        Vec3 sw;
        sw << deq(ix, Param::SigmaXW), deq(ix, Param::SigmaYW), deq(ix, Param::SigmaZW);
        e.sigma.block<3, 1>(0, 3) = sw;
        e.sigma.block<1, 3>(3, 0) = sw.transpose();
        e.alpha = deq(ix, Param::Alpha);
      } else {
        e.alpha = 1.0 / qb.k;
      }
      alpha_sum += e.alpha;
      m.experts.push_back(e);
    }
    for (auto& e : m.experts) e.alpha = alpha_sum > 0 ? e.alpha / alpha_sum : 1.0 / qb.k;
  }
  return out;
}

std::size_t raw_bits(const QuantizedChannel& q) {
  const BitTable table = q.table();
  std::size_t total = 0;
  for (const auto& b : q.blocks) total += static_cast<std::size_t>(table.block_bits(b.k));
  return total;
}

std::vector<std::uint8_t> encode_channel(const QuantizedChannel& q) {
  const BitTable table = q.table();
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(q.kind));
  w.u8(static_cast<std::uint8_t>(q.mu_z_bits));
  w.u32(static_cast<std::uint32_t>(q.blocks.size()));
  for (int p = 0; p < kParamCount; ++p) {
    if (table.multi[p] == 0 && table.single[p] == 0) continue;
    w.f32(q.marks[p].min);
    w.f32(q.marks[p].span);
  }
  AacEncoder enc;
  const std::uint32_t nm_alphabet = 1u << table.nm_bits;
  for (const auto& b : q.blocks) {
    enc.put(static_cast<std::uint32_t>(b.k - 1), nm_alphabet);
    const auto& bits = row(table, b.k);
    if (b.index.size() != static_cast<std::size_t>(b.k)) throw InvalidArgument("expert count does not match k");
    for (const auto& ix : b.index) {
      for (int p = 0; p < kParamCount; ++p) {
        if (bits[p] > 0) enc.put(ix[p] - 1, 1u << bits[p]);
      }
    }
  }
  w.bytes(enc.finish());
  return w.take();
}

QuantizedChannel decode_channel(std::span<const std::uint8_t> bytes, Channel ch, const char* section) {
  ByteReader r(bytes, section);
  QuantizedChannel q;
  q.channel = ch;
  const std::uint8_t kind = r.u8();
  if (kind > 1) r.fail("unknown kernel kind " + std::to_string(kind));
  q.kind = static_cast<KernelKind>(kind);
  q.mu_z_bits = r.u8();
  if (q.mu_z_bits != 4 && q.mu_z_bits != 5) r.fail("invalid mu_z width " + std::to_string(q.mu_z_bits));
  const std::uint32_t count = r.u32();
  const BitTable table = q.table();
  for (int p = 0; p < kParamCount; ++p) {
    if (table.multi[p] == 0 && table.single[p] == 0) continue;
    q.marks[p].min = r.f32();
    q.marks[p].span = r.f32();
    if (!std::isfinite(q.marks[p].min) || !std::isfinite(q.marks[p].span) || q.marks[p].span < 0) {
      r.fail(std::string("invalid mark for ") + param_name(static_cast<Param>(p)));
    }
  }
  // Every block costs at least one coded symbol; a count far above the
  // payload size can only come from corruption.
  if (count > 64u * (r.remaining() + 16)) r.fail("block count " + std::to_string(count) + " exceeds payload");
  const auto payload = r.rest();
  try {
    AacDecoder dec(payload);
    const std::uint32_t nm_alphabet = 1u << table.nm_bits;
    q.blocks.resize(count);
    for (auto& b : q.blocks) {
      b.k = static_cast<int>(dec.get(nm_alphabet)) + 1;
      const auto& bits = row(table, b.k);
      b.index.resize(b.k);
      for (auto& ix : b.index) {
        ix.fill(0);
        for (int p = 0; p < kParamCount; ++p) {
          if (bits[p] > 0) ix[p] = dec.get(1u << bits[p]) + 1;
        }
      }
    }
  } catch (const StreamError& e) {
    throw PayloadError(section, e.what());
  }
  // The arithmetic decoder reads zeros past the end, so a truncated payload
  // can still decode. Only the exact encoder output is accepted.
  const auto again = encode_channel(q);
  if (!std::equal(again.begin(), again.end(), bytes.begin(), bytes.end())) {
    throw PayloadError(section, "non-canonical payload");
  }
  return q;
}

}  // namespace emr4d
