//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "unimomo/eqnet.hpp"
#include "unimomo/errors.hpp"

namespace unimomo {

namespace {

bool finite3(const Vec3& v) {
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

bool finite_row(const Tensor& t, std::size_t row) {
  for (std::size_t j = 0; j < t.cols(); ++j)
    if (!std::isfinite(t(row, j)))
      return false;
  return true;
}

}  // namespace

EqNet::EqNet(ParamStore& store, const std::string& prefix,
             const EqNetConfig& cfg, RandomStream& rng)
    : cfg_(cfg) {
  cfg_.validate();
  const std::size_t f = cfg_.hidden_size;
  const std::size_t vc = cfg_.vector_channels;
  const std::size_t es = cfg_.edge_embed_size;
  const std::size_t edge_in = cfg_.n_rbf + es + 3 * vc;

  type_emb_ = &store.create_linear_weight(prefix + ".type_emb", kNumEdgeTypes,
                                          es, rng);
  layers_.reserve(cfg_.n_layers);
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l) + ".";
    LayerParams lp;
    lp.ln1_gamma = &store.create(p + "ln1.gamma", 1, f);
    lp.ln1_gamma->value.fill(1.0);
    lp.ln1_beta = &store.create(p + "ln1.beta", 1, f);
    lp.wq = &store.create_linear_weight(p + "attn.wq", f, f, rng);
    lp.bq = &store.create(p + "attn.bq", 1, f);
    lp.wk = &store.create_linear_weight(p + "attn.wk", f, f, rng);
    lp.bk = &store.create(p + "attn.bk", 1, f);
    lp.wv = &store.create_linear_weight(p + "attn.wv", f, f, rng);
    lp.bv = &store.create(p + "attn.bv", 1, f);
    lp.wo = &store.create_linear_weight(p + "attn.wo", f, f, rng);
    lp.bo = &store.create(p + "attn.bo", 1, f);
    lp.edge_w = &store.create_linear_weight(p + "edge.w", edge_in, es, rng);
    lp.edge_b = &store.create(p + "edge.b", 1, es);
    lp.logit_w =
        &store.create_linear_weight(p + "attn.logit_w", es, cfg_.n_heads, rng);
    lp.logit_b = &store.create(p + "attn.logit_b", 1, cfg_.n_heads);
    lp.gate_w = &store.create_linear_weight(p + "attn.gate_w", es, f, rng);
    lp.gate_b = &store.create(p + "attn.gate_b", 1, f);
    lp.beta_w =
        &store.create_linear_weight(p + "vec.coef_w", es, 2 * vc, rng);
    lp.beta_b = &store.create(p + "vec.coef_b", 1, 2 * vc);
    lp.vgate_w = &store.create_linear_weight(p + "vec.gate_w", f, vc, rng);
    lp.vgate_b = &store.create(p + "vec.gate_b", 1, vc);
    lp.vmix = &store.create_linear_weight(p + "vec.mix", 2 * vc, vc, rng);
    lp.ln2_gamma = &store.create(p + "ln2.gamma", 1, f);
    lp.ln2_gamma->value.fill(1.0);
    lp.ln2_beta = &store.create(p + "ln2.beta", 1, f);
    lp.ff_w1 = &store.create_linear_weight(p + "ff.w1", f, 2 * f, rng);
    lp.ff_b1 = &store.create(p + "ff.b1", 1, 2 * f);
    lp.ff_w2 = &store.create_linear_weight(p + "ff.w2", 2 * f, f, rng);
    lp.ff_b2 = &store.create(p + "ff.b2", 1, f);
    layers_.push_back(lp);
  }
}

EqNet::TapeOut EqNet::run(Tape& tape, Value scalars, Value vectors,
                          const std::vector<Vec3>& coords,
                          const EdgeList& edges) const {
  const std::size_t n = coords.size();
  const std::size_t f = cfg_.hidden_size;
  const std::size_t vc = cfg_.vector_channels;
  const std::size_t nh = cfg_.n_heads;
  const std::size_t dh = f / nh;

  const Tensor& hs = tape.val(scalars);
  const Tensor& vs = tape.val(vectors);
  if (hs.rows() != n || hs.cols() != f)
    throw ConfigError("eqnet: scalar features must be (n_nodes, hidden_size)");
  if (vs.rows() != 3 * n || vs.cols() != vc)
    throw ConfigError(
        "eqnet: vector features must be (3*n_nodes, vector_channels)");
  for (std::size_t i = 0; i < n; ++i) {
    const bool ok = finite3(coords[i]) && finite_row(hs, i) &&
                    finite_row(vs, 3 * i) && finite_row(vs, 3 * i + 1) &&
                    finite_row(vs, 3 * i + 2);
    if (!ok)
      throw NumericError("eqnet: non-finite input at node " +
                         std::to_string(i));
  }
  const std::size_t ne = edges.size();
  if (edges.dst.size() != ne || edges.type.size() != ne)
    throw ConfigError("eqnet: edge list arrays must have equal length");
  for (std::size_t e = 0; e < ne; ++e) {
    if (edges.src[e] >= n || edges.dst[e] >= n)
      throw DataError("eqnet: edge endpoint out of range");
    if (edges.src[e] == edges.dst[e])
      throw DataError("eqnet: self edges are not allowed");
    if (edges.type[e] < 0 ||
        static_cast<std::size_t>(edges.type[e]) >= kNumEdgeTypes)
      throw DataError("eqnet: edge type id out of range");
  }

  // Geometry-derived constants shared by all layers.
  Value rbf_c, rhat_c;
  std::vector<std::size_t> src_rows, dst_rows, edge_seg3, dst_seg3, type_idx;
  if (ne > 0) {
    Tensor dist(ne, 1);
    Tensor rhat(3 * ne, 1);
    for (std::size_t e = 0; e < ne; ++e) {
      const Vec3& a = coords[edges.dst[e]];
      const Vec3& b = coords[edges.src[e]];
      const Vec3 rel{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
      const double d =
          std::sqrt(rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]);
      dist(e, 0) = d;
      if (d > 1e-12) {
        rhat(3 * e, 0) = rel[0] / d;
        rhat(3 * e + 1, 0) = rel[1] / d;
        rhat(3 * e + 2, 0) = rel[2] / d;
      }
    }
    rbf_c = tape.rbf(tape.constant(std::move(dist)), cfg_.n_rbf, cfg_.cutoff);
    rhat_c = tape.constant(std::move(rhat));
    src_rows = rows3(edges.src);
    dst_rows = rows3(edges.dst);
    edge_seg3 = replicate3(ne);
    dst_seg3.reserve(3 * ne);
    for (std::size_t e = 0; e < ne; ++e)
      for (std::size_t k = 0; k < 3; ++k)
        dst_seg3.push_back(3 * edges.dst[e] + k);
    type_idx.assign(edges.type.begin(), edges.type.end());
  }

  // Column f of the (n, f) attention tensors belongs to head f / dh; this
  // 0/1 matrix sums each head's columns, matching repeat_cols' layout.
  Tensor head_sum_t(f, nh);
  for (std::size_t j = 0; j < f; ++j)
    head_sum_t(j, j / dh) = 1.0;
  const Value head_sum = tape.constant(std::move(head_sum_t));

  Value h = scalars;
  Value v = vectors;
  const std::vector<std::size_t> node_rep = replicate3(n);

  for (const LayerParams& lp : layers_) {
    const Value hn = tape.layer_norm(h, tape.param(*lp.ln1_gamma),
                                     tape.param(*lp.ln1_beta));
    Value dv;  // (3n, vc) aggregated vector update
    if (ne > 0) {
      // Invariant edge features: distance RBF, edge-type embedding, and the
      // vector-channel inner products <v_src, v_dst>, <v_src, rhat>,
      // <v_dst, rhat>.
      const Value vsrc = tape.gather_rows(v, src_rows);
      const Value vdst = tape.gather_rows(v, dst_rows);
      const Value vdot =
          tape.segment_sum(tape.mul(vsrc, vdst), edge_seg3, ne);
      const Value psrc =
          tape.segment_sum(tape.mul_colvec(vsrc, rhat_c), edge_seg3, ne);
      const Value pdst =
          tape.segment_sum(tape.mul_colvec(vdst, rhat_c), edge_seg3, ne);
      const Value temb = tape.gather_rows(tape.param(*type_emb_), type_idx);
      const Value efeat = tape.silu(
          tape.linear(tape.concat_cols({rbf_c, temb, vdot, psrc, pdst}),
                      tape.param(*lp.edge_w), tape.param(*lp.edge_b)));

      // Multi-head attention with edge-conditioned logits and gated messages.
      const Value q =
          tape.linear(hn, tape.param(*lp.wq), tape.param(*lp.bq));
      const Value k = tape.linear(hn, tape.param(*lp.wk), tape.param(*lp.bk));
      const Value msgv =
          tape.linear(hn, tape.param(*lp.wv), tape.param(*lp.bv));
      const Value qk = tape.matmul(
          tape.mul(tape.gather_rows(q, edges.dst), tape.gather_rows(k, edges.src)),
          head_sum);
      const Value logits = tape.add(
          tape.scale(qk, 1.0 / std::sqrt(static_cast<double>(dh))),
          tape.linear(efeat, tape.param(*lp.logit_w), tape.param(*lp.logit_b)));
      const Value attn = tape.segment_softmax(logits, edges.dst, n);
      const Value gate = tape.sigmoid(
          tape.linear(efeat, tape.param(*lp.gate_w), tape.param(*lp.gate_b)));
      const Value msg =
          tape.mul(tape.mul(tape.gather_rows(msgv, edges.src), gate),
                   tape.repeat_cols(attn, dh));
      const Value h_att = tape.segment_sum(msg, edges.dst, n);
      h = tape.add(h,
                   tape.linear(h_att, tape.param(*lp.wo), tape.param(*lp.bo)));

      // Per-edge vector contribution: coef1 * v_src + coef2 * rhat, both
      // coefficients invariant functions of the edge features.
      const Value coef = tape.linear(efeat, tape.param(*lp.beta_w),
                                     tape.param(*lp.beta_b));
      const Value c1 = tape.gather_rows(tape.slice_cols(coef, 0, vc), edge_seg3);
      const Value c2 =
          tape.gather_rows(tape.slice_cols(coef, vc, 2 * vc), edge_seg3);
      const Value contrib =
          tape.add(tape.mul(vsrc, c1), tape.mul_colvec(c2, rhat_c));
      dv = tape.segment_mean(contrib, dst_seg3, 3 * n);
    } else {
      dv = tape.constant(Tensor(3 * n, vc));
    }

    // Gated, bias-free channel mixing keeps the vector path equivariant.
    const Value vgate = tape.gather_rows(
        tape.sigmoid(tape.linear(hn, tape.param(*lp.vgate_w),
                                 tape.param(*lp.vgate_b))),
        node_rep);
    v = tape.add(
        v, tape.mul(vgate, tape.matmul(tape.concat_cols({v, dv}),
                                       tape.param(*lp.vmix))));

    const Value hn2 = tape.layer_norm(h, tape.param(*lp.ln2_gamma),
                                      tape.param(*lp.ln2_beta));
    const Value ff = tape.linear(
        tape.silu(tape.linear(hn2, tape.param(*lp.ff_w1), tape.param(*lp.ff_b1))),
        tape.param(*lp.ff_w2), tape.param(*lp.ff_b2));
    h = tape.add(h, ff);
  }

  return TapeOut{h, v};
}

EqFeatures EqNet::forward(const EqFeatures& in, const EdgeList& edges) const {
  Tape tape;
  const Value s = tape.constant(in.scalars);
  const Value v = tape.constant(in.vectors);
  const TapeOut out = run(tape, s, v, in.coords, edges);
  EqFeatures result;
  result.scalars = tape.val(out.scalars);
  result.vectors = tape.val(out.vectors);
  result.coords = in.coords;
  return result;
}

}  // namespace unimomo
