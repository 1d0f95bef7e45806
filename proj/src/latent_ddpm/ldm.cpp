//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "unimomo/errors.hpp"
#include "unimomo/latent_ddpm.hpp"

namespace unimomo {

std::size_t LatentState::generated_count() const {
  std::size_t g = 0;
  for (int m : mask) g += (m == 1);
  return g;
}

std::vector<std::size_t> LatentState::generated_rows() const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] == 1) rows.push_back(i);
  return rows;
}

void LatentState::validate() const {
  if (u.cols() < 4)
    throw DataError("latent state: width must be latent_dim + 3");
  if (mask.size() != u.rows() || prompt.size() != u.rows())
    throw DataError("latent state: mask and prompt need one entry per row");
  for (int m : mask)
    if (m != 0 && m != 1)
      throw DataError("latent state: mask entries must be 0 or 1");
  for (int p : prompt)
    if (p != 0 && p != 1)
      throw DataError("latent state: prompt entries must be 0 or 1");
}

namespace {

void check_prompts(const std::vector<int>& prompts, std::size_t n,
                   const char* which) {
  if (!prompts.empty() && prompts.size() != n)
    throw DataError(std::string("latent normalize: ") + which +
                    " prompts must have one entry per point");
}

}  // namespace

NormalizedLatents normalize(const std::vector<LatentPoint>& binder,
                            const std::vector<LatentPoint>& site,
                            const std::vector<int>& binder_prompts,
                            const std::vector<int>& site_prompts) {
  if (site.empty()) throw DataError("latent normalize: the site is empty");
  const std::size_t d = site.front().z.size();
  for (const LatentPoint& p : binder)
    if (p.z.size() != d)
      throw DataError("latent normalize: latent widths disagree");
  for (const LatentPoint& p : site)
    if (p.z.size() != d)
      throw DataError("latent normalize: latent widths disagree");
  check_prompts(binder_prompts, binder.size(), "binder");
  check_prompts(site_prompts, site.size(), "site");

  Vec3 center = {0.0, 0.0, 0.0};
  for (const LatentPoint& p : site)
    for (std::size_t a = 0; a < 3; ++a) center[a] += p.zvec[a];
  for (std::size_t a = 0; a < 3; ++a)
    center[a] /= static_cast<double>(site.size());

  NormalizedLatents out;
  out.norm.center = center;
  const double scale = out.norm.scale;
  const std::size_t nb = binder.size();
  const std::size_t n = nb + site.size();
  out.state.u = Tensor(n, d + 3);
  out.state.mask.assign(n, 0);
  out.state.prompt.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const LatentPoint& p = i < nb ? binder[i] : site[i - nb];
    for (std::size_t c = 0; c < d; ++c) out.state.u(i, c) = p.z[c];
    for (std::size_t a = 0; a < 3; ++a)
      out.state.u(i, d + a) = (p.zvec[a] - center[a]) / scale;
    if (i < nb) {
      out.state.mask[i] = 1;
      if (!binder_prompts.empty()) out.state.prompt[i] = binder_prompts[i];
    } else if (!site_prompts.empty()) {
      out.state.prompt[i] = site_prompts[i - nb];
    }
  }
  out.state.validate();
  return out;
}

std::vector<LatentPoint> denormalize(const LatentState& state,
                                     const LatentNormalizer& norm) {
  state.validate();
  if (!(norm.scale > 0.0))
    throw ConfigError("latent normalizer: scale must be positive");
  const std::size_t d = state.u.cols() - 3;
  std::vector<LatentPoint> points(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    LatentPoint& p = points[i];
    p.z.resize(d);
    for (std::size_t c = 0; c < d; ++c) p.z[c] = state.u(i, c);
    for (std::size_t a = 0; a < 3; ++a)
      p.zvec[a] = norm.center[a] + norm.scale * state.u(i, d + a);
    p.mu = p.z;
    p.sigma.assign(d, 1.0);
    p.muvec = p.zvec;
    p.sigmavec = 1.0;
    p.prior_center = p.zvec;
  }
  return points;
}

ForwardSample forward_sample(const LatentState& u0, std::size_t t,
                             const NoiseSchedule& sched, RandomStream& rng,
                             const Tensor* eps_in) {
  u0.validate();
  if (t < 1 || t > sched.T)
    throw ConfigError("forward sample: step " + std::to_string(t) +
                      " outside 1.." + std::to_string(sched.T));
  const std::size_t n = u0.size();
  const std::size_t cols = u0.u.cols();
  if (eps_in && (eps_in->rows() != n || eps_in->cols() != cols))
    throw DataError("forward sample: eps must match the state shape");

  const double ab = sched.alpha_bar(t);
  const double c_sig = std::sqrt(ab);
  const double c_eps = std::sqrt(1.0 - ab);
  ForwardSample out;
  out.ut = u0.u;
  out.eps = Tensor(n, cols);
  for (std::size_t i = 0; i < n; ++i) {
    if (u0.mask[i] != 1) continue;
    for (std::size_t c = 0; c < cols; ++c) {
      const double e = eps_in ? (*eps_in)(i, c) : rng.normal();
      out.eps(i, c) = e;
      out.ut(i, c) = c_sig * u0.u(i, c) + c_eps * e;
    }
  }
  return out;
}

LatentState denoise_step(const LatentState& state, std::size_t t,
                         const DenoiserFn& denoiser, const NoiseSchedule& sched,
                         RandomStream& rng, const Tensor* xi_in) {
  state.validate();
  if (t < 1 || t > sched.T)
    throw ConfigError("denoise step: step " + std::to_string(t) +
                      " outside 1.." + std::to_string(sched.T));
  const std::vector<std::size_t> gen = state.generated_rows();
  const std::size_t g = gen.size();
  const std::size_t cols = state.u.cols();

  const Tensor eps = denoiser(state, t);
  if (eps.rows() != g || eps.cols() != cols)
    throw DataError("denoise step: denoiser output must be one row of width " +
                    std::to_string(cols) + " per generated point");
  for (double v : eps.vec())
    if (!std::isfinite(v))
      throw NumericError("denoise step: non-finite denoiser output at step " +
                         std::to_string(t));
  if (xi_in && t > 1 && (xi_in->rows() != g || xi_in->cols() != cols))
    throw DataError("denoise step: xi must be (n_generated, latent width)");

  const double b = sched.beta(t);
  const double inv_sqrt_a = 1.0 / std::sqrt(sched.alpha(t));
  const double k_eps = b / std::sqrt(1.0 - sched.alpha_bar(t));
  const double sqrt_b = std::sqrt(b);

  LatentState out = state;
  for (std::size_t k = 0; k < g; ++k) {
    const std::size_t i = gen[k];
    for (std::size_t c = 0; c < cols; ++c) {
      double v = (state.u(i, c) - k_eps * eps(k, c)) * inv_sqrt_a;
      if (t > 1) {
        const double xi = xi_in ? (*xi_in)(k, c) : rng.normal();
        v += sqrt_b * xi;
      }
      out.u(i, c) = v;
    }
  }
  return out;
}

void LdmConfig::validate() const {
  net.validate();
  if (latent_dim == 0)
    throw ConfigError("ldm config: latent_dim must be positive");
  if (time_feature_pairs == 0)
    throw ConfigError("ldm config: time_feature_pairs must be positive");
}

void LdmTrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("ldm train: lr must be positive");
  if (!(clip_norm > 0.0))
    throw ConfigError("ldm train: clip_norm must be positive");
  if (epochs == 0) throw ConfigError("ldm train: epochs must be positive");
}

namespace {

LdmConfig checked(const LdmConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

LatentDenoiser::LatentDenoiser(ParamStore& store, const std::string& prefix,
                               const LdmConfig& cfg, RandomStream& rng)
    : cfg_(checked(cfg)), net_(store, prefix + ".net", cfg_.net, rng) {
  const std::size_t F = cfg_.net.hidden_size;
  const std::size_t d = cfg_.latent_dim;
  const std::size_t Tf = 2 * cfg_.time_feature_pairs;
  in_w_ = &store.create_linear_weight(prefix + ".in.w", d, F, rng);
  in_b_ = &store.create(prefix + ".in.b", 1, F);
  ctx_emb_ = &store.create_linear_weight(prefix + ".ctx_emb", 2, F, rng);
  prompt_emb_ = &store.create_linear_weight(prefix + ".prompt_emb", 2, F, rng);
  time_w_ = &store.create_linear_weight(prefix + ".time.w", Tf, F, rng);
  time_b_ = &store.create(prefix + ".time.b", 1, F);
  // Zero output heads: a freshly initialized model predicts zero noise, so
  // the expected training loss starts at the target dimensionality.
  out_w_ = &store.create(prefix + ".out.w", F, d);
  out_b_ = &store.create(prefix + ".out.b", 1, d);
  vecread_ = &store.create(prefix + ".vecread", cfg_.net.vector_channels, 1);
}

LatentDenoiser::EpsOut LatentDenoiser::predict_on_tape(
    Tape& tape, const LatentState& state, std::size_t t,
    const NoiseSchedule& sched) const {
  state.validate();
  if (state.u.cols() != cfg_.latent_dim + 3)
    throw DataError("denoiser: state width disagrees with latent_dim");
  if (t < 1 || t > sched.T)
    throw ConfigError("denoiser: step " + std::to_string(t) + " outside 1.." +
                      std::to_string(sched.T));
  const std::vector<std::size_t> gen = state.generated_rows();
  if (gen.empty()) throw DataError("denoiser: no generated points");

  const std::size_t n = state.size();
  const std::size_t d = cfg_.latent_dim;
  Tensor z(n, d);
  std::vector<Vec3> coords(n);
  std::vector<int> context(n);
  std::vector<std::size_t> ctx_idx(n), prompt_idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) z(i, c) = state.u(i, c);
    coords[i] = {state.u(i, d), state.u(i, d + 1), state.u(i, d + 2)};
    context[i] = state.mask[i] == 1 ? 0 : 1;
    ctx_idx[i] = static_cast<std::size_t>(context[i]);
    prompt_idx[i] = static_cast<std::size_t>(state.prompt[i]);
  }
  const EdgeList edges = build_edges(coords, context, {}, cfg_.net.cutoff);

  Value h =
      tape.linear(tape.constant(z), tape.param(*in_w_), tape.param(*in_b_));
  h = tape.add(h, tape.gather_rows(tape.param(*ctx_emb_), ctx_idx));
  h = tape.add(h, tape.gather_rows(tape.param(*prompt_emb_), prompt_idx));
  const Tensor tf = time_features(
      static_cast<double>(t) / static_cast<double>(sched.T),
      cfg_.time_feature_pairs);
  h = tape.add_rowvec(h, tape.linear(tape.constant(tf), tape.param(*time_w_),
                                     tape.param(*time_b_)));
  Value vec0 = tape.constant(Tensor(3 * n, cfg_.net.vector_channels));
  const EqNet::TapeOut o = net_.run(tape, h, vec0, coords, edges);

  EpsOut r;
  r.state = tape.gather_rows(
      tape.linear(o.scalars, tape.param(*out_w_), tape.param(*out_b_)), gen);
  r.coord = tape.gather_rows(tape.matmul(o.vectors, tape.param(*vecread_)),
                             rows3(gen));
  return r;
}

Tensor LatentDenoiser::predict(const LatentState& state, std::size_t t,
                               const NoiseSchedule& sched) const {
  Tape tape;
  const EpsOut o = predict_on_tape(tape, state, t, sched);
  const Tensor& sv = tape.val(o.state);
  const Tensor& cv = tape.val(o.coord);
  const std::size_t g = sv.rows();
  const std::size_t d = cfg_.latent_dim;
  Tensor out(g, d + 3);
  for (std::size_t k = 0; k < g; ++k) {
    for (std::size_t c = 0; c < d; ++c) out(k, c) = sv(k, c);
    for (std::size_t a = 0; a < 3; ++a) out(k, d + a) = cv(3 * k + a, 0);
  }
  return out;
}

DenoiserFn LatentDenoiser::fn(const NoiseSchedule& sched) const {
  NoiseSchedule copy = sched;
  return [this, copy = std::move(copy)](const LatentState& s, std::size_t t) {
    return predict(s, t, copy);
  };
}

std::vector<LatentPoint> sample_ldm(const std::vector<LatentPoint>& site,
                                    std::size_t n_blocks,
                                    const std::vector<int>& prompts,
                                    const DenoiserFn& denoiser,
                                    const NoiseSchedule& sched,
                                    RandomStream& rng,
                                    const SampleNoise* noise) {
  if (n_blocks == 0)
    throw ConfigError("sample: n_blocks must be at least 1");
  sched.validate();
  if (site.empty()) throw DataError("sample: the site is empty");
  if (prompts.size() != n_blocks)
    throw DataError("sample: prompts must have one entry per sampled block");

  const NormalizedLatents ctx = normalize({}, site);
  const std::size_t cols = ctx.state.u.cols();
  Tensor init =
      noise ? noise->init : rng.normal_tensor(n_blocks, cols);
  if (noise) {
    if (init.rows() != n_blocks || init.cols() != cols)
      throw DataError("sample: init noise must be (n_blocks, latent width)");
    if (noise->xi.size() != sched.T)
      throw DataError("sample: need one xi tensor per schedule step");
  }

  LatentState st;
  const std::size_t n = n_blocks + site.size();
  st.u = Tensor(n, cols);
  st.mask.assign(n, 0);
  st.prompt.assign(n, 0);
  for (std::size_t i = 0; i < n_blocks; ++i) {
    for (std::size_t c = 0; c < cols; ++c) st.u(i, c) = init(i, c);
    st.mask[i] = 1;
    st.prompt[i] = prompts[i];
  }
  for (std::size_t j = 0; j < site.size(); ++j)
    for (std::size_t c = 0; c < cols; ++c)
      st.u(n_blocks + j, c) = ctx.state.u(j, c);
  st.validate();

  for (std::size_t t = sched.T; t > 0; --t) {
    const Tensor* xi = (noise && t > 1) ? &noise->xi[t - 1] : nullptr;
    st = denoise_step(st, t, denoiser, sched, rng, xi);
  }

  std::vector<LatentPoint> points = denormalize(st, ctx.norm);
  points.resize(n_blocks);
  return points;
}

}  // namespace unimomo
